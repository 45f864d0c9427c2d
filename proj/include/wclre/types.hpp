#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wclre/common.hpp"

namespace wclre {

// Reserved no-relation label.
inline constexpr const char* kNaLabel = "NA";

struct RelationLabel {
  std::string name;

  RelationLabel() = default;
  RelationLabel(std::string n) : name(std::move(n)) {}
  RelationLabel(const char* n) : name(n) {}

  bool is_na() const { return name == kNaLabel; }
  auto operator<=>(const RelationLabel&) const = default;
};

// Half-open token index span [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  auto operator<=>(const Span&) const = default;
};

struct Instance {
  std::vector<std::string> tokens;
  Span head;
  Span tail;
  RelationLabel relation;
  std::optional<double> confidence;

  std::vector<std::string> head_surface() const {
    return {tokens.begin() + static_cast<std::ptrdiff_t>(head.start),
            tokens.begin() + static_cast<std::ptrdiff_t>(head.end)};
  }
  std::vector<std::string> tail_surface() const {
    return {tokens.begin() + static_cast<std::ptrdiff_t>(tail.start),
            tokens.begin() + static_cast<std::ptrdiff_t>(tail.end)};
  }
  bool operator==(const Instance&) const = default;
};

// Marker tokens added around the sentence and both entity spans.
inline constexpr std::size_t kMarkerOverhead = 6;

inline std::size_t marked_length(const Instance& inst) {
  return inst.tokens.size() + kMarkerOverhead;
}

// Directed (head, relation, tail) fact. Identity is case-insensitive on the
// surface token sequences.
struct Triplet {
  std::vector<std::string> head;
  RelationLabel relation;
  std::vector<std::string> tail;

  // Canonical case-folded key; \x1f separates tokens, \x1e separates fields.
  std::string key() const {
    std::string k;
    for (const auto& t : head) {
      k += to_lower(t);
      k.push_back('\x1f');
    }
    k.push_back('\x1e');
    k += relation.name;
    k.push_back('\x1e');
    for (const auto& t : tail) {
      k += to_lower(t);
      k.push_back('\x1f');
    }
    return k;
  }
  bool same_as(const Triplet& o) const { return key() == o.key(); }
};

struct BagMember {
  Instance instance;
  double confidence = 1.0;
};

// All instances sharing one triplet; the positive-sampling unit.
struct Bag {
  Triplet triplet;
  std::vector<BagMember> members;

  bool is_na() const { return triplet.relation.is_na(); }
};

struct Dataset {
  std::vector<Instance> instances;
  std::vector<RelationLabel> label_set;

  bool has_label(const RelationLabel& r) const {
    for (const auto& l : label_set)
      if (l == r) return true;
    return false;
  }
};

// Recompute the label set as the sorted distinct relations of the instances.
inline void rebuild_label_set(Dataset& ds) {
  std::set<std::string> names;
  for (const auto& inst : ds.instances) names.insert(inst.relation.name);
  ds.label_set.assign(names.begin(), names.end());
}

struct Violation {
  std::size_t index = 0;  // 0-based record index
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  // One violation per line: <line_no>\t<rule>\t<message> (line_no is 1-based).
  std::string to_text() const {
    std::string out;
    for (const auto& v : violations) {
      out += std::to_string(v.index + 1);
      out.push_back('\t');
      out += v.rule;
      out.push_back('\t');
      out += v.message;
      out.push_back('\n');
    }
    return out;
  }
};

// Checks every dataset invariant; violations are report entries, not errors.
// When max_marked_len > 0, instances longer than it (after marker insertion)
// are reported as well.
inline ValidationReport validate_dataset(const Dataset& ds, std::size_t max_marked_len = 0) {
  ValidationReport report;
  auto add = [&](std::size_t i, const char* rule, std::string msg) {
    report.violations.push_back({i, rule, std::move(msg)});
  };
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const Instance& inst = ds.instances[i];
    const std::size_t n = inst.tokens.size();
    if (n == 0) {
      add(i, "empty tokens", "instance has no tokens");
      continue;
    }
    bool spans_ok = true;
    for (const auto& [name, span] : {std::pair{"head", inst.head}, std::pair{"tail", inst.tail}}) {
      if (span.start >= span.end) {
        add(i, "empty span", std::string(name) + " span is empty");
        spans_ok = false;
      } else if (span.end > n) {
        add(i, "span out of bounds", std::string(name) + " span ends past the sentence");
        spans_ok = false;
      }
    }
    if (spans_ok && inst.head.overlaps(inst.tail))
      add(i, "overlapping spans", "head and tail spans overlap");
    if (!ds.has_label(inst.relation))
      add(i, "unknown label", "relation '" + inst.relation.name + "' not in label set");
    if (inst.confidence && (*inst.confidence < 0.0 || *inst.confidence > 1.0))
      add(i, "confidence out of range", "confidence outside [0, 1]");
    if (max_marked_len > 0 && marked_length(inst) > max_marked_len)
      add(i, "sequence too long",
          "marked length " + std::to_string(marked_length(inst)) + " exceeds " +
              std::to_string(max_marked_len));
  }
  return report;
}

}  // namespace wclre
