#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "wclre/types.hpp"

namespace wclre {

struct TripletSet {
  std::vector<Triplet> triplets;  // first-seen extraction order
  // lowercased "head\x1etail" pair -> relations of the triplets on that pair
  std::map<std::string, std::vector<RelationLabel>> pair_index;

  static std::string pair_key(const std::vector<std::string>& head,
                              const std::vector<std::string>& tail) {
    std::string k;
    for (const auto& t : head) {
      k += to_lower(t);
      k.push_back('\x1f');
    }
    k.push_back('\x1e');
    for (const auto& t : tail) {
      k += to_lower(t);
      k.push_back('\x1f');
    }
    return k;
  }
};

struct AlignmentStats {
  std::vector<std::size_t> per_triplet_counts;  // emitted count per triplet (post-cap)
  std::size_t capped_triplets = 0;
  std::size_t total_instances = 0;
  std::size_t na_instances = 0;
};

// Every ordered pair of distinct entity mentions in one sentence yields a
// triplet: the labeled relation where an instance labels that pair, NA
// otherwise. Sentences are grouped by exact token sequence.
inline TripletSet extract_triplets(const Dataset& ha) {
  if (ha.instances.empty()) throw data_error("no source instances");

  // sentence key -> instance indices, in first-seen sentence order
  std::map<std::string, std::size_t> sentence_slot;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::string> order_keys;
  for (std::size_t i = 0; i < ha.instances.size(); ++i) {
    std::string key = join(ha.instances[i].tokens, '\x1f');
    auto [it, inserted] = sentence_slot.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  TripletSet ts;
  std::set<std::string> seen;
  auto emit = [&](Triplet t) {
    std::string k = t.key();
    if (!seen.insert(k).second) return;
    ts.pair_index[TripletSet::pair_key(t.head, t.tail)].push_back(t.relation);
    ts.triplets.push_back(std::move(t));
  };

  for (const auto& group : groups) {
    const auto& tokens = ha.instances[group.front()].tokens;
    // distinct mentions of this sentence, ordered by span
    std::set<Span> mention_set;
    std::map<std::pair<Span, Span>, std::set<std::string>> labeled;
    for (std::size_t idx : group) {
      const Instance& inst = ha.instances[idx];
      mention_set.insert(inst.head);
      mention_set.insert(inst.tail);
      labeled[{inst.head, inst.tail}].insert(inst.relation.name);
    }
    std::vector<Span> mentions(mention_set.begin(), mention_set.end());
    auto surface = [&](const Span& s) {
      return std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(s.start),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(s.end));
    };
    for (const Span& a : mentions) {
      for (const Span& b : mentions) {
        if (a == b) continue;
        auto it = labeled.find({a, b});
        if (it != labeled.end()) {
          for (const auto& rel : it->second) emit({surface(a), RelationLabel(rel), surface(b)});
        } else {
          emit({surface(a), RelationLabel(kNaLabel), surface(b)});
        }
      }
    }
  }
  return ts;
}

namespace detail {

inline bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

// Whitespace tokenization with leading/trailing punctuation detached as
// single-character tokens. Interior punctuation (hyphens, apostrophes) stays.
inline std::vector<std::string> tokenize_chunk(std::string_view chunk,
                                               std::vector<std::string>& out) {
  std::size_t b = 0, e = chunk.size();
  std::vector<std::string> trailing;
  while (b < e && is_ascii_punct(chunk[b])) out.emplace_back(1, chunk[b++]);
  while (e > b && is_ascii_punct(chunk[e - 1])) trailing.emplace_back(1, chunk[--e]);
  if (e > b) out.emplace_back(chunk.substr(b, e - b));
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
  return out;
}

}  // namespace detail

inline std::vector<std::string> tokenize_line(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) detail::tokenize_chunk(line.substr(i, j - i), tokens);
    i = j;
  }
  return tokens;
}

// Rule-based segmentation: a '.', '!' or '?' ends a sentence when followed by
// whitespace and an uppercase letter, or by (optional) whitespace and end of
// text. Known limitation: abbreviations before capitalized words ("Dr. Smith")
// split as well. Tokenization detaches boundary punctuation.
inline std::vector<std::vector<std::string>> split_sentences(std::string_view raw_text) {
  std::vector<std::vector<std::string>> sentences;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    auto toks = tokenize_line(raw_text.substr(start, end - start));
    if (!toks.empty()) sentences.push_back(std::move(toks));
    start = end;
  };
  for (std::size_t i = 0; i < raw_text.size(); ++i) {
    const char c = raw_text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < raw_text.size() && std::isspace(static_cast<unsigned char>(raw_text[j]))) ++j;
    if (j >= raw_text.size()) {
      flush(i + 1);
      break;
    }
    if (j > i + 1 && std::isupper(static_cast<unsigned char>(raw_text[j]))) flush(i + 1);
  }
  flush(raw_text.size());
  return sentences;
}

namespace detail {

// First occurrence of `surface` as a contiguous token run, case-insensitive;
// search starts at `from`. Returns false when absent.
inline bool find_surface(const std::vector<std::string>& sentence_lower,
                         const std::vector<std::string>& surface_lower, std::size_t from,
                         Span& out) {
  const std::size_t m = surface_lower.size();
  if (m == 0 || sentence_lower.size() < m) return false;
  for (std::size_t i = from; i + m <= sentence_lower.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < m; ++k) {
      if (sentence_lower[i + k] != surface_lower[k]) {
        match = false;
        break;
      }
    }
    if (match) {
      out = {i, i + m};
      return true;
    }
  }
  return false;
}

struct RawMatch {
  std::size_t triplet_id;
  std::size_t sentence_id;
  Span head;
  Span tail;
};

inline void scan_block(const TripletSet& ts,
                       const std::vector<std::vector<std::string>>& sentences, std::size_t begin,
                       std::size_t end, std::vector<RawMatch>& out) {
  std::vector<std::vector<std::string>> heads_lower, tails_lower;
  heads_lower.reserve(ts.triplets.size());
  tails_lower.reserve(ts.triplets.size());
  for (const auto& t : ts.triplets) {
    heads_lower.push_back(to_lower(t.head));
    tails_lower.push_back(to_lower(t.tail));
  }
  for (std::size_t s = begin; s < end; ++s) {
    const auto sent_lower = to_lower(sentences[s]);
    for (std::size_t t = 0; t < ts.triplets.size(); ++t) {
      Span head;
      if (!find_surface(sent_lower, heads_lower[t], 0, head)) continue;
      // first tail occurrence disjoint from the head span; instances with
      // overlapping entity spans are invalid, so such sentences are skipped
      Span tail;
      std::size_t from = 0;
      bool found = false;
      while (find_surface(sent_lower, tails_lower[t], from, tail)) {
        if (!tail.overlaps(head)) {
          found = true;
          break;
        }
        from = tail.start + 1;
      }
      if (found) out.push_back({t, s, head, tail});
    }
  }
}

}  // namespace detail

// Emits one instance per (triplet, sentence) pair where the sentence contains
// both entity surfaces, truncated at `cap` per triplet in corpus order. Output
// is sorted by (triplet, corpus position) so it is independent of `workers`.
inline std::pair<std::vector<Instance>, AlignmentStats> align_corpus(
    const TripletSet& ts, const std::vector<std::vector<std::string>>& corpus, std::size_t cap,
    std::size_t workers = 1) {
  if (cap < 1) throw data_error("cap must be >= 1");
  if (workers < 1) workers = 1;

  std::vector<detail::RawMatch> matches;
  if (workers == 1 || corpus.size() < 2 * workers) {
    detail::scan_block(ts, corpus, 0, corpus.size(), matches);
  } else {
    std::vector<std::vector<detail::RawMatch>> shards(workers);
    std::vector<std::thread> threads;
    const std::size_t block = (corpus.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * block;
      const std::size_t e = std::min(corpus.size(), b + block);
      threads.emplace_back(
          [&, w, b, e] { detail::scan_block(ts, corpus, b, e, shards[w]); });
    }
    for (auto& th : threads) th.join();
    for (auto& shard : shards) matches.insert(matches.end(), shard.begin(), shard.end());
  }
  std::sort(matches.begin(), matches.end(), [](const auto& a, const auto& b) {
    return a.triplet_id != b.triplet_id ? a.triplet_id < b.triplet_id
                                        : a.sentence_id < b.sentence_id;
  });

  AlignmentStats stats;
  stats.per_triplet_counts.assign(ts.triplets.size(), 0);
  std::vector<Instance> out;
  std::size_t raw_in_triplet = 0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i];
    raw_in_triplet = (i > 0 && matches[i - 1].triplet_id == m.triplet_id) ? raw_in_triplet + 1 : 1;
    if (raw_in_triplet > cap) {
      if (raw_in_triplet == cap + 1) ++stats.capped_triplets;
      continue;
    }
    const Triplet& t = ts.triplets[m.triplet_id];
    out.push_back(Instance{corpus[m.sentence_id], m.head, m.tail, t.relation, std::nullopt});
    ++stats.per_triplet_counts[m.triplet_id];
    ++stats.total_instances;
    if (t.relation.is_na()) ++stats.na_instances;
  }
  return {std::move(out), std::move(stats)};
}

inline const std::set<std::string>& default_pronouns() {
  static const std::set<std::string> kPronouns = {"he",   "she", "it",  "they", "him", "her",
                                                  "them", "his", "hers", "its",  "their", "we",
                                                  "you",  "i",   "me",  "us"};
  return kPronouns;
}

// Drops every instance whose head or tail surface is a single token in the
// pronoun set (case-insensitive); survivors keep their order.
inline std::vector<Instance> filter_pronoun_entities(
    const std::vector<Instance>& instances,
    const std::set<std::string>& pronouns = default_pronouns()) {
  std::vector<Instance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    auto is_pronoun = [&](const Span& s) {
      return s.length() == 1 && pronouns.count(to_lower(inst.tokens[s.start])) > 0;
    };
    if (is_pronoun(inst.head) || is_pronoun(inst.tail)) continue;
    out.push_back(inst);
  }
  return out;
}

// Groups instances by their (head surface, relation, tail surface) triplet,
// pairing each with its confidence. Bag order is first-seen.
inline std::vector<Bag> assemble_bags(const std::vector<Instance>& instances,
                                      const std::vector<double>& confidences) {
  if (instances.size() != confidences.size())
    throw data_error("confidence list misaligned with instances");
  std::map<std::string, std::size_t> slot;
  std::vector<Bag> bags;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const double c = confidences[i];
    if (c < 0.0 || c > 1.0)
      throw data_error("confidence outside [0, 1] at record " + std::to_string(i));
    const Instance& inst = instances[i];
    Triplet t{inst.head_surface(), inst.relation, inst.tail_surface()};
    auto [it, inserted] = slot.try_emplace(t.key(), bags.size());
    if (inserted) bags.push_back(Bag{std::move(t), {}});
    bags[it->second].members.push_back({inst, c});
  }
  return bags;
}

// Convenience overload reading each instance's own confidence field.
inline std::vector<Bag> assemble_bags(const std::vector<Instance>& instances) {
  std::vector<double> confidences;
  confidences.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!instances[i].confidence)
      throw data_error("instance " + std::to_string(i) + " has no confidence");
    confidences.push_back(*instances[i].confidence);
  }
  return assemble_bags(instances, confidences);
}

}  // namespace wclre
