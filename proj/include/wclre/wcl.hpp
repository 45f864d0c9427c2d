#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "wclre/mat.hpp"
#include "wclre/rng.hpp"
#include "wclre/types.hpp"

namespace wclre {

struct WclOptions {
  double temperature = 0.2;
  bool include_self = false;        // count the anchor itself as a positive
  bool outer_anchor_weight = false; // weight each anchor's loss by its own confidence

  void validate() const {
    if (!(temperature > 0.0)) throw data_error("temperature must be positive");
  }
};

struct BatchMember {
  std::size_t bag = 0;     // index into the bag list the batch was sampled from
  std::size_t member = 0;  // index within that bag
  RelationLabel relation;
  double confidence = 1.0;
};

// G sampled bags flattened into members grouped by bag; all bag triplets are
// pairwise distinct and none is NA.
struct ContrastiveBatch {
  std::size_t num_bags = 0;
  std::vector<BatchMember> members;

  const Instance& instance(const std::vector<Bag>& bags, std::size_t i) const {
    const BatchMember& m = members[i];
    return bags[m.bag].members[m.member].instance;
  }
};

// Samples G distinct-triplet non-NA bags uniformly without replacement, then
// min(bag_size, N_i) members within each.
inline ContrastiveBatch sample_batch(const std::vector<Bag>& bags, std::size_t num_bags,
                                     std::size_t bag_size, Rng& rng) {
  if (num_bags < 1 || bag_size < 1) throw data_error("batch shape must be positive");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < bags.size(); ++i)
    if (!bags[i].is_na() && bags[i].members.size() >= 2) eligible.push_back(i);
  if (eligible.size() < num_bags)
    throw data_error("insufficient bags: " + std::to_string(eligible.size()) + " eligible, " +
                     std::to_string(num_bags) + " required");

  std::set<std::string> triplet_keys;
  ContrastiveBatch batch;
  batch.num_bags = num_bags;
  for (std::size_t pick : rng.sample_without_replacement(eligible.size(), num_bags)) {
    const std::size_t bi = eligible[pick];
    const Bag& bag = bags[bi];
    if (!triplet_keys.insert(bag.triplet.key()).second)
      throw data_error("duplicate triplet across sampled bags");
    const std::size_t take = std::min(bag_size, bag.members.size());
    for (std::size_t mi : rng.sample_without_replacement(bag.members.size(), take))
      batch.members.push_back(
          {bi, mi, bag.triplet.relation, bag.members[mi].confidence});
  }
  return batch;
}

inline ContrastiveBatch sample_batch(const std::vector<Bag>& bags, std::size_t num_bags,
                                     std::size_t bag_size, std::uint64_t seed) {
  Rng rng(seed);
  return sample_batch(bags, num_bags, bag_size, rng);
}

inline double cosine(std::span<const double> u, std::span<const double> v) {
  const double nu = norm2(u.data(), u.size());
  const double nv = norm2(v.data(), v.size());
  if (nu == 0.0 || nv == 0.0) throw numeric_error("degenerate representation: zero vector");
  return dot(u.data(), v.data(), u.size()) / (nu * nv);
}

namespace detail {

// Per-anchor numerator/denominator sums of the weighted contrastive loss.
struct AnchorSums {
  double pos = 0.0;  // sum over same-bag positives of c_j c_k exp(cos/T)
  double neg = 0.0;  // sum over different-relation members of c_j c_m exp(cos/T)
};

inline AnchorSums anchor_sums(const std::vector<BatchMember>& members,
                              const std::vector<std::vector<double>>& reps, std::size_t j,
                              const WclOptions& opt) {
  AnchorSums s;
  const BatchMember& anchor = members[j];
  for (std::size_t k = 0; k < members.size(); ++k) {
    const BatchMember& other = members[k];
    const bool positive = other.bag == anchor.bag && (opt.include_self || k != j);
    const bool negative = other.relation != anchor.relation;
    if (!positive && !negative) continue;  // self, or same relation in another bag
    const double w = anchor.confidence * other.confidence *
                     std::exp(cosine(reps[j], reps[k]) / opt.temperature);
    if (positive)
      s.pos += w;
    else
      s.neg += w;
  }
  return s;
}

}  // namespace detail

// Eq.-style per-anchor loss: -log(P / (P + Q)). Returns nullopt when the
// positive sum is exactly zero (all relevant confidences are 0), in which
// case the anchor is skipped.
inline std::optional<double> wcl_loss_anchor(const std::vector<BatchMember>& members,
                                             const std::vector<std::vector<double>>& reps,
                                             std::size_t anchor, const WclOptions& opt) {
  opt.validate();
  std::size_t bag_count = 0;
  for (const auto& m : members)
    if (m.bag == members[anchor].bag) ++bag_count;
  if (bag_count < 2) throw data_error("anchor's bag has fewer than 2 members");
  const auto s = detail::anchor_sums(members, reps, anchor, opt);
  if (s.pos == 0.0) return std::nullopt;
  return -std::log(s.pos / (s.pos + s.neg));
}

struct WclBatchResult {
  double loss = 0.0;
  std::size_t anchors_used = 0;
  std::size_t anchors_skipped = 0;
  std::vector<std::vector<double>> rep_grads;  // aligned with reps when requested
};

// Mean anchor loss over all non-skipped anchors, with exact gradients with
// respect to the representations when with_grads is set.
inline WclBatchResult wcl_loss_batch(const std::vector<BatchMember>& members,
                                     const std::vector<std::vector<double>>& reps,
                                     const WclOptions& opt, bool with_grads = false) {
  opt.validate();
  if (members.size() != reps.size()) throw data_error("representations misaligned with members");
  if (members.empty()) throw data_error("empty contrastive batch");

  // bag sizes within the batch
  std::map<std::size_t, std::size_t> bag_count;
  for (const auto& m : members) ++bag_count[m.bag];
  for (const auto& [bag, count] : bag_count)
    if (count < 2) throw data_error("every bag must contribute at least 2 members");

  const std::size_t n = members.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm2(reps[i].data(), reps[i].size());
    if (norms[i] == 0.0) throw numeric_error("degenerate representation: zero vector");
  }

  std::vector<detail::AnchorSums> sums(n);
  std::vector<bool> skipped(n, false);
  std::size_t used = 0;
  for (std::size_t j = 0; j < n; ++j) {
    sums[j] = detail::anchor_sums(members, reps, j, opt);
    if (sums[j].pos == 0.0) {
      skipped[j] = true;
      log_warn("wcl anchor " + std::to_string(j) + " skipped: zero-confidence positives");
    } else {
      ++used;
    }
  }
  if (used == 0) throw numeric_error("no valid anchors");

  WclBatchResult result;
  result.anchors_used = used;
  result.anchors_skipped = n - used;
  if (with_grads) result.rep_grads.assign(n, std::vector<double>(reps[0].size(), 0.0));

  const double inv_used = 1.0 / static_cast<double>(used);
  for (std::size_t j = 0; j < n; ++j) {
    if (skipped[j]) continue;
    const double p = sums[j].pos;
    const double q = sums[j].neg;
    const double anchor_loss = -std::log(p / (p + q));
    const double outer = opt.outer_anchor_weight ? members[j].confidence : 1.0;
    result.loss += outer * anchor_loss * inv_used;
    if (!with_grads) continue;

    const double d_pos = outer * inv_used * (1.0 / (p + q) - 1.0 / p);
    const double d_neg = outer * inv_used * (1.0 / (p + q));
    const std::size_t dim = reps[j].size();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;  // cos(x, x) has zero gradient
      const BatchMember& other = members[k];
      const bool positive = other.bag == members[j].bag;
      const bool negative = other.relation != members[j].relation;
      if (!positive && !negative) continue;
      const double cos_jk = dot(reps[j].data(), reps[k].data(), dim) / (norms[j] * norms[k]);
      const double w =
          members[j].confidence * other.confidence * std::exp(cos_jk / opt.temperature);
      const double d_cos = (positive ? d_pos : d_neg) * w / opt.temperature;
      const double inv_jk = 1.0 / (norms[j] * norms[k]);
      const double inv_jj = 1.0 / (norms[j] * norms[j]);
      const double inv_kk = 1.0 / (norms[k] * norms[k]);
      for (std::size_t t = 0; t < dim; ++t) {
        result.rep_grads[j][t] += d_cos * (reps[k][t] * inv_jk - cos_jk * reps[j][t] * inv_jj);
        result.rep_grads[k][t] += d_cos * (reps[j][t] * inv_jk - cos_jk * reps[k][t] * inv_kk);
      }
    }
  }
  return result;
}

}  // namespace wclre
