#pragma once

#include <vector>

#include "wclre/encoder.hpp"
#include "wclre/rng.hpp"

namespace wclre {

struct MaskingPolicy {
  double mask_rate = 0.15;
  double replace_mask = 0.8;
  double replace_random = 0.1;
  double keep = 0.1;

  void validate() const {
    if (!(mask_rate > 0.0 && mask_rate < 1.0)) throw data_error("mask_rate must be in (0, 1)");
    if (replace_mask < 0.0 || replace_random < 0.0 || keep < 0.0 ||
        std::fabs(replace_mask + replace_random + keep - 1.0) > 1e-12)
      throw data_error("replace_mask + replace_random + keep must equal 1");
  }
};

struct MaskResult {
  std::vector<int> ids;                 // corrupted sequence
  std::vector<std::size_t> positions;   // ascending target positions
  std::vector<int> targets;             // original ids at those positions
};

// Each non-special position (content words and [UNK]) is selected with
// probability mask_rate; one position is forced when none is selected.
// Selected positions receive [MASK] / a random non-special id / the original
// id with the policy probabilities.
inline MaskResult mask_tokens(const MarkedSequence& seq, const MaskingPolicy& policy,
                              std::size_t vocab_size, Rng& rng) {
  policy.validate();
  MaskResult out;
  out.ids = seq.ids;

  std::vector<std::size_t> maskable;
  for (std::size_t i = 0; i < seq.ids.size(); ++i)
    if (Vocabulary::maskable_id(seq.ids[i])) maskable.push_back(i);
  if (maskable.empty()) throw data_error("sequence has no maskable tokens");

  std::vector<std::size_t> selected;
  for (std::size_t pos : maskable)
    if (rng.bernoulli(policy.mask_rate)) selected.push_back(pos);
  if (selected.empty())
    selected.push_back(maskable[static_cast<std::size_t>(rng.below(maskable.size()))]);

  for (std::size_t pos : selected) {
    out.positions.push_back(pos);
    out.targets.push_back(seq.ids[pos]);
    const double u = rng.uniform01();
    if (u < policy.replace_mask) {
      out.ids[pos] = Vocabulary::kMask;
    } else if (u < policy.replace_mask + policy.replace_random) {
      // random non-special id; degenerate specials-only vocabularies keep the token
      if (vocab_size > Vocabulary::kNumSpecial)
        out.ids[pos] = Vocabulary::kNumSpecial +
                       static_cast<int>(rng.below(vocab_size - Vocabulary::kNumSpecial));
    }  // else keep the original id
  }
  return out;
}

inline MaskResult mask_tokens(const MarkedSequence& seq, const MaskingPolicy& policy,
                              std::size_t vocab_size, std::uint64_t seed) {
  Rng rng(seed);
  return mask_tokens(seq, policy, vocab_size, rng);
}

}  // namespace wclre
