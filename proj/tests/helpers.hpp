#pragma once

#include <unistd.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "wclre/bench.hpp"
#include "wclre/encoder.hpp"
#include "wclre/rng.hpp"
#include "wclre/types.hpp"

namespace testutil {

inline std::vector<std::string> toks(const std::string& sentence) {
  std::vector<std::string> out;
  std::istringstream in(sentence);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

inline wclre::Instance make_instance(const std::string& sentence, wclre::Span head,
                                     wclre::Span tail, const std::string& relation,
                                     std::optional<double> confidence = std::nullopt) {
  wclre::Instance inst;
  inst.tokens = toks(sentence);
  inst.head = head;
  inst.tail = tail;
  inst.relation = wclre::RelationLabel(relation);
  inst.confidence = confidence;
  return inst;
}

// Small encoder for fast tests.
inline wclre::EncoderConfig tiny_encoder(std::uint64_t seed = 7) {
  wclre::EncoderConfig cfg;
  cfg.dim = 16;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.ffn = 24;
  cfg.max_len = 40;
  cfg.seed = seed;
  cfg.min_freq = 1;
  return cfg;
}

// Random valid instance for round-trip property tests.
inline wclre::Instance random_instance(wclre::Rng& rng) {
  static const std::vector<std::string> words = {"alpha", "beta",  "gamma", "Delta", "x1",
                                                 "naïve", "β-ray", "b",     "Zed",   "ok."};
  const std::size_t n = 4 + rng.below(8);
  wclre::Instance inst;
  for (std::size_t i = 0; i < n; ++i) inst.tokens.push_back(words[rng.below(words.size())]);
  // two disjoint spans
  const std::size_t h_start = rng.below(n - 3);
  const std::size_t h_end = h_start + 1 + rng.below(2);
  std::size_t t_start = h_end + rng.below(n - h_end);
  std::size_t t_end = t_start + 1;
  if (t_end > n) {
    t_start = n - 1;
    t_end = n;
  }
  inst.head = {h_start, h_end};
  inst.tail = {t_start, t_end};
  if (rng.bernoulli(0.5)) std::swap(inst.head, inst.tail);
  inst.relation = rng.bernoulli(0.2) ? "NA" : "rel_" + std::to_string(rng.below(5));
  if (rng.bernoulli(0.5)) inst.confidence = rng.uniform01();
  return inst;
}

// Unique temp directory under the build tree.
inline std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("wclre_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

// Tiny linearly separable dataset: relation determined by a trigger token.
inline wclre::Dataset separable_dataset(std::size_t per_class = 10, std::size_t classes = 2,
                                        std::uint64_t seed = 3) {
  wclre::NoiseBenchConfig g;
  g.num_relations = classes;
  g.triggers_per_relation = 2;
  g.filler_vocab = 6;
  g.entity_pairs_per_relation = 3;
  g.sentence_len_min = 4;
  g.sentence_len_max = 6;
  g.ha_size = per_class * classes;
  g.ds_size = 1;
  g.test_size = 1;
  g.na_fraction = 0.0;
  g.noise_rate = 0.0;
  g.seeds = {seed};
  return wclre::generate_noise_bench_data(g, seed).ha;
}

}  // namespace testutil
