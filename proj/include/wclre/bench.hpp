#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "wclre/finetune_eval.hpp"
#include "wclre/pretrain.hpp"
#include "wclre/reliability.hpp"

namespace wclre {

// Synthetic relation-extraction data: each relation owns trigger tokens; a
// clean sentence contains triggers of its relation between its entity pair,
// NA sentences contain only fillers. Noise flips labels (text unchanged).
struct SyntheticData {
  Dataset ha;
  Dataset ds;
  Dataset test;
  std::vector<bool> flipped;  // aligned with ds.instances
};

namespace detail {

struct BenchPools {
  std::vector<RelationLabel> relations;                       // non-NA
  std::vector<std::vector<std::string>> triggers;             // per relation
  std::vector<std::string> fillers;
  std::vector<std::vector<std::pair<std::string, std::string>>> pairs;  // per relation
  std::vector<std::pair<std::string, std::string>> na_pairs;
};

inline BenchPools make_pools(const NoiseBenchConfig& cfg) {
  BenchPools p;
  for (std::size_t r = 0; r < cfg.num_relations; ++r) {
    p.relations.emplace_back("rel" + std::to_string(r));
    std::vector<std::string> trig;
    for (std::size_t i = 0; i < cfg.triggers_per_relation; ++i)
      trig.push_back("trg" + std::to_string(r) + "x" + std::to_string(i));
    p.triggers.push_back(std::move(trig));
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t e = 0; e < cfg.entity_pairs_per_relation; ++e)
      pairs.emplace_back("e" + std::to_string(r) + "p" + std::to_string(e) + "h",
                         "e" + std::to_string(r) + "p" + std::to_string(e) + "t");
    p.pairs.push_back(std::move(pairs));
  }
  for (std::size_t i = 0; i < cfg.filler_vocab; ++i) p.fillers.push_back("w" + std::to_string(i));
  for (std::size_t e = 0; e < cfg.entity_pairs_per_relation; ++e)
    p.na_pairs.emplace_back("n" + std::to_string(e) + "h", "n" + std::to_string(e) + "t");
  return p;
}

// [head, middle..., tail]; with a relation, 1-2 of the middle tokens are
// triggers of that relation at random positions, the rest are fillers.
inline Instance make_sentence(const BenchPools& pools, const NoiseBenchConfig& cfg,
                              std::optional<std::size_t> relation, std::size_t pair, Rng& rng) {
  const std::size_t len =
      cfg.sentence_len_min +
      static_cast<std::size_t>(rng.below(cfg.sentence_len_max - cfg.sentence_len_min + 1));
  const std::size_t middle = len - 2;
  const auto& [head, tail] =
      relation ? pools.pairs[*relation][pair] : pools.na_pairs[pair];
  std::vector<std::string> tokens;
  tokens.push_back(head);
  std::vector<std::size_t> trigger_slots;
  if (relation) {
    const std::size_t count = std::min<std::size_t>(middle, 1 + rng.below(2));
    trigger_slots = rng.sample_without_replacement(middle, count);
  }
  for (std::size_t i = 0; i < middle; ++i) {
    bool is_trigger = false;
    for (std::size_t s : trigger_slots) is_trigger = is_trigger || s == i;
    if (is_trigger) {
      const auto& trig = pools.triggers[*relation];
      tokens.push_back(trig[rng.below(trig.size())]);
    } else {
      tokens.push_back(pools.fillers[rng.below(pools.fillers.size())]);
    }
  }
  tokens.push_back(tail);
  Instance inst;
  inst.head = {0, 1};
  inst.tail = {tokens.size() - 1, tokens.size()};
  inst.tokens = std::move(tokens);
  inst.relation = relation ? pools.relations[*relation] : RelationLabel(kNaLabel);
  return inst;
}

inline Instance draw_instance(const BenchPools& pools, const NoiseBenchConfig& cfg, Rng& rng) {
  if (rng.bernoulli(cfg.na_fraction)) {
    const std::size_t pair = rng.below(pools.na_pairs.size());
    return make_sentence(pools, cfg, std::nullopt, pair, rng);
  }
  const std::size_t rel = rng.below(pools.relations.size());
  const std::size_t pair = rng.below(pools.pairs[rel].size());
  return make_sentence(pools, cfg, rel, pair, rng);
}

}  // namespace detail

inline SyntheticData generate_noise_bench_data(const NoiseBenchConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const detail::BenchPools pools = detail::make_pools(cfg);
  Rng rng = Rng::for_stream(seed, streams::kBenchData, 0);

  SyntheticData data;
  for (std::size_t i = 0; i < cfg.ha_size; ++i)
    data.ha.instances.push_back(detail::draw_instance(pools, cfg, rng));
  for (std::size_t i = 0; i < cfg.test_size; ++i)
    data.test.instances.push_back(detail::draw_instance(pools, cfg, rng));
  for (std::size_t i = 0; i < cfg.ds_size; ++i) {
    Instance inst = detail::draw_instance(pools, cfg, rng);
    bool flip = false;
    if (!inst.relation.is_na() && rng.bernoulli(cfg.noise_rate)) {
      // flip the label uniformly to one of the other relations; text unchanged
      std::size_t current = 0;
      for (std::size_t r = 0; r < pools.relations.size(); ++r)
        if (pools.relations[r] == inst.relation) current = r;
      std::size_t wrong = rng.below(pools.relations.size() - 1);
      if (wrong >= current) ++wrong;
      inst.relation = pools.relations[wrong];
      flip = true;
    }
    data.ds.instances.push_back(std::move(inst));
    data.flipped.push_back(flip);
  }
  rebuild_label_set(data.ha);
  rebuild_label_set(data.ds);
  rebuild_label_set(data.test);
  return data;
}

struct BenchRow {
  std::string arm;
  std::uint64_t seed = 0;
  double noise_rate = 0.0;
  double f1 = 0.0;
};

struct BenchSeedDiagnostics {
  std::uint64_t seed = 0;
  double mean_conf_clean = 0.0;
  double mean_conf_flipped = 0.0;
  std::size_t clean_count = 0;
  std::size_t flipped_count = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchSeedDiagnostics> diagnostics;
  std::map<std::string, double> mean_f1;

  // Tab-separated rows arm\tseed\tnoise_rate\tf1; confidence diagnostics and
  // per-arm means appear as '#' comment lines.
  std::string to_tsv() const {
    std::string out = "arm\tseed\tnoise_rate\tf1\n";
    char buf[160];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s\t%llu\t%.3g\t%.6f\n", r.arm.c_str(),
                    static_cast<unsigned long long>(r.seed), r.noise_rate, r.f1);
      out += buf;
    }
    for (const auto& d : diagnostics) {
      std::snprintf(buf, sizeof(buf),
                    "# seed %llu: mean_conf_clean=%.6f (n=%zu) mean_conf_flipped=%.6f (n=%zu)\n",
                    static_cast<unsigned long long>(d.seed), d.mean_conf_clean, d.clean_count,
                    d.mean_conf_flipped, d.flipped_count);
      out += buf;
    }
    for (const auto& [arm, f1] : mean_f1) {
      std::snprintf(buf, sizeof(buf), "# mean %s\t%.6f\n", arm.c_str(), f1);
      out += buf;
    }
    return out;
  }
};

// Runs the full pipeline three ways per seed: plain fine-tuning, unweighted
// pre-training (all confidences 1), and weighted pre-training (classifier
// confidences), then reports micro-F1 per arm on a clean synthetic test set.
inline BenchReport noise_benchmark(const PipelineConfig& base_cfg,
                                   const std::function<void(const std::string&)>& progress = {}) {
  const NoiseBenchConfig& bench = base_cfg.bench;
  bench.validate();
  BenchReport report;
  const RelationLabel na(base_cfg.eval.na_label);
  const F1Mode mode = f1_mode_from_string(base_cfg.eval.f1_mode);

  for (const std::uint64_t seed : bench.seeds) {
    PipelineConfig cfg = base_cfg;
    cfg.encoder.seed = seed;
    auto note = [&](const std::string& msg) {
      if (progress) progress("seed " + std::to_string(seed) + ": " + msg);
    };

    note("generating data");
    const SyntheticData data = generate_noise_bench_data(bench, seed);

    note("fine-tuning baseline");
    const ClassifierModel ft = finetune(std::nullopt, data.ha, cfg);
    report.rows.push_back(
        {"ft", seed, bench.noise_rate, evaluate_model(ft, data.test, na, mode).micro_f1});

    note("training reliability classifier");
    const ClassifierModel rel = train_classifier(data.ha, cfg);
    const Dataset scored = score_dataset(rel, data.ds);
    if (scored.instances.size() != data.ds.instances.size())
      throw numeric_error("scored DS size changed; diagnostics would misalign");

    BenchSeedDiagnostics diag;
    diag.seed = seed;
    for (std::size_t i = 0; i < scored.instances.size(); ++i) {
      if (scored.instances[i].relation.is_na()) continue;
      const double c = *scored.instances[i].confidence;
      if (data.flipped[i]) {
        diag.mean_conf_flipped += c;
        ++diag.flipped_count;
      } else {
        diag.mean_conf_clean += c;
        ++diag.clean_count;
      }
    }
    if (diag.clean_count) diag.mean_conf_clean /= static_cast<double>(diag.clean_count);
    if (diag.flipped_count) diag.mean_conf_flipped /= static_cast<double>(diag.flipped_count);
    report.diagnostics.push_back(diag);

    Dataset unit = scored;
    for (auto& inst : unit.instances) inst.confidence = 1.0;

    note("unweighted pre-training");
    const PretrainState unweighted = pretrain(unit, cfg);
    const ClassifierModel uw_model = finetune(unweighted.model, data.ha, cfg);
    report.rows.push_back(
        {"unweighted", seed, bench.noise_rate, evaluate_model(uw_model, data.test, na, mode).micro_f1});

    note("weighted pre-training");
    const PretrainState weighted = pretrain(scored, cfg);
    const ClassifierModel w_model = finetune(weighted.model, data.ha, cfg);
    report.rows.push_back(
        {"weighted", seed, bench.noise_rate, evaluate_model(w_model, data.test, na, mode).micro_f1});
  }

  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& r : report.rows) {
    sums[r.arm].first += r.f1;
    sums[r.arm].second += 1;
  }
  for (const auto& [arm, s] : sums)
    report.mean_f1[arm] = s.first / static_cast<double>(s.second);
  return report;
}

}  // namespace wclre
