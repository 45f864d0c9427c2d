#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "wclre/bench.hpp"

using namespace wclre;

namespace {

NoiseBenchConfig micro_bench(double noise) {
  NoiseBenchConfig g;
  g.num_relations = 3;
  g.triggers_per_relation = 2;
  g.filler_vocab = 8;
  g.entity_pairs_per_relation = 4;
  g.sentence_len_min = 4;
  g.sentence_len_max = 6;
  g.ha_size = 40;
  g.ds_size = 90;
  g.test_size = 24;
  g.na_fraction = 0.2;
  g.noise_rate = noise;
  g.seeds = {2, 3};
  return g;
}

PipelineConfig micro_pipeline(double noise) {
  PipelineConfig cfg;
  cfg.encoder = testutil::tiny_encoder(1);
  cfg.wcl.bags_per_batch = 4;
  cfg.wcl.bag_size = 3;
  cfg.mlm.na_per_step = 2;
  cfg.stage0.epochs = 2;
  cfg.stage1.steps = 6;
  cfg.stage1.checkpoint_interval = 6;
  cfg.stage2.epochs = 2;
  cfg.bench = micro_bench(noise);
  return cfg;
}

}  // namespace

TEST_CASE("synthetic generator shape and validity") {
  const NoiseBenchConfig g = micro_bench(0.3);
  const SyntheticData data = generate_noise_bench_data(g, 7);
  CHECK(data.ha.instances.size() == g.ha_size);
  CHECK(data.ds.instances.size() == g.ds_size);
  CHECK(data.test.instances.size() == g.test_size);
  CHECK(data.flipped.size() == g.ds_size);

  CHECK(validate_dataset(data.ha).ok());
  CHECK(validate_dataset(data.ds).ok());
  CHECK(validate_dataset(data.test).ok());

  // flips touch only non-NA instances, at a rate near noise_rate
  std::size_t flips = 0, non_na = 0;
  for (std::size_t i = 0; i < data.ds.instances.size(); ++i) {
    if (data.flipped[i]) {
      ++flips;
      CHECK_FALSE(data.ds.instances[i].relation.is_na());
    }
    non_na += data.ds.instances[i].relation.is_na() ? 0 : 1;
  }
  CHECK(flips > 0);
  const double rate = static_cast<double>(flips) / static_cast<double>(non_na);
  CHECK(rate > 0.1);
  CHECK(rate < 0.5);

  SECTION("same seed regenerates identical data") {
    const SyntheticData again = generate_noise_bench_data(g, 7);
    CHECK(again.ds.instances == data.ds.instances);
    CHECK(again.flipped == data.flipped);
  }
  SECTION("bags assembled from the DS side stay pure") {
    Dataset scored = data.ds;
    for (auto& inst : scored.instances) inst.confidence = 1.0;
    for (const auto& bag : assemble_bags(scored.instances)) {
      for (const auto& m : bag.members) {
        CHECK(m.instance.relation == bag.triplet.relation);
        CHECK(to_lower(m.instance.head_surface()) == to_lower(bag.triplet.head));
      }
    }
  }
}

TEST_CASE("noise benchmark report shape") {
  const PipelineConfig cfg = micro_pipeline(0.3);
  const BenchReport report = noise_benchmark(cfg);

  REQUIRE(report.rows.size() == 3 * cfg.bench.seeds.size());
  std::map<std::string, std::size_t> arm_counts;
  for (const auto& row : report.rows) {
    ++arm_counts[row.arm];
    CHECK(row.noise_rate == 0.3);
    CHECK(row.f1 >= 0.0);
    CHECK(row.f1 <= 1.0);
  }
  CHECK(arm_counts.at("ft") == cfg.bench.seeds.size());
  CHECK(arm_counts.at("unweighted") == cfg.bench.seeds.size());
  CHECK(arm_counts.at("weighted") == cfg.bench.seeds.size());
  CHECK(report.mean_f1.size() == 3);
  REQUIRE(report.diagnostics.size() == cfg.bench.seeds.size());
  for (const auto& d : report.diagnostics) CHECK(d.flipped_count > 0);

  const std::string tsv = report.to_tsv();
  CHECK(tsv.find("arm\tseed\tnoise_rate\tf1\n") == 0);
  CHECK(tsv.find("weighted\t") != std::string::npos);
  CHECK(tsv.find("# mean") != std::string::npos);
}

TEST_CASE("noise-free benchmark still produces both pre-training arms") {
  PipelineConfig cfg = micro_pipeline(0.0);
  cfg.bench.seeds = {4};
  const BenchReport report = noise_benchmark(cfg);
  REQUIRE(report.rows.size() == 3);
  REQUIRE(report.diagnostics.size() == 1);
  CHECK(report.diagnostics[0].flipped_count == 0);
  // confidences are real softmax values, so strictly below 1
  CHECK(report.diagnostics[0].mean_conf_clean < 1.0);
  CHECK(report.diagnostics[0].mean_conf_clean > 0.0);
}
