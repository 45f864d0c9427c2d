#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "wclre/pretrain.hpp"

using namespace wclre;
using testutil::make_instance;
using testutil::tiny_encoder;

namespace {

// Scored synthetic DS set small enough for fast pretraining tests.
Dataset scored_toy_ds(std::uint64_t seed, double conf_low = 0.3, double conf_high = 1.0) {
  NoiseBenchConfig g;
  g.num_relations = 3;
  g.triggers_per_relation = 3;
  g.filler_vocab = 10;
  g.entity_pairs_per_relation = 4;
  g.sentence_len_min = 4;
  g.sentence_len_max = 7;
  g.ha_size = 1;
  g.ds_size = 120;
  g.test_size = 1;
  g.na_fraction = 0.15;
  g.noise_rate = 0.0;
  g.seeds = {seed};
  Dataset ds = generate_noise_bench_data(g, seed).ds;
  Rng rng(seed ^ 0xabc);
  for (auto& inst : ds.instances) inst.confidence = conf_low + (conf_high - conf_low) * rng.uniform01();
  return ds;
}

PipelineConfig pretrain_cfg(std::uint64_t seed, std::size_t steps) {
  PipelineConfig cfg;
  cfg.encoder = tiny_encoder(seed);
  cfg.wcl.bags_per_batch = 4;
  cfg.wcl.bag_size = 3;
  cfg.mlm.na_per_step = 2;
  cfg.stage1.steps = steps;
  cfg.stage1.checkpoint_interval = 10;
  return cfg;
}

MarkedSequence toy_sequence(const Vocabulary& v) {
  const Instance inst = make_instance("alpha beta gamma delta epsilon zeta", {0, 1}, {4, 5}, "r");
  return mark_instance(inst, v, 64);
}

}  // namespace

TEST_CASE("masking boundary policy masks every content token") {
  Vocabulary v;
  for (const auto& t : testutil::toks("alpha beta gamma delta epsilon zeta")) v.add_token(t);
  const MarkedSequence seq = toy_sequence(v);
  MaskingPolicy policy;
  policy.mask_rate = 0.999999;  // mask_rate must stay inside (0, 1)
  policy.replace_mask = 1.0;
  policy.replace_random = 0.0;
  policy.keep = 0.0;
  Rng rng(3);
  const MaskResult res = mask_tokens(seq, policy, v.size(), rng);
  CHECK(res.positions.size() == 6);
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (Vocabulary::maskable_id(seq.ids[i]))
      CHECK(res.ids[i] == Vocabulary::kMask);
    else
      CHECK(res.ids[i] == seq.ids[i]);  // specials and markers never masked
  }
  for (std::size_t t = 0; t < res.positions.size(); ++t)
    CHECK(res.targets[t] == seq.ids[res.positions[t]]);
}

TEST_CASE("masking is deterministic given the seed and always selects something") {
  Vocabulary v;
  for (const auto& t : testutil::toks("alpha beta gamma")) v.add_token(t);
  const Instance inst = make_instance("alpha beta gamma", {0, 1}, {2, 3}, "r");
  const MarkedSequence seq = mark_instance(inst, v, 64);
  MaskingPolicy policy;
  policy.mask_rate = 0.01;  // low rate forces the at-least-one rule often
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const MaskResult a = mask_tokens(seq, policy, v.size(), seed);
    const MaskResult b = mask_tokens(seq, policy, v.size(), seed);
    CHECK(a.ids == b.ids);
    CHECK(a.positions == b.positions);
    REQUIRE(a.positions.size() >= 1);
  }
}

TEST_CASE("all-special sequences cannot be masked") {
  MarkedSequence seq;
  seq.ids = {Vocabulary::kCls, Vocabulary::kHCls, Vocabulary::kHSep, Vocabulary::kSep};
  MaskingPolicy policy;
  Rng rng(1);
  CHECK_THROWS_AS(mask_tokens(seq, policy, 9, rng), data_error);
}

TEST_CASE("masking statistics match the policy over many positions") {
  Vocabulary v;
  for (int i = 0; i < 50; ++i) v.add_token("tok" + std::to_string(i));
  std::vector<int> ids{Vocabulary::kCls};
  for (int i = 0; i < 60; ++i) ids.push_back(Vocabulary::kNumSpecial + i % 50);
  ids.push_back(Vocabulary::kSep);
  MarkedSequence seq;
  seq.ids = ids;
  seq.h_index = seq.t_index = 0;

  MaskingPolicy policy;
  Rng rng(2024);
  std::size_t maskable = 0, selected = 0, masked = 0, randomized = 0, kept = 0;
  for (int round = 0; round < 400; ++round) {
    const MaskResult res = mask_tokens(seq, policy, v.size(), rng);
    maskable += 60;
    selected += res.positions.size();
    for (std::size_t t = 0; t < res.positions.size(); ++t) {
      const int now = res.ids[res.positions[t]];
      if (now == Vocabulary::kMask)
        ++masked;
      else if (now == res.targets[t])
        ++kept;
      else
        ++randomized;
    }
  }
  REQUIRE(maskable >= 10000);
  const double rate = static_cast<double>(selected) / static_cast<double>(maskable);
  CHECK_THAT(rate, Catch::Matchers::WithinAbs(policy.mask_rate, 0.02));
  const double n = static_cast<double>(selected);
  CHECK_THAT(masked / n, Catch::Matchers::WithinAbs(policy.replace_mask, 0.03));
  // a "random" replacement can coincide with the original token, so compare
  // the keep+random split jointly
  CHECK_THAT((randomized + kept) / n,
             Catch::Matchers::WithinAbs(policy.replace_random + policy.keep, 0.03));
  CHECK(randomized > 0);
  CHECK(kept > 0);
}

TEST_CASE("pretrain step reports additive losses and is deterministic") {
  const Dataset ds = scored_toy_ds(8);
  const PipelineConfig cfg = pretrain_cfg(8, 3);

  std::vector<double> wcl_losses, mlm_losses, totals;
  const PretrainState state =
      pretrain(ds, cfg, std::nullopt, [&](std::uint64_t, const StepLosses& l) {
        wcl_losses.push_back(l.wcl);
        mlm_losses.push_back(l.mlm);
        totals.push_back(l.total());
      });
  REQUIRE(totals.size() == 3);
  for (std::size_t i = 0; i < totals.size(); ++i)
    CHECK(totals[i] == wcl_losses[i] + mlm_losses[i]);  // exact additivity

  // bitwise-identical rerun
  std::vector<double> totals2;
  const PretrainState state2 = pretrain(
      ds, cfg, std::nullopt,
      [&](std::uint64_t, const StepLosses& l) { totals2.push_back(l.total()); });
  CHECK(totals == totals2);
  auto pa = tensor_ptrs(state.model.params);
  auto pb = tensor_ptrs(state2.model.params);
  for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i]->a == pb[i]->a);
}

TEST_CASE("insufficient bags error") {
  Dataset ds = scored_toy_ds(9);
  PipelineConfig cfg = pretrain_cfg(9, 2);
  cfg.wcl.bags_per_batch = 100;
  CHECK_THROWS_WITH(pretrain(ds, cfg), Catch::Matchers::ContainsSubstring("insufficient bags"));
}

TEST_CASE("unscored data is rejected") {
  Dataset ds = scored_toy_ds(10);
  ds.instances[3].confidence.reset();
  const PipelineConfig cfg = pretrain_cfg(10, 1);
  CHECK_THROWS_WITH(pretrain(ds, cfg), Catch::Matchers::ContainsSubstring("no confidence"));
}

TEST_CASE("force_unit_confidence matches literally rescored data step for step") {
  const Dataset ds = scored_toy_ds(12, 0.2, 0.9);
  PipelineConfig forced = pretrain_cfg(12, 5);
  forced.wcl.force_unit_confidence = true;

  Dataset unit = ds;
  for (auto& inst : unit.instances) inst.confidence = 1.0;
  const PipelineConfig plain = pretrain_cfg(12, 5);

  std::vector<double> a, b;
  pretrain(ds, forced, std::nullopt,
           [&](std::uint64_t, const StepLosses& l) { a.push_back(l.total()); });
  pretrain(unit, plain, std::nullopt,
           [&](std::uint64_t, const StepLosses& l) { b.push_back(l.total()); });
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);  // bitwise
}

TEST_CASE("checkpoint resume reproduces the uninterrupted trajectory bitwise") {
  const Dataset ds = scored_toy_ds(13);
  PipelineConfig cfg = pretrain_cfg(13, 20);
  cfg.stage1.checkpoint_interval = 10;

  // run to completion, saving the interrupted state at step 10 on the way
  const auto dir = testutil::temp_dir("resume");
  const PretrainState full =
      pretrain(ds, cfg, std::nullopt, {}, [&](const PretrainState& s) {
        if (s.step == 10) save_checkpoint(dir / "ckpt.bin", s.model, &s.adam, s.step);
      });

  PretrainState resumed = pretrain_resume(load_checkpoint(dir / "ckpt.bin"));
  REQUIRE(resumed.step == 10);
  const PretrainState done = pretrain(ds, cfg, std::move(resumed));

  auto pa = tensor_ptrs(full.model.params);
  auto pb = tensor_ptrs(done.model.params);
  for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i]->a == pb[i]->a);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training reduces the smoothed loss on a toy set") {
  const Dataset ds = scored_toy_ds(14);
  PipelineConfig cfg = pretrain_cfg(14, 200);
  std::vector<double> totals;
  pretrain(ds, cfg, std::nullopt,
           [&](std::uint64_t, const StepLosses& l) { totals.push_back(l.total()); });
  REQUIRE(totals.size() == 200);
  auto window_mean = [&](std::size_t begin) {
    double s = 0.0;
    for (std::size_t i = begin; i < begin + 20; ++i) s += totals[i];
    return s / 20.0;
  };
  CHECK(window_mean(180) < window_mean(0));
}

TEST_CASE("a no-negative batch contributes zero WCL loss") {
  // all bags share one relation: every negative sum is empty
  std::vector<Instance> instances;
  for (int b = 0; b < 4; ++b)
    for (int m = 0; m < 2; ++m)
      instances.push_back(make_instance("h" + std::to_string(b) + " says t" + std::to_string(b) +
                                            " v" + std::to_string(m),
                                        {0, 1}, {2, 3}, "only_rel", 1.0));
  Dataset ds;
  ds.instances = instances;
  rebuild_label_set(ds);

  PipelineConfig cfg = pretrain_cfg(15, 1);
  cfg.wcl.bags_per_batch = 4;
  cfg.wcl.bag_size = 2;
  std::vector<StepLosses> losses;
  pretrain(ds, cfg, std::nullopt,
           [&](std::uint64_t, const StepLosses& l) { losses.push_back(l); });
  REQUIRE(losses.size() == 1);
  CHECK(losses[0].wcl == 0.0);
  CHECK(losses[0].total() == losses[0].mlm);
}
