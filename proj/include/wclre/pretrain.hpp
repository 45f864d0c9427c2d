#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "wclre/checkpoint.hpp"
#include "wclre/config.hpp"
#include "wclre/ds_builder.hpp"
#include "wclre/masking.hpp"
#include "wclre/training.hpp"
#include "wclre/wcl.hpp"

namespace wclre {

struct StepLosses {
  double wcl = 0.0;
  double mlm = 0.0;
  double total() const { return wcl + mlm; }
};

// Bags and pre-marked sequences derived once from the scored DS data.
struct PretrainData {
  std::vector<Bag> bags;
  std::vector<std::vector<MarkedSequence>> bag_seqs;  // aligned with bags/members
  std::vector<MarkedSequence> na_seqs;                // NA stream for MLM
  std::size_t eligible_bags = 0;
};

inline PretrainData prepare_pretrain_data(const Dataset& ds_scored, const Vocabulary& vocab,
                                          const PipelineConfig& cfg) {
  std::vector<Instance> usable;
  usable.reserve(ds_scored.instances.size());
  for (std::size_t i = 0; i < ds_scored.instances.size(); ++i) {
    const Instance& inst = ds_scored.instances[i];
    if (!inst.confidence) throw data_error("instance " + std::to_string(i) + " has no confidence");
    if (marked_length(inst) > cfg.encoder.max_len) {
      log_warn("skipping instance " + std::to_string(i) + ": sequence too long");
      continue;
    }
    usable.push_back(inst);
  }
  if (usable.empty()) throw data_error("no usable instances in scored DS data");
  if (cfg.wcl.force_unit_confidence)
    for (auto& inst : usable) inst.confidence = 1.0;

  PretrainData data;
  data.bags = assemble_bags(usable);
  data.bag_seqs.resize(data.bags.size());
  for (std::size_t b = 0; b < data.bags.size(); ++b) {
    const Bag& bag = data.bags[b];
    if (!bag.is_na() && bag.members.size() >= 2) ++data.eligible_bags;
    data.bag_seqs[b].reserve(bag.members.size());
    for (const auto& m : bag.members)
      data.bag_seqs[b].push_back(mark_instance(m.instance, vocab, cfg.encoder.max_len));
    if (bag.is_na())
      for (const auto& seq : data.bag_seqs[b]) data.na_seqs.push_back(seq);
  }
  return data;
}

// Serializable training state; (seed, step) regenerate every random stream,
// so resuming from a checkpoint reproduces the exact continuation.
struct PretrainState {
  ModelBundle model;
  AdamState adam;
  std::uint64_t step = 0;  // completed steps
  std::uint64_t seed = 0;
};

inline PretrainState pretrain_init(const Dataset& ds_scored, const PipelineConfig& cfg) {
  PretrainState state;
  state.model.vocab = build_vocabulary_from_instances(ds_scored.instances, cfg.encoder.min_freq);
  state.model.labels = ds_scored.label_set;
  state.model.params =
      EncoderParameters::init(cfg.encoder, state.model.vocab.size(), state.model.labels.size());
  state.adam = AdamState::init(state.model.params);
  state.seed = cfg.encoder.seed;
  return state;
}

inline PretrainState pretrain_resume(LoadedCheckpoint ck) {
  if (!ck.adam) throw data_error("checkpoint has no optimizer state; cannot resume");
  PretrainState state;
  state.model = std::move(ck.bundle);
  state.adam = std::move(*ck.adam);
  state.step = ck.step;
  state.seed = state.model.params.cfg.seed;
  return state;
}

inline double warmup_scale(std::uint64_t next_step, const PipelineConfig& cfg) {
  const double frac = cfg.stage1.warmup_frac;
  if (frac <= 0.0) return 1.0;
  const double warm = std::max(1.0, std::floor(frac * static_cast<double>(cfg.stage1.steps)));
  return std::min(1.0, static_cast<double>(next_step) / warm);
}

// One optimizer update of L = L_WCL + L_MLM on a sampled bag batch; the MLM
// stream takes the batch members plus na_per_step NA sequences round-robin.
inline StepLosses pretrain_step(PretrainState& state, const PretrainData& data,
                                const PipelineConfig& cfg) {
  const std::uint64_t t = state.step;
  EncoderParameters& params = state.model.params;
  EncoderParameters grads = zeros_like(params);

  // weighted contrastive loss over sampled bags
  Rng rng_batch = Rng::for_stream(state.seed, streams::kBatch, t);
  const ContrastiveBatch batch =
      sample_batch(data.bags, cfg.wcl.bags_per_batch, cfg.wcl.bag_size, rng_batch);
  const std::size_t n = batch.members.size();
  std::vector<ForwardCache> caches(n);
  std::vector<std::vector<double>> reps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = batch.members[i];
    reps[i] = instance_representation(params, data.bag_seqs[m.bag][m.member], &caches[i]);
  }
  const WclBatchResult wcl = wcl_loss_batch(batch.members, reps, cfg.wcl_options(), true);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = batch.members[i];
    representation_backward(params, caches[i], data.bag_seqs[m.bag][m.member], wcl.rep_grads[i],
                            grads);
  }

  // masked language modeling over the same members plus the NA stream
  Rng rng_mask = Rng::for_stream(state.seed, streams::kMask, t);
  std::vector<const MarkedSequence*> mlm_seqs;
  mlm_seqs.reserve(n + cfg.mlm.na_per_step);
  for (const auto& m : batch.members) mlm_seqs.push_back(&data.bag_seqs[m.bag][m.member]);
  if (!data.na_seqs.empty())
    for (std::size_t i = 0; i < cfg.mlm.na_per_step; ++i)
      mlm_seqs.push_back(
          &data.na_seqs[(t * cfg.mlm.na_per_step + i) % data.na_seqs.size()]);

  std::vector<MaskResult> masked;
  masked.reserve(mlm_seqs.size());
  std::size_t total_targets = 0;
  for (const auto* seq : mlm_seqs) {
    masked.push_back(mask_tokens(*seq, cfg.mlm.policy, state.model.vocab.size(), rng_mask));
    total_targets += masked.back().positions.size();
  }
  double mlm_ce = 0.0;
  const double scale = total_targets > 0 ? 1.0 / static_cast<double>(total_targets) : 0.0;
  for (const auto& mr : masked) {
    ForwardCache cache;
    encode_ids(params, mr.ids, cache);
    mlm_ce += mlm_ce_sum(params, cache, mr.positions, mr.targets);
    mlm_backward(params, cache, mr.positions, mr.targets, scale, grads);
  }

  StepLosses losses{wcl.loss, total_targets > 0 ? mlm_ce * scale : 0.0};
  if (!std::isfinite(losses.total()))
    throw numeric_error("non-finite loss at step " + std::to_string(t + 1) +
                        " (wcl=" + std::to_string(losses.wcl) +
                        ", mlm=" + std::to_string(losses.mlm) + ")");

  clip_global_norm(grads, cfg.stage1.clip);
  const AdamConfig adam_cfg{cfg.stage1.lr, 0.9, 0.999, 1e-8, cfg.stage1.clip};
  adam_step(params, grads, state.adam, adam_cfg, warmup_scale(t + 1, cfg));
  state.step = t + 1;
  return losses;
}

using StepObserver = std::function<void(std::uint64_t step, const StepLosses&)>;
using CheckpointObserver = std::function<void(const PretrainState&)>;

// Runs (or resumes) stage-1 pre-training for cfg.stage1.steps total steps.
inline PretrainState pretrain(const Dataset& ds_scored, const PipelineConfig& cfg,
                              std::optional<PretrainState> resume = std::nullopt,
                              const StepObserver& on_step = {},
                              const CheckpointObserver& on_checkpoint = {}) {
  PretrainState state = resume ? std::move(*resume) : pretrain_init(ds_scored, cfg);
  const PretrainData data = prepare_pretrain_data(ds_scored, state.model.vocab, cfg);
  if (data.eligible_bags < cfg.wcl.bags_per_batch)
    throw data_error("insufficient bags: " + std::to_string(data.eligible_bags) + " eligible, " +
                     std::to_string(cfg.wcl.bags_per_batch) + " required");
  while (state.step < cfg.stage1.steps) {
    const StepLosses losses = pretrain_step(state, data, cfg);
    if (on_step) on_step(state.step, losses);
    if (on_checkpoint && state.step % cfg.stage1.checkpoint_interval == 0) on_checkpoint(state);
  }
  return state;
}

}  // namespace wclre
