#pragma once

#include <cstdint>
#include <vector>

#include "wclre/adam.hpp"
#include "wclre/checkpoint.hpp"
#include "wclre/encoder.hpp"
#include "wclre/rng.hpp"

namespace wclre {

// Deterministic stream ids; every training-time random draw comes from
// Rng::for_stream(seed, stream, step_or_epoch) so runs are resumable.
namespace streams {
inline constexpr std::uint64_t kShuffle = 1;
inline constexpr std::uint64_t kBatch = 2;
inline constexpr std::uint64_t kMask = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kBenchData = 5;
inline constexpr std::uint64_t kHeadInit = 6;
}  // namespace streams

struct SupervisedOpt {
  double lr = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch = 32;
  double clip = 1.0;
};

struct SupervisedTrainResult {
  ModelBundle model;
  std::vector<double> epoch_losses;  // mean cross-entropy per epoch
};

// Cross-entropy training of encoder + classifier head on labeled instances.
// Instances that exceed the position table after marking are skipped with a
// warning. Single-threaded and fully determined by (bundle, data, opt, seed).
inline SupervisedTrainResult train_supervised(ModelBundle bundle, const Dataset& data,
                                              const SupervisedOpt& opt, std::uint64_t seed) {
  if (opt.batch < 1) throw data_error("batch size must be >= 1");
  std::vector<MarkedSequence> seqs;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    const Instance& inst = data.instances[i];
    const std::size_t label = bundle.label_index(inst.relation);
    try {
      seqs.push_back(mark_instance(inst, bundle.vocab, bundle.params.cfg.max_len));
      targets.push_back(label);
    } catch (const data_error& e) {
      log_warn("skipping instance " + std::to_string(i) + ": " + e.what());
    }
  }
  if (seqs.empty()) throw data_error("no trainable instances");

  AdamState adam = AdamState::init(bundle.params);
  const AdamConfig adam_cfg{opt.lr, 0.9, 0.999, 1e-8, opt.clip};
  SupervisedTrainResult result;

  std::vector<std::size_t> order(seqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng = Rng::for_stream(seed, streams::kShuffle, epoch);
    rng.shuffle(order);
    double epoch_ce = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += opt.batch) {
      const std::size_t end = std::min(order.size(), begin + opt.batch);
      const double scale = 1.0 / static_cast<double>(end - begin);
      EncoderParameters grads = zeros_like(bundle.params);
      for (std::size_t bi = begin; bi < end; ++bi) {
        const std::size_t i = order[bi];
        ForwardCache cache;
        const auto rep = instance_representation(bundle.params, seqs[i], &cache);
        const auto logits = classifier_logits(bundle.params, rep);
        epoch_ce += cross_entropy_from_logits(logits, targets[i]);
        std::vector<double> d_rep(rep.size(), 0.0);
        classifier_backward(bundle.params, rep, targets[i], scale, grads, d_rep);
        representation_backward(bundle.params, cache, seqs[i], d_rep, grads);
      }
      clip_global_norm(grads, opt.clip);
      adam_step(bundle.params, grads, adam, adam_cfg);
    }
    result.epoch_losses.push_back(epoch_ce / static_cast<double>(seqs.size()));
  }
  result.model = std::move(bundle);
  return result;
}

// Fraction of instances whose argmax logit equals their label.
inline double training_accuracy(const ModelBundle& model, const Dataset& data) {
  std::size_t correct = 0, total = 0;
  for (const auto& inst : data.instances) {
    MarkedSequence seq;
    try {
      seq = mark_instance(inst, model.vocab, model.params.cfg.max_len);
    } catch (const data_error&) {
      continue;
    }
    const auto rep = instance_representation(model.params, seq);
    const auto logits = classifier_logits(model.params, rep);
    std::size_t best = 0;
    for (std::size_t r = 1; r < logits.size(); ++r)
      if (logits[r] > logits[best]) best = r;
    correct += best == model.label_index(inst.relation) ? 1 : 0;
    ++total;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace wclre
