#pragma once

#include <vector>

#include "wclre/config.hpp"
#include "wclre/training.hpp"

namespace wclre {

// A trained relation classifier; labels carry the fixed logit ordering.
using ClassifierModel = ModelBundle;

// Supervised training on the human-annotated dataset; NA is an ordinary
// class here so every DS-assigned label gets a meaningful confidence.
inline ClassifierModel train_classifier(const Dataset& ha, const PipelineConfig& cfg) {
  if (ha.instances.empty()) throw data_error("empty dataset");
  if (ha.label_set.size() < 2) throw data_error("degenerate label set");

  ModelBundle bundle;
  bundle.vocab = build_vocabulary_from_instances(ha.instances, cfg.encoder.min_freq);
  bundle.labels = ha.label_set;
  bundle.params = EncoderParameters::init(cfg.encoder, bundle.vocab.size(), bundle.labels.size());

  SupervisedOpt opt{cfg.stage0.lr, cfg.stage0.epochs, cfg.stage0.batch, cfg.stage0.clip};
  return train_supervised(std::move(bundle), ha, opt, cfg.encoder.seed).model;
}

// Softmax over the classifier logits; index k is model.labels[k].
inline std::vector<double> confidence_distribution(const ClassifierModel& model,
                                                   const Instance& inst) {
  const MarkedSequence seq = mark_instance(inst, model.vocab, model.params.cfg.max_len);
  const auto rep = instance_representation(model.params, seq);
  auto probs = classifier_logits(model.params, rep);
  softmax_in_place(probs);
  return probs;
}

// Softmax probability of the instance's own (DS-assigned) label.
inline double confidence(const ClassifierModel& model, const Instance& inst) {
  const std::size_t label = model.label_index(inst.relation);
  return confidence_distribution(model, inst)[label];
}

// Populates every instance's confidence with its own-label softmax score.
// Instances that cannot be encoded (marked length over the position table)
// are dropped with a warning; survivors keep their order.
inline Dataset score_dataset(const ClassifierModel& model, const Dataset& ds) {
  Dataset out;
  out.label_set = ds.label_set;
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    Instance inst = ds.instances[i];
    try {
      inst.confidence = confidence(model, inst);
    } catch (const data_error& e) {
      const std::string what = e.what();
      if (what.find("sequence too long") != std::string::npos) {
        log_warn("skipping record " + std::to_string(i) + ": " + what);
        continue;
      }
      throw data_error("record " + std::to_string(i) + ": " + what);
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace wclre
