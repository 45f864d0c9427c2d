#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wclre/config.hpp"
#include "wclre/reliability.hpp"
#include "wclre/training.hpp"

namespace wclre {

// Uniform random subset without replacement of size round(fraction * N);
// surviving instances keep their original order, label_set is preserved.
inline Dataset low_resource_split(const Dataset& ha, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw data_error("fraction must be in (0, 1]");
  const std::size_t n = ha.instances.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  Rng rng = Rng::for_stream(seed, streams::kSplit, 0);
  auto picked = rng.sample_without_replacement(n, k);
  std::sort(picked.begin(), picked.end());
  Dataset out;
  out.label_set = ha.label_set;
  out.instances.reserve(picked.size());
  for (std::size_t i : picked) out.instances.push_back(ha.instances[i]);
  return out;
}

// Stage-2 supervised fine-tuning. With `init` absent the encoder trains from
// scratch (the plain fine-tuning baseline); with a pre-trained bundle the
// encoder weights and vocabulary are reused and the classifier head is
// rebuilt for the target label set from the configured seed.
inline ClassifierModel finetune(std::optional<ModelBundle> init, const Dataset& ha,
                                const PipelineConfig& cfg) {
  if (ha.instances.empty()) throw data_error("empty dataset");
  if (ha.label_set.size() < 2) throw data_error("degenerate label set");

  ModelBundle bundle;
  if (init) {
    bundle = std::move(*init);
    if (bundle.params.cfg.dim != cfg.encoder.dim || bundle.params.cfg.layers != cfg.encoder.layers ||
        bundle.params.cfg.heads != cfg.encoder.heads || bundle.params.cfg.ffn != cfg.encoder.ffn ||
        bundle.params.cfg.max_len != cfg.encoder.max_len)
      throw data_error("checkpoint shape mismatch with configured encoder");
    bundle.labels = ha.label_set;
    bundle.params.num_labels = bundle.labels.size();
    bundle.params.cls_w = Mat(2 * cfg.encoder.dim, bundle.labels.size());
    bundle.params.cls_b = Mat(1, bundle.labels.size());
    Rng rng = Rng::for_stream(cfg.encoder.seed, streams::kHeadInit, 0);
    for (auto& x : bundle.params.cls_w.a) x = rng.normal(0.0, 0.02);
  } else {
    bundle.vocab = build_vocabulary_from_instances(ha.instances, cfg.encoder.min_freq);
    bundle.labels = ha.label_set;
    bundle.params =
        EncoderParameters::init(cfg.encoder, bundle.vocab.size(), bundle.labels.size());
  }

  SupervisedOpt opt{cfg.stage2.lr, cfg.stage2.epochs, cfg.stage2.batch, cfg.stage2.clip};
  return train_supervised(std::move(bundle), ha, opt, cfg.encoder.seed).model;
}

// Argmax over the classifier logits; exact ties go to the lowest label index.
inline RelationLabel predict(const ClassifierModel& model, const Instance& inst) {
  const MarkedSequence seq = mark_instance(inst, model.vocab, model.params.cfg.max_len);
  const auto rep = instance_representation(model.params, seq);
  const auto logits = classifier_logits(model.params, rep);
  std::size_t best = 0;
  for (std::size_t r = 1; r < logits.size(); ++r)
    if (logits[r] > logits[best]) best = r;
  return model.labels[best];
}

enum class F1Mode { ExcludeNa, All };

inline F1Mode f1_mode_from_string(const std::string& s) {
  if (s == "exclude_na") return F1Mode::ExcludeNa;
  if (s == "all") return F1Mode::All;
  throw data_error("unknown f1 mode: '" + s + "'");
}

struct LabelCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double micro_f1 = 0.0;
  std::map<std::string, LabelCounts> per_label;
  F1Mode mode = F1Mode::ExcludeNa;
};

// Micro-averaged P/R/F1 from global counts. In the standard mode the NA
// label never counts as a true positive: TP = (pred == gold != NA),
// FP = (pred != NA and pred != gold), FN = (gold != NA and pred != gold).
// In the all-class mode every label, NA included, is a positive class.
inline EvalReport micro_f1(const std::vector<RelationLabel>& preds,
                           const std::vector<RelationLabel>& gold, const RelationLabel& na,
                           F1Mode mode = F1Mode::ExcludeNa) {
  if (preds.size() != gold.size()) throw data_error("prediction/gold length mismatch");
  EvalReport report;
  report.mode = mode;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool correct = preds[i] == gold[i];
    if (mode == F1Mode::ExcludeNa) {
      if (correct && preds[i] != na) ++tp;
      if (preds[i] != na && !correct) ++fp;
      if (gold[i] != na && !correct) ++fn;
    } else {
      if (correct)
        ++tp;
      else {
        ++fp;
        ++fn;
      }
    }
    auto& pc = report.per_label[preds[i].name];
    auto& gc = report.per_label[gold[i].name];
    if (correct)
      ++gc.tp;
    else {
      ++pc.fp;
      ++gc.fn;
    }
  }
  report.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  report.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  report.micro_f1 = report.precision + report.recall == 0.0
                        ? 0.0
                        : 2.0 * report.precision * report.recall /
                              (report.precision + report.recall);
  return report;
}

inline EvalReport evaluate_model(const ClassifierModel& model, const Dataset& test,
                                 const RelationLabel& na, F1Mode mode = F1Mode::ExcludeNa) {
  std::vector<RelationLabel> preds, gold;
  preds.reserve(test.instances.size());
  gold.reserve(test.instances.size());
  for (std::size_t i = 0; i < test.instances.size(); ++i) {
    try {
      preds.push_back(predict(model, test.instances[i]));
    } catch (const data_error& e) {
      throw data_error("record " + std::to_string(i) + ": " + e.what());
    }
    gold.push_back(test.instances[i].relation);
  }
  return micro_f1(preds, gold, na, mode);
}

// Plain-text report: P\tR\tF1 header block plus per-label confusion counts.
inline std::string eval_report_text(const EvalReport& r) {
  char line[128];
  std::snprintf(line, sizeof(line), "%.17g\t%.17g\t%.17g\n", r.precision, r.recall, r.micro_f1);
  std::string out = "P\tR\tF1\n";
  out += line;
  out += "\nlabel\ttp\tfp\tfn\n";
  for (const auto& [label, c] : r.per_label) {
    out += label + "\t" + std::to_string(c.tp) + "\t" + std::to_string(c.fp) + "\t" +
           std::to_string(c.fn) + "\n";
  }
  return out;
}

}  // namespace wclre
