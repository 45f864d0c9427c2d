#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "wclre/reliability.hpp"

using namespace wclre;
using testutil::make_instance;
using testutil::tiny_encoder;

namespace {

PipelineConfig small_cfg(std::uint64_t seed = 5) {
  PipelineConfig cfg;
  cfg.encoder = tiny_encoder(seed);
  cfg.stage0.epochs = 50;
  cfg.stage0.batch = 32;
  return cfg;
}

ClassifierModel untrained_model(const Dataset& ds, const PipelineConfig& cfg) {
  ModelBundle bundle;
  bundle.vocab = build_vocabulary_from_instances(ds.instances, 1);
  bundle.labels = ds.label_set;
  bundle.params = EncoderParameters::init(cfg.encoder, bundle.vocab.size(), bundle.labels.size());
  return bundle;
}

}  // namespace

TEST_CASE("confidence equals the softmax at the instance's own label") {
  Dataset ds = testutil::separable_dataset(4, 2);
  const PipelineConfig cfg = small_cfg();
  ClassifierModel model = untrained_model(ds, cfg);

  SECTION("uniform logits give 1/|R| exactly") {
    model.params.cls_w.zero();
    model.params.cls_b.zero();
    const double c = confidence(model, ds.instances.front());
    CHECK(c == 1.0 / static_cast<double>(model.labels.size()));
  }

  SECTION("logits (ln 3, 0) on the labeled class give 0.75") {
    model.params.cls_w.zero();
    model.params.cls_b.zero();
    const std::size_t target = model.label_index(ds.instances[0].relation);
    model.params.cls_b.a[target] = std::log(3.0);
    CHECK_THAT(confidence(model, ds.instances[0]), Catch::Matchers::WithinAbs(0.75, 1e-12));
  }

  SECTION("distribution sums to one within 1e-12") {
    const auto dist = confidence_distribution(model, ds.instances[0]);
    double sum = 0.0;
    for (double p : dist) {
      sum += p;
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }

  SECTION("unknown label errors") {
    Instance alien = ds.instances[0];
    alien.relation = "not_a_label";
    CHECK_THROWS_AS(confidence(model, alien), data_error);
  }
}

TEST_CASE("uniform logits give exactly 1/R for R in 2..10") {
  for (std::size_t r = 2; r <= 10; ++r) {
    Dataset ds = testutil::separable_dataset(2, 2);
    PipelineConfig cfg = small_cfg();
    ModelBundle model;
    model.vocab = build_vocabulary_from_instances(ds.instances, 1);
    for (std::size_t i = 0; i < r; ++i) model.labels.push_back("label" + std::to_string(i));
    model.params = EncoderParameters::init(cfg.encoder, model.vocab.size(), r);
    model.params.cls_w.zero();
    model.params.cls_b.zero();
    Instance inst = ds.instances[0];
    inst.relation = "label0";
    CHECK(confidence(model, inst) == 1.0 / static_cast<double>(r));
  }
}

TEST_CASE("label permutation equivariance") {
  Dataset ds = testutil::separable_dataset(4, 3);
  const PipelineConfig cfg = small_cfg();
  ClassifierModel model = untrained_model(ds, cfg);
  const Instance& inst = ds.instances[2];
  const double before = confidence(model, inst);

  // rotate labels and the classifier columns consistently
  ClassifierModel rotated = model;
  const std::size_t r = model.labels.size();
  std::rotate(rotated.labels.begin(), rotated.labels.begin() + 1, rotated.labels.end());
  for (std::size_t row = 0; row < rotated.params.cls_w.rows; ++row)
    for (std::size_t col = 0; col < r; ++col)
      rotated.params.cls_w.at(row, col) = model.params.cls_w.at(row, (col + 1) % r);
  for (std::size_t col = 0; col < r; ++col)
    rotated.params.cls_b.a[col] = model.params.cls_b.a[(col + 1) % r];

  CHECK_THAT(confidence(rotated, inst), Catch::Matchers::WithinAbs(before, 1e-12));
}

TEST_CASE("training errors") {
  PipelineConfig cfg = small_cfg();
  SECTION("empty dataset") {
    Dataset empty;
    CHECK_THROWS_WITH(train_classifier(empty, cfg),
                      Catch::Matchers::ContainsSubstring("empty dataset"));
  }
  SECTION("single-class dataset") {
    Dataset ds;
    ds.instances.push_back(make_instance("a b c", {0, 1}, {2, 3}, "only"));
    rebuild_label_set(ds);
    CHECK_THROWS_WITH(train_classifier(ds, cfg),
                      Catch::Matchers::ContainsSubstring("degenerate label set"));
  }
}

TEST_CASE("classifier overfits a separable toy set") {
  const Dataset ds = testutil::separable_dataset(10, 2);
  PipelineConfig cfg = small_cfg(11);
  const ClassifierModel model = train_classifier(ds, cfg);
  CHECK(training_accuracy(model, ds) == 1.0);
}

TEST_CASE("untrained model is near-uniform on random inputs") {
  const Dataset ds = testutil::separable_dataset(10, 4);
  REQUIRE(ds.label_set.size() == 4);
  const PipelineConfig cfg = small_cfg(21);
  const ClassifierModel model = untrained_model(ds, cfg);
  double mean_max = 0.0;
  for (const auto& inst : ds.instances) {
    const auto dist = confidence_distribution(model, inst);
    mean_max += *std::max_element(dist.begin(), dist.end());
  }
  mean_max /= static_cast<double>(ds.instances.size());
  CHECK(mean_max > 0.15);
  CHECK(mean_max < 0.35);
}

TEST_CASE("scoring populates confidences deterministically and idempotently") {
  const Dataset ha = testutil::separable_dataset(8, 2);
  PipelineConfig cfg = small_cfg(31);
  cfg.stage0.epochs = 5;
  const ClassifierModel model = train_classifier(ha, cfg);

  Dataset ds = testutil::separable_dataset(6, 2, /*seed=*/99);
  const Dataset scored = score_dataset(model, ds);
  REQUIRE(scored.instances.size() == ds.instances.size());
  for (std::size_t i = 0; i < scored.instances.size(); ++i) {
    REQUIRE(scored.instances[i].confidence.has_value());
    const double c = *scored.instances[i].confidence;
    CHECK(c > 0.0);
    CHECK(c < 1.0);
    CHECK(scored.instances[i].tokens == ds.instances[i].tokens);
  }
  const Dataset rescored = score_dataset(model, scored);
  for (std::size_t i = 0; i < scored.instances.size(); ++i)
    CHECK(rescored.instances[i].confidence == scored.instances[i].confidence);
}

TEST_CASE("an instance whose label maximizes the logits scores above 1/R") {
  const Dataset ha = testutil::separable_dataset(10, 2);
  PipelineConfig cfg = small_cfg(41);
  cfg.stage0.epochs = 30;
  const ClassifierModel model = train_classifier(ha, cfg);
  // after overfitting, every training instance's own label is the argmax
  const double floor = 1.0 / static_cast<double>(model.labels.size());
  for (const auto& inst : ha.instances) CHECK(confidence(model, inst) > floor);
}
