#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "wclre/encoder.hpp"

using namespace wclre;
using testutil::make_instance;
using testutil::tiny_encoder;
using testutil::toks;

namespace {

Vocabulary test_vocab() {
  std::vector<std::string> words;
  for (const auto& w : toks("alpha beta gamma delta epsilon zeta eta theta"))
    for (int i = 0; i < 2; ++i) words.push_back(w);
  return build_vocabulary(words, 2);
}

MarkedSequence simple_sequence(const Vocabulary& v) {
  const Instance inst = make_instance("alpha beta gamma delta epsilon", {0, 1}, {3, 4}, "r");
  return mark_instance(inst, v, 64);
}

}  // namespace

TEST_CASE("forward pass shape and determinism") {
  const Vocabulary v = test_vocab();
  EncoderConfig cfg = tiny_encoder();
  const auto params = EncoderParameters::init(cfg, v.size(), 3);
  const MarkedSequence seq = simple_sequence(v);

  const Mat h1 = encode(params, seq);
  CHECK(h1.rows == seq.ids.size());
  CHECK(h1.cols == cfg.dim);
  const Mat h2 = encode(params, seq);
  CHECK(h1.a == h2.a);  // bitwise identical
  for (double x : h1.a) REQUIRE(std::isfinite(x));
}

TEST_CASE("zero embeddings stay finite through the layer-norm guard") {
  const Vocabulary v = test_vocab();
  auto params = EncoderParameters::init(tiny_encoder(), v.size(), 2);
  params.tok_emb.zero();
  params.pos_emb.zero();
  const Mat h = encode(params, simple_sequence(v));
  for (double x : h.a) REQUIRE(std::isfinite(x));
}

TEST_CASE("token id out of range is an error") {
  const Vocabulary v = test_vocab();
  const auto params = EncoderParameters::init(tiny_encoder(), v.size(), 2);
  MarkedSequence seq = simple_sequence(v);
  seq.ids[2] = static_cast<int>(v.size());
  CHECK_THROWS_AS(encode(params, seq), data_error);
}

TEST_CASE("representation is the concatenation at the two begin markers") {
  const Vocabulary v = test_vocab();
  const auto params = EncoderParameters::init(tiny_encoder(), v.size(), 2);
  const MarkedSequence seq = simple_sequence(v);
  const Mat h = encode(params, seq);
  const auto rep = instance_representation(params, seq);
  REQUIRE(rep.size() == 2 * params.cfg.dim);
  for (std::size_t j = 0; j < params.cfg.dim; ++j) {
    CHECK(rep[j] == h.at(seq.h_index, j));
    CHECK(rep[params.cfg.dim + j] == h.at(seq.t_index, j));
  }
}

TEST_CASE("swapping the marker roles swaps the representation halves") {
  const Vocabulary v = test_vocab();
  const auto params = EncoderParameters::init(tiny_encoder(), v.size(), 2);
  MarkedSequence seq = simple_sequence(v);
  MarkedSequence swapped = seq;
  std::swap(swapped.h_index, swapped.t_index);
  const auto rep = instance_representation(params, seq);
  const auto rep_swapped = instance_representation(params, swapped);
  const std::size_t d = params.cfg.dim;
  for (std::size_t j = 0; j < d; ++j) {
    CHECK(rep[j] == rep_swapped[d + j]);
    CHECK(rep[d + j] == rep_swapped[j]);
  }
}

TEST_CASE("with zero layers the hidden state depends only on (id, position)") {
  const Vocabulary v = test_vocab();
  EncoderConfig cfg = tiny_encoder();
  cfg.layers = 0;
  const auto params = EncoderParameters::init(cfg, v.size(), 2);

  // same ids at the marker positions, different elsewhere
  const Instance a = make_instance("alpha beta gamma delta epsilon", {0, 1}, {3, 4}, "r");
  const Instance b = make_instance("alpha zeta gamma delta theta", {0, 1}, {3, 4}, "r");
  const MarkedSequence sa = mark_instance(a, v, 64);
  const MarkedSequence sb = mark_instance(b, v, 64);
  REQUIRE(sa.h_index == sb.h_index);
  REQUIRE(sa.t_index == sb.t_index);
  CHECK(instance_representation(params, sa) == instance_representation(params, sb));
}

TEST_CASE("MLM loss hand values") {
  const Vocabulary v;  // specials only, V = 9
  EncoderConfig cfg = tiny_encoder();
  auto params = EncoderParameters::init(cfg, v.size(), 2);

  std::vector<int> ids{Vocabulary::kCls, Vocabulary::kMask, Vocabulary::kSep};
  const std::vector<std::size_t> positions{1};

  SECTION("hand-set logits (2, 0, ..., 0), target = argmax") {
    params.mlm_w.zero();  // logits come from the bias alone
    params.mlm_b.zero();
    params.mlm_b.a[0] = 2.0;
    const std::vector<int> targets{0};
    const double loss = mlm_forward(params, ids, positions, targets);
    const double expected = -std::log(std::exp(2.0) / (std::exp(2.0) + 8.0));
    CHECK_THAT(loss, Catch::Matchers::WithinAbs(expected, 1e-12));
  }

  SECTION("uniform output distribution gives ln V") {
    params.mlm_w.zero();
    params.mlm_b.zero();
    const std::vector<int> targets{3};
    const double loss = mlm_forward(params, ids, positions, targets);
    CHECK_THAT(loss, Catch::Matchers::WithinAbs(std::log(9.0), 1e-12));
  }

  SECTION("near-certain prediction gives near-zero loss") {
    params.mlm_w.zero();
    params.mlm_b.zero();
    params.mlm_b.a[5] = 60.0;  // softmax saturates at the target
    const std::vector<int> targets{5};
    const double loss = mlm_forward(params, ids, positions, targets);
    CHECK_THAT(loss, Catch::Matchers::WithinAbs(0.0, 1e-12));
  }

  SECTION("empty target set gives zero by convention") {
    CHECK(mlm_forward(params, ids, {}, {}) == 0.0);
  }
}

TEST_CASE("classifier logits are an affine map of the representation") {
  const Vocabulary v = test_vocab();
  auto params = EncoderParameters::init(tiny_encoder(), v.size(), 3);
  params.cls_w.zero();
  params.cls_b.a = {0.5, -1.0, 2.0};
  std::vector<double> rep(2 * params.cfg.dim, 0.3);
  const auto logits = classifier_logits(params, rep);
  CHECK_THAT(logits[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(logits[2], Catch::Matchers::WithinAbs(2.0, 1e-15));
}
