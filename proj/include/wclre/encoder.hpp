#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wclre/mat.hpp"
#include "wclre/rng.hpp"
#include "wclre/types.hpp"
#include "wclre/vocab.hpp"

namespace wclre {

inline constexpr double kLayerNormEps = 1e-5;

struct EncoderConfig {
  std::size_t dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn = 128;
  std::size_t max_len = 128;
  std::size_t seed = 1;
  std::size_t min_freq = 2;  // vocabulary frequency threshold

  void validate() const {
    if (dim == 0 || heads == 0 || ffn == 0) throw data_error("encoder dims must be positive");
    if (dim % heads != 0) throw data_error("encoder heads must divide dim");
    if (max_len < kMarkerOverhead + 2) throw data_error("encoder max_len too small");
  }
  bool operator==(const EncoderConfig&) const = default;
};

// Token ids with entity markers inserted; h_index/t_index point at the
// [H_CLS] and [T_CLS] positions whose hidden states form the representation.
struct MarkedSequence {
  std::vector<int> ids;
  std::size_t h_index = 0;
  std::size_t t_index = 0;
};

// [CLS] ... [H_CLS] head [H_SEP] ... [T_CLS] tail [T_SEP] ... [SEP], with
// markers inserted at span boundaries in textual order.
inline MarkedSequence mark_instance(const Instance& inst, const Vocabulary& vocab,
                                    std::size_t max_len) {
  const std::size_t n = inst.tokens.size();
  if (n == 0) throw data_error("cannot mark an empty instance");
  if (inst.head.start >= inst.head.end || inst.tail.start >= inst.tail.end)
    throw data_error("cannot mark an instance with an empty span");
  if (inst.head.end > n || inst.tail.end > n)
    throw data_error("cannot mark an instance with out-of-bounds spans");
  if (inst.head.overlaps(inst.tail))
    throw data_error("cannot mark an instance with overlapping spans");
  if (marked_length(inst) > max_len)
    throw data_error("sequence too long: " + std::to_string(marked_length(inst)) + " > " +
                     std::to_string(max_len));

  MarkedSequence seq;
  seq.ids.reserve(marked_length(inst));
  seq.ids.push_back(Vocabulary::kCls);
  for (std::size_t pos = 0; pos <= n; ++pos) {
    // closing markers precede opening markers at a shared boundary
    if (pos == inst.head.end) seq.ids.push_back(Vocabulary::kHSep);
    if (pos == inst.tail.end) seq.ids.push_back(Vocabulary::kTSep);
    if (pos == inst.head.start) {
      seq.h_index = seq.ids.size();
      seq.ids.push_back(Vocabulary::kHCls);
    }
    if (pos == inst.tail.start) {
      seq.t_index = seq.ids.size();
      seq.ids.push_back(Vocabulary::kTCls);
    }
    if (pos < n) seq.ids.push_back(vocab.id(inst.tokens[pos]));
  }
  seq.ids.push_back(Vocabulary::kSep);
  return seq;
}

enum class TensorKind { Weight, Bias, Gain };

// All trainable tensors: embeddings, N pre-layer-norm transformer blocks,
// final layer norm, MLM projection, and the span-pair classifier head.
struct EncoderParameters {
  EncoderConfig cfg;
  std::size_t vocab_size = 0;
  std::size_t num_labels = 0;

  Mat tok_emb;  // V x d
  Mat pos_emb;  // max_len x d
  struct Block {
    Mat ln1_g, ln1_b;
    Mat wq, bq, wk, bk, wv, bv, wo, bo;
    Mat ln2_g, ln2_b;
    Mat w1, b1, w2, b2;
  };
  std::vector<Block> blocks;
  Mat final_ln_g, final_ln_b;
  Mat mlm_w, mlm_b;  // d x V, 1 x V
  Mat cls_w, cls_b;  // 2d x R, 1 x R

  template <class Self, class F>
  static void visit(Self& p, F&& f) {
    f("tok_emb", TensorKind::Weight, p.tok_emb);
    f("pos_emb", TensorKind::Weight, p.pos_emb);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
      auto& b = p.blocks[i];
      const std::string pre = "block" + std::to_string(i) + ".";
      f(pre + "ln1_g", TensorKind::Gain, b.ln1_g);
      f(pre + "ln1_b", TensorKind::Bias, b.ln1_b);
      f(pre + "wq", TensorKind::Weight, b.wq);
      f(pre + "bq", TensorKind::Bias, b.bq);
      f(pre + "wk", TensorKind::Weight, b.wk);
      f(pre + "bk", TensorKind::Bias, b.bk);
      f(pre + "wv", TensorKind::Weight, b.wv);
      f(pre + "bv", TensorKind::Bias, b.bv);
      f(pre + "wo", TensorKind::Weight, b.wo);
      f(pre + "bo", TensorKind::Bias, b.bo);
      f(pre + "ln2_g", TensorKind::Gain, b.ln2_g);
      f(pre + "ln2_b", TensorKind::Bias, b.ln2_b);
      f(pre + "w1", TensorKind::Weight, b.w1);
      f(pre + "b1", TensorKind::Bias, b.b1);
      f(pre + "w2", TensorKind::Weight, b.w2);
      f(pre + "b2", TensorKind::Bias, b.b2);
    }
    f("final_ln_g", TensorKind::Gain, p.final_ln_g);
    f("final_ln_b", TensorKind::Bias, p.final_ln_b);
    f("mlm_w", TensorKind::Weight, p.mlm_w);
    f("mlm_b", TensorKind::Bias, p.mlm_b);
    f("cls_w", TensorKind::Weight, p.cls_w);
    f("cls_b", TensorKind::Bias, p.cls_b);
  }
  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, std::forward<F>(f));
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, std::forward<F>(f));
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, TensorKind, const Mat& m) { n += m.size(); });
    return n;
  }

  void zero_all() {
    for_each_tensor([](const std::string&, TensorKind, Mat& m) { m.zero(); });
  }

  // Allocates all tensors for the given sizes; weights from normal(0, 0.02),
  // biases zero, layer-norm gains one, drawn in declared order from the seed.
  static EncoderParameters init(const EncoderConfig& cfg, std::size_t vocab_size,
                                std::size_t num_labels) {
    cfg.validate();
    if (vocab_size < Vocabulary::kNumSpecial) throw data_error("vocabulary too small");
    EncoderParameters p;
    p.cfg = cfg;
    p.vocab_size = vocab_size;
    p.num_labels = num_labels;
    const std::size_t d = cfg.dim;
    p.tok_emb = Mat(vocab_size, d);
    p.pos_emb = Mat(cfg.max_len, d);
    p.blocks.resize(cfg.layers);
    for (auto& b : p.blocks) {
      b.ln1_g = Mat(1, d);
      b.ln1_b = Mat(1, d);
      b.wq = Mat(d, d);
      b.bq = Mat(1, d);
      b.wk = Mat(d, d);
      b.bk = Mat(1, d);
      b.wv = Mat(d, d);
      b.bv = Mat(1, d);
      b.wo = Mat(d, d);
      b.bo = Mat(1, d);
      b.ln2_g = Mat(1, d);
      b.ln2_b = Mat(1, d);
      b.w1 = Mat(d, cfg.ffn);
      b.b1 = Mat(1, cfg.ffn);
      b.w2 = Mat(cfg.ffn, d);
      b.b2 = Mat(1, d);
    }
    p.final_ln_g = Mat(1, d);
    p.final_ln_b = Mat(1, d);
    p.mlm_w = Mat(d, vocab_size);
    p.mlm_b = Mat(1, vocab_size);
    p.cls_w = Mat(2 * d, num_labels);
    p.cls_b = Mat(1, num_labels);

    Rng rng(cfg.seed);
    p.for_each_tensor([&](const std::string&, TensorKind kind, Mat& m) {
      switch (kind) {
        case TensorKind::Weight:
          for (auto& x : m.a) x = rng.normal(0.0, 0.02);
          break;
        case TensorKind::Bias:
          m.zero();
          break;
        case TensorKind::Gain:
          std::fill(m.a.begin(), m.a.end(), 1.0);
          break;
      }
    });
    return p;
  }
};

inline EncoderParameters zeros_like(const EncoderParameters& p) {
  EncoderParameters z = p;
  z.zero_all();
  return z;
}

inline std::vector<Mat*> tensor_ptrs(EncoderParameters& p) {
  std::vector<Mat*> out;
  p.for_each_tensor([&](const std::string&, TensorKind, Mat& m) { out.push_back(&m); });
  return out;
}

inline std::vector<const Mat*> tensor_ptrs(const EncoderParameters& p) {
  std::vector<const Mat*> out;
  p.for_each_tensor([&](const std::string&, TensorKind, const Mat& m) { out.push_back(&m); });
  return out;
}

// ---- numeric primitives -----------------------------------------------

inline void softmax_in_place(std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

inline double log_sum_exp(std::span<const double> v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

inline double cross_entropy_from_logits(std::span<const double> logits, std::size_t target) {
  return log_sum_exp(logits) - logits[target];
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

struct LnStats {
  std::vector<double> mu;
  std::vector<double> sig;  // sqrt(var + eps)
};

inline void layer_norm(const Mat& x, const Mat& gain, const Mat& bias, Mat& out, LnStats& st) {
  const std::size_t d = x.cols;
  out.rows = x.rows;
  out.cols = d;
  out.a.resize(x.size());
  st.mu.resize(x.rows);
  st.sig.resize(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xi[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xi[j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double sig = std::sqrt(var + kLayerNormEps);
    st.mu[i] = mu;
    st.sig[i] = sig;
    double* oi = out.row(i);
    for (std::size_t j = 0; j < d; ++j)
      oi[j] = (xi[j] - mu) / sig * gain.a[j] + bias.a[j];
  }
}

// dx += backward(d_out); gain/bias grads accumulate.
inline void layer_norm_backward(const Mat& d_out, const Mat& x, const LnStats& st,
                                const Mat& gain, Mat& dx, Mat& d_gain, Mat& d_bias) {
  const std::size_t d = x.cols;
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    const double* doi = d_out.row(i);
    const double inv_sig = 1.0 / st.sig[i];
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (xi[j] - st.mu[i]) * inv_sig;
      d_gain.a[j] += doi[j] * xhat;
      d_bias.a[j] += doi[j];
      dxhat[j] = doi[j] * gain.a[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat;
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    double* dxi = dx.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (xi[j] - st.mu[i]) * inv_sig;
      dxi[j] += inv_sig * (dxhat[j] - mean_dxhat - xhat * mean_dxhat_xhat);
    }
  }
}

// ---- forward / backward -------------------------------------------------

struct BlockCache {
  Mat x_in, n1;
  LnStats ln1;
  Mat q, k, v;
  std::vector<Mat> att;  // per head, L x L attention probabilities
  Mat ctx;
  Mat a, n2;
  LnStats ln2;
  Mat f1, gelu_out;
};

struct ForwardCache {
  std::vector<int> ids;
  Mat x0;
  std::vector<BlockCache> blocks;
  Mat h_pre;  // input of the final layer norm
  LnStats final_ln;
  Mat h;  // L x d hidden states
};

// Deterministic forward pass; fills `cache` for a subsequent backward pass.
inline const Mat& encode_ids(const EncoderParameters& p, std::span<const int> ids,
                             ForwardCache& cache) {
  const std::size_t L = ids.size();
  const std::size_t d = p.cfg.dim;
  if (L == 0) throw data_error("cannot encode an empty sequence");
  if (L > p.cfg.max_len) throw data_error("sequence too long for the position table");
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= p.vocab_size)
      throw data_error("token id out of range: " + std::to_string(id));

  cache.ids.assign(ids.begin(), ids.end());
  cache.x0 = Mat(L, d);
  for (std::size_t i = 0; i < L; ++i) {
    const double* te = p.tok_emb.row(static_cast<std::size_t>(ids[i]));
    const double* pe = p.pos_emb.row(i);
    double* xi = cache.x0.row(i);
    for (std::size_t j = 0; j < d; ++j) xi[j] = te[j] + pe[j];
  }

  const std::size_t H = p.cfg.heads;
  const std::size_t dh = d / H;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.blocks.resize(p.blocks.size());
  const Mat* x = &cache.x0;
  for (std::size_t li = 0; li < p.blocks.size(); ++li) {
    const auto& b = p.blocks[li];
    BlockCache& c = cache.blocks[li];
    c.x_in = *x;
    layer_norm(c.x_in, b.ln1_g, b.ln1_b, c.n1, c.ln1);
    matmul_bias(c.n1, b.wq, &b.bq, c.q);
    matmul_bias(c.n1, b.wk, &b.bk, c.k);
    matmul_bias(c.n1, b.wv, &b.bv, c.v);

    c.att.assign(H, Mat(L, L));
    c.ctx = Mat(L, d);
    std::vector<double> row(L);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      Mat& att = c.att[h];
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j)
          row[j] = dot(c.q.row(i) + off, c.k.row(j) + off, dh) * inv_sqrt_dh;
        softmax_in_place(row);
        for (std::size_t j = 0; j < L; ++j) att.at(i, j) = row[j];
        double* ctx_i = c.ctx.row(i) + off;
        for (std::size_t j = 0; j < L; ++j) {
          const double aij = att.at(i, j);
          const double* vj = c.v.row(j) + off;
          for (std::size_t t = 0; t < dh; ++t) ctx_i[t] += aij * vj[t];
        }
      }
    }

    Mat att_out;
    matmul_bias(c.ctx, b.wo, &b.bo, att_out);
    c.a = c.x_in;
    for (std::size_t i = 0; i < c.a.size(); ++i) c.a.a[i] += att_out.a[i];

    layer_norm(c.a, b.ln2_g, b.ln2_b, c.n2, c.ln2);
    matmul_bias(c.n2, b.w1, &b.b1, c.f1);
    c.gelu_out = c.f1;
    for (auto& v : c.gelu_out.a) v = gelu(v);
    Mat f2;
    matmul_bias(c.gelu_out, b.w2, &b.b2, f2);
    Mat out = c.a;
    for (std::size_t i = 0; i < out.size(); ++i) out.a[i] += f2.a[i];
    cache.h_pre = std::move(out);
    x = &cache.h_pre;
  }
  if (p.blocks.empty()) cache.h_pre = cache.x0;
  layer_norm(cache.h_pre, p.final_ln_g, p.final_ln_b, cache.h, cache.final_ln);
  return cache.h;
}

inline Mat encode(const EncoderParameters& p, const MarkedSequence& seq,
                  ForwardCache* cache = nullptr) {
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  encode_ids(p, seq.ids, c);
  return c.h;
}

// Accumulates parameter gradients for d(loss)/d(hidden states) = d_h.
inline void encode_backward(const EncoderParameters& p, const ForwardCache& cache, const Mat& d_h,
                            EncoderParameters& grads) {
  const std::size_t L = cache.ids.size();
  const std::size_t d = p.cfg.dim;
  const std::size_t H = p.cfg.heads;
  const std::size_t dh = d / H;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat dx(L, d);
  layer_norm_backward(d_h, cache.h_pre, cache.final_ln, p.final_ln_g, dx, grads.final_ln_g,
                      grads.final_ln_b);

  for (std::size_t li = p.blocks.size(); li-- > 0;) {
    const auto& b = p.blocks[li];
    const BlockCache& c = cache.blocks[li];
    auto& gb = grads.blocks[li];

    // feed-forward sublayer: out = a + W2(gelu(W1 n2 + b1)) + b2
    Mat d_f2 = dx;  // residual passes dx through to `a` as well
    Mat d_gelu(L, p.cfg.ffn);
    add_matmul_bt(d_f2, b.w2, d_gelu);
    add_matmul_at(c.gelu_out, d_f2, gb.w2);
    add_col_sums(d_f2, gb.b2);
    Mat d_f1 = d_gelu;
    for (std::size_t i = 0; i < d_f1.size(); ++i) d_f1.a[i] *= gelu_grad(c.f1.a[i]);
    Mat d_n2(L, d);
    add_matmul_bt(d_f1, b.w1, d_n2);
    add_matmul_at(c.n2, d_f1, gb.w1);
    add_col_sums(d_f1, gb.b1);
    Mat d_a = dx;
    layer_norm_backward(d_n2, c.a, c.ln2, b.ln2_g, d_a, gb.ln2_g, gb.ln2_b);

    // attention sublayer: a = x_in + Wo ctx + bo
    Mat d_ctx(L, d);
    add_matmul_bt(d_a, b.wo, d_ctx);
    add_matmul_at(c.ctx, d_a, gb.wo);
    add_col_sums(d_a, gb.bo);

    Mat d_q(L, d), d_k(L, d), d_v(L, d);
    std::vector<double> d_att(L), d_scores(L);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      const Mat& att = c.att[h];
      for (std::size_t i = 0; i < L; ++i) {
        const double* dctx_i = d_ctx.row(i) + off;
        double dot_sum = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          d_att[j] = dot(dctx_i, c.v.row(j) + off, dh);
          dot_sum += att.at(i, j) * d_att[j];
        }
        for (std::size_t j = 0; j < L; ++j)
          d_scores[j] = att.at(i, j) * (d_att[j] - dot_sum) * inv_sqrt_dh;
        double* dq_i = d_q.row(i) + off;
        for (std::size_t j = 0; j < L; ++j) {
          const double aij = att.at(i, j);
          const double sij = d_scores[j];
          const double* kj = c.k.row(j) + off;
          const double* qi = c.q.row(i) + off;
          double* dv_j = d_v.row(j) + off;
          double* dk_j = d_k.row(j) + off;
          for (std::size_t t = 0; t < dh; ++t) {
            dv_j[t] += aij * dctx_i[t];
            dq_i[t] += sij * kj[t];
            dk_j[t] += sij * qi[t];
          }
        }
      }
    }

    Mat d_n1(L, d);
    add_matmul_bt(d_q, b.wq, d_n1);
    add_matmul_at(c.n1, d_q, gb.wq);
    add_col_sums(d_q, gb.bq);
    add_matmul_bt(d_k, b.wk, d_n1);
    add_matmul_at(c.n1, d_k, gb.wk);
    add_col_sums(d_k, gb.bk);
    add_matmul_bt(d_v, b.wv, d_n1);
    add_matmul_at(c.n1, d_v, gb.wv);
    add_col_sums(d_v, gb.bv);

    dx = d_a;  // gradient w.r.t. x_in through the residual
    layer_norm_backward(d_n1, c.x_in, c.ln1, b.ln1_g, dx, gb.ln1_g, gb.ln1_b);
  }

  for (std::size_t i = 0; i < L; ++i) {
    const double* dxi = dx.row(i);
    double* te = grads.tok_emb.row(static_cast<std::size_t>(cache.ids[i]));
    double* pe = grads.pos_emb.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      te[j] += dxi[j];
      pe[j] += dxi[j];
    }
  }
}

// ---- Eq. 1 representation ------------------------------------------------

// Concatenation of the hidden states at the two begin-entity markers.
inline std::vector<double> instance_representation(const EncoderParameters& p,
                                                   const MarkedSequence& seq,
                                                   ForwardCache* cache = nullptr) {
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  encode_ids(p, seq.ids, c);
  const std::size_t d = p.cfg.dim;
  std::vector<double> rep(2 * d);
  const double* hh = c.h.row(seq.h_index);
  const double* ht = c.h.row(seq.t_index);
  std::copy(hh, hh + d, rep.begin());
  std::copy(ht, ht + d, rep.begin() + static_cast<std::ptrdiff_t>(d));
  return rep;
}

inline void representation_backward(const EncoderParameters& p, const ForwardCache& cache,
                                    const MarkedSequence& seq, std::span<const double> d_rep,
                                    EncoderParameters& grads) {
  const std::size_t d = p.cfg.dim;
  Mat d_h(cache.ids.size(), d);
  double* dh_h = d_h.row(seq.h_index);
  double* dh_t = d_h.row(seq.t_index);
  for (std::size_t j = 0; j < d; ++j) {
    dh_h[j] += d_rep[j];
    dh_t[j] += d_rep[d + j];
  }
  encode_backward(p, cache, d_h, grads);
}

// ---- MLM head --------------------------------------------------------------

// Sum (not mean) of cross-entropies at the target positions, so callers can
// pool positions across sequences before normalizing.
inline double mlm_ce_sum(const EncoderParameters& p, const ForwardCache& cache,
                         std::span<const std::size_t> positions, std::span<const int> targets) {
  double total = 0.0;
  std::vector<double> logits(p.vocab_size);
  for (std::size_t t = 0; t < positions.size(); ++t) {
    const double* h = cache.h.row(positions[t]);
    for (std::size_t v = 0; v < p.vocab_size; ++v) logits[v] = p.mlm_b.a[v];
    for (std::size_t j = 0; j < p.cfg.dim; ++j) {
      const double hj = h[j];
      const double* wj = p.mlm_w.row(j);
      for (std::size_t v = 0; v < p.vocab_size; ++v) logits[v] += hj * wj[v];
    }
    total += cross_entropy_from_logits(logits, static_cast<std::size_t>(targets[t]));
  }
  return total;
}

// Mean cross-entropy over the target positions of one masked sequence.
inline double mlm_forward(const EncoderParameters& p, std::span<const int> masked_ids,
                          std::span<const std::size_t> positions, std::span<const int> targets) {
  if (positions.size() != targets.size())
    throw data_error("mlm targets misaligned with positions");
  if (positions.empty()) return 0.0;
  ForwardCache cache;
  encode_ids(p, masked_ids, cache);
  return mlm_ce_sum(p, cache, positions, targets) / static_cast<double>(positions.size());
}

// Backward of `scale * ce_sum`; accumulates into grads.
inline void mlm_backward(const EncoderParameters& p, const ForwardCache& cache,
                         std::span<const std::size_t> positions, std::span<const int> targets,
                         double scale, EncoderParameters& grads) {
  const std::size_t d = p.cfg.dim;
  Mat d_h(cache.ids.size(), d);
  std::vector<double> logits(p.vocab_size);
  for (std::size_t t = 0; t < positions.size(); ++t) {
    const std::size_t pos = positions[t];
    const double* h = cache.h.row(pos);
    for (std::size_t v = 0; v < p.vocab_size; ++v) logits[v] = p.mlm_b.a[v];
    for (std::size_t j = 0; j < d; ++j) {
      const double hj = h[j];
      const double* wj = p.mlm_w.row(j);
      for (std::size_t v = 0; v < p.vocab_size; ++v) logits[v] += hj * wj[v];
    }
    softmax_in_place(logits);
    logits[static_cast<std::size_t>(targets[t])] -= 1.0;  // now d(ce)/d(logit)
    double* dh_pos = d_h.row(pos);
    for (std::size_t v = 0; v < p.vocab_size; ++v) {
      const double dv = logits[v] * scale;
      if (dv == 0.0) continue;
      grads.mlm_b.a[v] += dv;
      for (std::size_t j = 0; j < d; ++j) grads.mlm_w.at(j, v) += h[j] * dv;
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double* wj = p.mlm_w.row(j);
      double acc = 0.0;
      for (std::size_t v = 0; v < p.vocab_size; ++v) acc += logits[v] * wj[v];
      dh_pos[j] += acc * scale;
    }
  }
  encode_backward(p, cache, d_h, grads);
}

// ---- classifier head -------------------------------------------------------

inline std::vector<double> classifier_logits(const EncoderParameters& p,
                                             std::span<const double> rep) {
  std::vector<double> logits(p.cls_b.a.begin(), p.cls_b.a.end());
  for (std::size_t j = 0; j < rep.size(); ++j) {
    const double rj = rep[j];
    const double* wj = p.cls_w.row(j);
    for (std::size_t r = 0; r < p.num_labels; ++r) logits[r] += rj * wj[r];
  }
  return logits;
}

// Backward of `scale * ce(softmax(logits), target)`; accumulates the head
// gradients and adds d(loss)/d(rep) into d_rep.
inline void classifier_backward(const EncoderParameters& p, std::span<const double> rep,
                                std::size_t target, double scale, EncoderParameters& grads,
                                std::vector<double>& d_rep) {
  std::vector<double> probs = classifier_logits(p, rep);
  softmax_in_place(probs);
  probs[target] -= 1.0;
  for (std::size_t r = 0; r < p.num_labels; ++r) {
    const double dr = probs[r] * scale;
    grads.cls_b.a[r] += dr;
    for (std::size_t j = 0; j < rep.size(); ++j) grads.cls_w.at(j, r) += rep[j] * dr;
  }
  for (std::size_t j = 0; j < rep.size(); ++j) {
    const double* wj = p.cls_w.row(j);
    double acc = 0.0;
    for (std::size_t r = 0; r < p.num_labels; ++r) acc += probs[r] * wj[r];
    d_rep[j] += acc * scale;
  }
}

}  // namespace wclre
