#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "afguide/nn/layers.hpp"

namespace afguide::nn {

struct TransformerSpec {
  int n_blocks = 3;
  int n_heads = 1;
  int d_embed = 128;
  double dropout = 0.1;
  int max_tokens = 40;

  void validate() const {
    if (n_blocks < 1 || n_heads < 1 || d_embed < 1 || max_tokens < 1) {
      throw std::invalid_argument("TransformerSpec: sizes must be >= 1");
    }
    if (d_embed % n_heads != 0) {
      throw std::invalid_argument("TransformerSpec: d_embed must be divisible by n_heads");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw std::invalid_argument("TransformerSpec: dropout must be in [0, 1)");
    }
  }
  bool operator==(const TransformerSpec&) const = default;
};

/// Rows of a token matrix are laid out sequence-major: row b * seq_len + i
/// is token i of sequence b. `valid` marks real (non-padding) tokens; keys
/// that are not valid are never attended to by any query.
struct TokenLayout {
  int batch = 1;
  int seq_len = 1;
  std::vector<std::uint8_t> valid;

  static TokenLayout dense(int batch, int seq_len) {
    return {batch, seq_len, std::vector<std::uint8_t>(static_cast<std::size_t>(batch * seq_len), 1)};
  }
  int rows() const { return batch * seq_len; }
};

/// Dropout state shared by the blocks of one forward pass.
struct DropoutContext {
  bool training = false;
  double rate = 0.0;
  Rng* rng = nullptr;

  bool active() const { return training && rate > 0.0 && rng != nullptr; }
};

template <typename T>
Matrix<T> make_dropout_mask(Eigen::Index rows, Eigen::Index cols, DropoutContext& ctx) {
  Matrix<T> mask(rows, cols);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - ctx.rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = ctx.rng->uniform() < ctx.rate ? T(0) : keep_scale;
  }
  return mask;
}

/// Pre-norm decoder block: x + Attn(LN(x)), then x + FFN(LN(x)).
template <typename T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const std::string& name, int d_embed, int n_heads)
      : d_(d_embed),
        heads_(n_heads),
        ln1_(name + ".ln1", d_embed),
        qkv_(name + ".attn.qkv", d_embed, 3 * d_embed),
        proj_(name + ".attn.proj", d_embed, d_embed),
        ln2_(name + ".ln2", d_embed),
        fc_(name + ".mlp.fc", d_embed, 4 * d_embed),
        fc_out_(name + ".mlp.out", 4 * d_embed, d_embed) {}

  void init(Rng& rng, double stddev = 0.02) {
    for (Linear<T>* l : {&qkv_, &proj_, &fc_, &fc_out_}) {
      init_trunc_normal(l->weight, stddev, rng);
      l->bias.value.setZero();
    }
  }

  void forward(const Matrix<T>& x, const TokenLayout& layout, DropoutContext& drop,
               Matrix<T>& y) {
    layout_ = &layout;
    x_ = x;
    ln1_.forward(x, h1_);
    qkv_.forward(h1_, qkv_out_);
    attention_forward(drop);
    proj_.forward(attn_, proj_out_);
    drop_attn_ = drop.active();
    if (drop_attn_) {
      mask_attn_ = make_dropout_mask<T>(proj_out_.rows(), proj_out_.cols(), drop);
      proj_out_.array() *= mask_attn_.array();
    }
    x_mid_ = x + proj_out_;
    ln2_.forward(x_mid_, h2_);
    fc_.forward(h2_, fc_pre_);
    gelu_forward(fc_pre_, gelu_out_, gelu_tanh_);
    Matrix<T> m;
    fc_out_.forward(gelu_out_, m);
    drop_mlp_ = drop.active();
    if (drop_mlp_) {
      mask_mlp_ = make_dropout_mask<T>(m.rows(), m.cols(), drop);
      m.array() *= mask_mlp_.array();
    }
    y = x_mid_ + m;
  }

  void backward(const Matrix<T>& dy, Matrix<T>& dx) {
    Matrix<T> dm = dy;
    if (drop_mlp_) dm.array() *= mask_mlp_.array();
    Matrix<T> dg;
    fc_out_.backward(gelu_out_, dm, &dg);
    gelu_backward(fc_pre_, gelu_tanh_, dg);
    Matrix<T> dh2;
    fc_.backward(h2_, dg, &dh2);
    Matrix<T> dmid_ln;
    ln2_.backward(dh2, dmid_ln);
    Matrix<T> dmid = dy + dmid_ln;

    Matrix<T> dproj = dmid;
    if (drop_attn_) dproj.array() *= mask_attn_.array();
    Matrix<T> dattn;
    proj_.backward(attn_, dproj, &dattn);
    Matrix<T> dqkv = attention_backward(dattn);
    Matrix<T> dh1;
    qkv_.backward(h1_, dqkv, &dh1);
    Matrix<T> dx_ln;
    ln1_.backward(dh1, dx_ln);
    dx = dmid + dx_ln;
  }

  void collect(ParamList<T>& out) {
    ln1_.collect(out);
    qkv_.collect(out);
    proj_.collect(out);
    ln2_.collect(out);
    fc_.collect(out);
    fc_out_.collect(out);
  }

 private:
  struct HeadCache {
    Matrix<T> probs;  // L x L softmax weights (0 where not allowed)
    Matrix<T> drop;   // L x L dropout factors, empty when inactive
  };

  // allowed(b, i, j): key j visible to query i of sequence b.
  void build_allowed() {
    const int L = layout_->seq_len;
    allowed_.assign(static_cast<std::size_t>(layout_->batch) * L * L, 0);
    for (int b = 0; b < layout_->batch; ++b) {
      for (int i = 0; i < L; ++i) {
        bool any = false;
        for (int j = 0; j <= i; ++j) {
          if (layout_->valid[static_cast<std::size_t>(b * L + j)]) {
            allowed_[idx(b, i, j)] = 1;
            any = true;
          }
        }
        // A query with no visible key (leading padding) attends to itself.
        if (!any) allowed_[idx(b, i, i)] = 1;
      }
    }
  }

  std::size_t idx(int b, int i, int j) const {
    const auto L = static_cast<std::size_t>(layout_->seq_len);
    return (static_cast<std::size_t>(b) * L + static_cast<std::size_t>(i)) * L +
           static_cast<std::size_t>(j);
  }

  void attention_forward(DropoutContext& drop) {
    const int L = layout_->seq_len;
    const int dh = d_ / heads_;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    build_allowed();
    attn_ = Matrix<T>::Zero(qkv_out_.rows(), d_);
    heads_cache_.assign(static_cast<std::size_t>(layout_->batch * heads_), HeadCache{});
    Matrix<T> scores(L, L);
    for (int b = 0; b < layout_->batch; ++b) {
      const auto r0 = static_cast<Eigen::Index>(b) * L;
      for (int h = 0; h < heads_; ++h) {
        const auto q = qkv_out_.block(r0, h * dh, L, dh);
        const auto k = qkv_out_.block(r0, d_ + h * dh, L, dh);
        const auto v = qkv_out_.block(r0, 2 * d_ + h * dh, L, dh);
        HeadCache& cache = heads_cache_[static_cast<std::size_t>(b * heads_ + h)];
        scores.noalias() = (q * k.transpose()) * scale;
        cache.probs = Matrix<T>::Zero(L, L);
        for (int i = 0; i < L; ++i) {
          T max_score = -std::numeric_limits<T>::infinity();
          for (int j = 0; j <= i; ++j) {
            if (allowed_[idx(b, i, j)]) max_score = std::max(max_score, scores(i, j));
          }
          T denom = 0;
          for (int j = 0; j <= i; ++j) {
            if (!allowed_[idx(b, i, j)]) continue;
            const T e = std::exp(scores(i, j) - max_score);
            cache.probs(i, j) = e;
            denom += e;
          }
          cache.probs.row(i).head(i + 1) /= denom;
        }
        if (drop.active()) {
          cache.drop = make_dropout_mask<T>(L, L, drop);
          attn_.block(r0, h * dh, L, dh).noalias() =
              cache.probs.cwiseProduct(cache.drop) * v;
        } else {
          attn_.block(r0, h * dh, L, dh).noalias() = cache.probs * v;
        }
      }
    }
  }

  Matrix<T> attention_backward(const Matrix<T>& dattn) {
    const int L = layout_->seq_len;
    const int dh = d_ / heads_;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    Matrix<T> dqkv(qkv_out_.rows(), 3 * d_);
    Matrix<T> dp(L, L);
    Matrix<T> ds(L, L);
    for (int b = 0; b < layout_->batch; ++b) {
      const auto r0 = static_cast<Eigen::Index>(b) * L;
      for (int h = 0; h < heads_; ++h) {
        const auto q = qkv_out_.block(r0, h * dh, L, dh);
        const auto k = qkv_out_.block(r0, d_ + h * dh, L, dh);
        const auto v = qkv_out_.block(r0, 2 * d_ + h * dh, L, dh);
        const auto dy = dattn.block(r0, h * dh, L, dh);
        const HeadCache& cache = heads_cache_[static_cast<std::size_t>(b * heads_ + h)];
        dp.noalias() = dy * v.transpose();
        if (cache.drop.size() > 0) {
          dqkv.block(r0, 2 * d_ + h * dh, L, dh).noalias() =
              cache.probs.cwiseProduct(cache.drop).transpose() * dy;
          dp.array() *= cache.drop.array();
        } else {
          dqkv.block(r0, 2 * d_ + h * dh, L, dh).noalias() = cache.probs.transpose() * dy;
        }
        // probs is zero outside the allowed pattern, so ds is too.
        const Vector<T> weighted = cache.probs.cwiseProduct(dp).rowwise().sum();
        ds = (cache.probs.array() * (dp.colwise() - weighted).array() * scale).matrix();
        dqkv.block(r0, h * dh, L, dh).noalias() = ds * k;
        dqkv.block(r0, d_ + h * dh, L, dh).noalias() = ds.transpose() * q;
      }
    }
    return dqkv;
  }

  int d_ = 0;
  int heads_ = 1;
  LayerNorm<T> ln1_;
  Linear<T> qkv_;
  Linear<T> proj_;
  LayerNorm<T> ln2_;
  Linear<T> fc_;
  Linear<T> fc_out_;

  const TokenLayout* layout_ = nullptr;
  std::vector<std::uint8_t> allowed_;
  std::vector<HeadCache> heads_cache_;
  Matrix<T> x_, h1_, qkv_out_, attn_, proj_out_, x_mid_, h2_, fc_pre_, gelu_out_, gelu_tanh_;
  Matrix<T> mask_attn_, mask_mlp_;
  bool drop_attn_ = false;
  bool drop_mlp_ = false;
};

/// Stack of causal decoder blocks. No positional table and no final norm:
/// positional content is added by the caller before the trunk.
template <typename T>
class Transformer {
 public:
  Transformer() = default;
  Transformer(const std::string& name, const TransformerSpec& spec) : spec_(spec) {
    spec.validate();
    for (int i = 0; i < spec.n_blocks; ++i) {
      blocks_.emplace_back(name + ".block" + std::to_string(i), spec.d_embed, spec.n_heads);
    }
  }

  const TransformerSpec& spec() const { return spec_; }

  void init(Rng& rng) {
    for (auto& b : blocks_) b.init(rng);
  }

  /// `train` enables dropout driven by `rng`; eval mode is deterministic.
  Matrix<T> forward(const Matrix<T>& tokens, const TokenLayout& layout, bool train = false,
                    Rng* rng = nullptr) {
    if (layout.seq_len > spec_.max_tokens) {
      throw std::invalid_argument("Transformer: sequence of " + std::to_string(layout.seq_len) +
                                  " tokens exceeds max_tokens " +
                                  std::to_string(spec_.max_tokens));
    }
    if (tokens.rows() != layout.rows() || tokens.cols() != spec_.d_embed ||
        layout.valid.size() != static_cast<std::size_t>(layout.rows())) {
      throw std::invalid_argument("Transformer: token matrix does not match layout");
    }
    layout_ = layout;
    DropoutContext drop{train, spec_.dropout, rng};
    Matrix<T> cur = tokens;
    Matrix<T> next;
    for (auto& b : blocks_) {
      b.forward(cur, layout_, drop, next);
      cur.swap(next);
    }
    return cur;
  }

  Matrix<T> backward(const Matrix<T>& dy) {
    Matrix<T> grad = dy;
    Matrix<T> dx;
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      it->backward(grad, dx);
      grad.swap(dx);
    }
    return grad;
  }

  void collect(ParamList<T>& out) {
    for (auto& b : blocks_) b.collect(out);
  }

  ParamList<T> params() {
    ParamList<T> out;
    collect(out);
    return out;
  }

 private:
  TransformerSpec spec_;
  std::vector<TransformerBlock<T>> blocks_;
  TokenLayout layout_;
};

}  // namespace afguide::nn
