#include "rii/encoder.hpp"

#include <cmath>

#include "rii/errors.hpp"

namespace rii::encoder {

namespace {

constexpr double kLnEps = 1e-6;
constexpr double kMaskScore = -1e9;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

void fill_normal(Mat& m, rng::Stream& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, rng::Stream& rng) {
  Mat keep(rows, cols);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < keep.size(); ++i) {
    keep.data()[i] = rng.unit() >= rate ? scale : 0.0;
  }
  return keep;
}

// y = gain .* (x - mean) / sqrt(var + eps) + bias, per row.
Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, LayerNormCache& cache) {
  const Eigen::Index s = x.rows(), d = x.cols();
  cache.inv_std.resize(s);
  cache.xhat.resize(s, d);
  Mat out(s, d);
  for (Eigen::Index i = 0; i < s; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double inv_std = 1.0 / std::sqrt(var + kLnEps);
    cache.inv_std(i) = inv_std;
    cache.xhat.row(i) = (x.row(i).array() - mean) * inv_std;
    out.row(i) = cache.xhat.row(i).cwiseProduct(gain.transpose()) + bias.transpose();
  }
  return out;
}

Mat layer_norm_backward(const Mat& d_y, const Mat& gain, const LayerNormCache& cache,
                        Mat& d_gain, Mat& d_bias) {
  const Eigen::Index s = d_y.rows(), d = d_y.cols();
  Mat d_x(s, d);
  for (Eigen::Index i = 0; i < s; ++i) {
    d_gain += d_y.row(i).cwiseProduct(cache.xhat.row(i)).transpose();
    d_bias += d_y.row(i).transpose();
    const Eigen::RowVectorXd d_xhat = d_y.row(i).cwiseProduct(gain.transpose());
    const double m1 = d_xhat.mean();
    const double m2 = d_xhat.cwiseProduct(cache.xhat.row(i)).mean();
    d_x.row(i) =
        cache.inv_std(i) *
        (d_xhat.array() - m1 - cache.xhat.row(i).array() * m2).matrix();
  }
  return d_x;
}

}  // namespace

EncoderParams zeros_like(const EncoderConfig& c) {
  EncoderParams p;
  p.tok_emb = Mat::Zero(c.vocab_size, c.d_model);
  p.pos_emb = Mat::Zero(c.max_positions, c.d_model);
  p.layers.resize(static_cast<std::size_t>(c.n_layers));
  for (auto& l : p.layers) {
    l.wq = l.wk = l.wv = l.wo = Mat::Zero(c.d_model, c.d_model);
    l.bq = l.bk = l.bv = l.bo = Mat::Zero(c.d_model, 1);
    l.w1 = Mat::Zero(c.d_model, c.d_ff);
    l.w2 = Mat::Zero(c.d_ff, c.d_model);
    l.b1 = Mat::Zero(c.d_ff, 1);
    l.b2 = Mat::Zero(c.d_model, 1);
    l.ln1_gain = l.ln1_bias = l.ln2_gain = l.ln2_bias = Mat::Zero(c.d_model, 1);
  }
  return p;
}

EncoderParams init_params(const EncoderConfig& c, std::uint64_t seed) {
  if (c.d_model % c.n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
  rng::Stream rng(seed);
  EncoderParams p = zeros_like(c);
  fill_normal(p.tok_emb, rng, 0.02);
  fill_normal(p.pos_emb, rng, 0.02);
  for (auto& l : p.layers) {
    fill_normal(l.wq, rng, 0.02);
    fill_normal(l.wk, rng, 0.02);
    fill_normal(l.wv, rng, 0.02);
    fill_normal(l.wo, rng, 0.02);
    fill_normal(l.w1, rng, 0.02);
    fill_normal(l.w2, rng, 0.02);
    l.ln1_gain.setOnes();
    l.ln2_gain.setOnes();
  }
  return p;
}

ForwardCache forward_cached(const EncoderConfig& c, const EncoderParams& params,
                            const preprocess::EncodedInput& input, rng::Stream* dropout) {
  const auto seq = static_cast<Eigen::Index>(input.ids.size());
  const Eigen::Index d = c.d_model;
  if (seq > c.max_positions) {
    throw PositionOverflow("sequence length " + std::to_string(seq) + " exceeds max_positions " +
                           std::to_string(c.max_positions));
  }
  for (const int id : input.ids) {
    if (id < 0 || id >= c.vocab_size) {
      throw TokenOutOfRange("token id " + std::to_string(id) + " outside vocab of " +
                            std::to_string(c.vocab_size));
    }
  }

  ForwardCache cache;
  cache.input = input;
  Mat x(seq, d);
  for (Eigen::Index i = 0; i < seq; ++i) {
    x.row(i) = params.tok_emb.row(input.ids[static_cast<std::size_t>(i)]) +
               params.pos_emb.row(i);
  }
  cache.stack.states.push_back(x);

  const Eigen::Index dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = dropout != nullptr && c.dropout_rate > 0.0;

  for (const auto& lp : params.layers) {
    LayerCache lc;
    lc.x_in = x;
    lc.q = (x * lp.wq).rowwise() + lp.bq.col(0).transpose();
    lc.k = (x * lp.wk).rowwise() + lp.bk.col(0).transpose();
    lc.v = (x * lp.wv).rowwise() + lp.bv.col(0).transpose();
    lc.ctx.resize(seq, d);
    lc.attn.resize(static_cast<std::size_t>(c.n_heads));
    for (int h = 0; h < c.n_heads; ++h) {
      const auto qh = lc.q.middleCols(h * dh, dh);
      const auto kh = lc.k.middleCols(h * dh, dh);
      const auto vh = lc.v.middleCols(h * dh, dh);
      Mat scores = qh * kh.transpose() * scale;
      for (Eigen::Index j = 0; j < seq; ++j) {
        if (input.mask[static_cast<std::size_t>(j)] == 0) {
          scores.col(j).array() += kMaskScore;
        }
      }
      Mat& a = lc.attn[static_cast<std::size_t>(h)];
      a.resize(seq, seq);
      for (Eigen::Index i = 0; i < seq; ++i) {
        const double row_max = scores.row(i).maxCoeff();
        a.row(i) = (scores.row(i).array() - row_max).exp();
        a.row(i) /= a.row(i).sum();
      }
      lc.ctx.middleCols(h * dh, dh) = a * vh;
    }
    lc.attn_out = (lc.ctx * lp.wo).rowwise() + lp.bo.col(0).transpose();
    if (drop) {
      lc.attn_keep = dropout_mask(seq, d, c.dropout_rate, *dropout);
      lc.r1 = lc.x_in + lc.attn_out.cwiseProduct(lc.attn_keep);
    } else {
      lc.r1 = lc.x_in + lc.attn_out;
    }
    lc.y1 = layer_norm(lc.r1, lp.ln1_gain, lp.ln1_bias, lc.ln1);

    lc.ff_pre = (lc.y1 * lp.w1).rowwise() + lp.b1.col(0).transpose();
    lc.ff_act = lc.ff_pre.unaryExpr([](double v) { return gelu(v); });
    lc.ff_out = (lc.ff_act * lp.w2).rowwise() + lp.b2.col(0).transpose();
    if (drop) {
      lc.ff_keep = dropout_mask(seq, d, c.dropout_rate, *dropout);
      lc.r2 = lc.y1 + lc.ff_out.cwiseProduct(lc.ff_keep);
    } else {
      lc.r2 = lc.y1 + lc.ff_out;
    }
    x = layer_norm(lc.r2, lp.ln2_gain, lp.ln2_bias, lc.ln2);

    cache.stack.states.push_back(x);
    cache.layers.push_back(std::move(lc));
  }
  return cache;
}

HiddenStack forward(const EncoderConfig& c, const EncoderParams& params,
                    const preprocess::EncodedInput& input, bool train_mode,
                    rng::Stream* dropout) {
  auto cache = forward_cached(c, params, input, train_mode ? dropout : nullptr);
  return std::move(cache.stack);
}

void backward(const EncoderConfig& c, const EncoderParams& params, const ForwardCache& cache,
              const std::vector<Mat>& d_states, EncoderParams& grads) {
  const auto seq = static_cast<Eigen::Index>(cache.input.ids.size());
  const Eigen::Index dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat d = d_states.back();
  for (int l = c.n_layers - 1; l >= 0; --l) {
    const auto& lp = params.layers[static_cast<std::size_t>(l)];
    const auto& lc = cache.layers[static_cast<std::size_t>(l)];
    auto& lg = grads.layers[static_cast<std::size_t>(l)];

    // out = LN2(r2)
    Mat d_r2 = layer_norm_backward(d, lp.ln2_gain, lc.ln2, lg.ln2_gain, lg.ln2_bias);

    // r2 = y1 + drop(ff_out)
    Mat d_y1 = d_r2;
    Mat d_ff_out = lc.ff_keep.size() > 0 ? d_r2.cwiseProduct(lc.ff_keep) : d_r2;

    // ff_out = gelu(y1*w1 + b1) * w2 + b2
    lg.w2 += lc.ff_act.transpose() * d_ff_out;
    lg.b2 += d_ff_out.colwise().sum().transpose();
    Mat d_ff_act = d_ff_out * lp.w2.transpose();
    Mat d_ff_pre =
        d_ff_act.cwiseProduct(lc.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    lg.w1 += lc.y1.transpose() * d_ff_pre;
    lg.b1 += d_ff_pre.colwise().sum().transpose();
    d_y1 += d_ff_pre * lp.w1.transpose();

    // y1 = LN1(r1)
    Mat d_r1 = layer_norm_backward(d_y1, lp.ln1_gain, lc.ln1, lg.ln1_gain, lg.ln1_bias);

    // r1 = x_in + drop(attn_out)
    Mat d_x_in = d_r1;
    Mat d_attn_out = lc.attn_keep.size() > 0 ? d_r1.cwiseProduct(lc.attn_keep) : d_r1;

    // attn_out = ctx * wo + bo
    lg.wo += lc.ctx.transpose() * d_attn_out;
    lg.bo += d_attn_out.colwise().sum().transpose();
    Mat d_ctx = d_attn_out * lp.wo.transpose();

    Mat d_q = Mat::Zero(seq, c.d_model);
    Mat d_k = Mat::Zero(seq, c.d_model);
    Mat d_v = Mat::Zero(seq, c.d_model);
    for (int h = 0; h < c.n_heads; ++h) {
      const auto qh = lc.q.middleCols(h * dh, dh);
      const auto kh = lc.k.middleCols(h * dh, dh);
      const auto vh = lc.v.middleCols(h * dh, dh);
      const Mat& a = lc.attn[static_cast<std::size_t>(h)];
      const auto d_ctx_h = d_ctx.middleCols(h * dh, dh);

      Mat d_a = d_ctx_h * vh.transpose();
      d_v.middleCols(h * dh, dh) = a.transpose() * d_ctx_h;

      Mat d_scores(seq, seq);
      for (Eigen::Index i = 0; i < seq; ++i) {
        const double dot = d_a.row(i).cwiseProduct(a.row(i)).sum();
        d_scores.row(i) = a.row(i).cwiseProduct((d_a.row(i).array() - dot).matrix());
      }
      d_q.middleCols(h * dh, dh) = d_scores * kh * scale;
      d_k.middleCols(h * dh, dh) = d_scores.transpose() * qh * scale;
    }

    lg.wq += lc.x_in.transpose() * d_q;
    lg.bq += d_q.colwise().sum().transpose();
    lg.wk += lc.x_in.transpose() * d_k;
    lg.bk += d_k.colwise().sum().transpose();
    lg.wv += lc.x_in.transpose() * d_v;
    lg.bv += d_v.colwise().sum().transpose();
    d_x_in += d_q * lp.wq.transpose() + d_k * lp.wk.transpose() + d_v * lp.wv.transpose();

    d = std::move(d_x_in);
    d += d_states[static_cast<std::size_t>(l)];
  }

  for (Eigen::Index i = 0; i < seq; ++i) {
    grads.tok_emb.row(cache.input.ids[static_cast<std::size_t>(i)]) += d.row(i);
    grads.pos_emb.row(i) += d.row(i);
  }
}

Eigen::VectorXd pool_last_four(const HiddenStack& stack) {
  if (stack.states.empty()) throw EmptyInput("pool_last_four on empty stack");
  const auto n_states = stack.states.size();
  const auto t = std::min<std::size_t>(4, n_states);
  const Eigen::Index d = stack.states[0].cols();
  Eigen::VectorXd feat(static_cast<Eigen::Index>(t) * d);
  for (std::size_t j = 0; j < t; ++j) {
    feat.segment(static_cast<Eigen::Index>(j) * d, d) =
        stack.states[n_states - 1 - j].row(0).transpose();
  }
  return feat;
}

int pooled_dim(const EncoderConfig& c) {
  return static_cast<int>(std::min(4, c.n_layers + 1)) * c.d_model;
}

}  // namespace rii::encoder
