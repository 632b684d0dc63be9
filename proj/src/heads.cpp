#include "rii/heads.hpp"

#include <cmath>

#include "rii/errors.hpp"

namespace rii::heads {

namespace {

constexpr double kProbFloor = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_normal(Mat& m, rng::Stream& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
}

struct DirectionResult {
  Vec final_h;
};

DirectionResult run_direction(const std::vector<Vec>& inputs,
                              const LstmDirectionParams& p, int h,
                              std::vector<LstmStepCache>* cache) {
  Vec h_state = Vec::Zero(h);
  Vec c_state = Vec::Zero(h);
  for (const Vec& x : inputs) {
    const Vec z = p.wx * x + p.wh * h_state + p.b.col(0);
    LstmStepCache step;
    step.x = x;
    step.h_prev = h_state;
    step.c_prev = c_state;
    step.i = z.segment(0, h).unaryExpr([](double v) { return sigmoid(v); });
    step.f = z.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
    step.g = z.segment(2 * h, h).array().tanh();
    step.o = z.segment(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });
    step.c = step.f.cwiseProduct(c_state) + step.i.cwiseProduct(step.g);
    step.tanh_c = step.c.array().tanh();
    h_state = step.o.cwiseProduct(step.tanh_c);
    c_state = step.c;
    if (cache != nullptr) cache->push_back(std::move(step));
  }
  return {h_state};
}

// Walks the cached steps in reverse; d_inputs written in processing order.
void direction_backward(const LstmDirectionParams& p, const std::vector<LstmStepCache>& steps,
                        const Vec& d_final_h, LstmDirectionParams& grads,
                        std::vector<Vec>& d_inputs) {
  const int h = static_cast<int>(d_final_h.size());
  Vec d_h = d_final_h;
  Vec d_c = Vec::Zero(h);
  d_inputs.assign(steps.size(), Vec());
  for (std::size_t t = steps.size(); t-- > 0;) {
    const auto& s = steps[t];
    const Vec d_o = d_h.cwiseProduct(s.tanh_c);
    d_c += d_h.cwiseProduct(s.o).cwiseProduct(
        (1.0 - s.tanh_c.array().square()).matrix());
    const Vec d_i = d_c.cwiseProduct(s.g);
    const Vec d_g = d_c.cwiseProduct(s.i);
    const Vec d_f = d_c.cwiseProduct(s.c_prev);
    const Vec d_c_prev = d_c.cwiseProduct(s.f);

    Vec d_z(4 * h);
    d_z.segment(0, h) = d_i.cwiseProduct(s.i).cwiseProduct((1.0 - s.i.array()).matrix());
    d_z.segment(h, h) = d_f.cwiseProduct(s.f).cwiseProduct((1.0 - s.f.array()).matrix());
    d_z.segment(2 * h, h) = d_g.cwiseProduct((1.0 - s.g.array().square()).matrix());
    d_z.segment(3 * h, h) = d_o.cwiseProduct(s.o).cwiseProduct((1.0 - s.o.array()).matrix());

    grads.wx += d_z * s.x.transpose();
    grads.wh += d_z * s.h_prev.transpose();
    grads.b.col(0) += d_z;
    d_inputs[t] = p.wx.transpose() * d_z;
    d_h = p.wh.transpose() * d_z;
    d_c = d_c_prev;
  }
}

}  // namespace

BiLstmParams init_bilstm(int d_in, int hidden, rng::Stream& rng) {
  BiLstmParams p;
  p.hidden = hidden;
  p.d_in = d_in;
  for (auto* dir : {&p.fwd, &p.bwd}) {
    dir->wx = Mat(4 * hidden, d_in);
    dir->wh = Mat(4 * hidden, hidden);
    dir->b = Mat::Zero(4 * hidden, 1);
    fill_normal(dir->wx, rng, 0.02);
    fill_normal(dir->wh, rng, 0.02);
  }
  return p;
}

ClassifierParams init_classifier(int feature_dim, rng::Stream& rng) {
  ClassifierParams p;
  p.w = Mat(2, feature_dim);
  p.b = Mat::Zero(2, 1);
  fill_normal(p.w, rng, 0.02);
  return p;
}

BiLstmParams bilstm_zeros_like(const BiLstmParams& p) {
  BiLstmParams z = p;
  for (auto* dir : {&z.fwd, &z.bwd}) {
    dir->wx.setZero();
    dir->wh.setZero();
    dir->b.setZero();
  }
  return z;
}

ClassifierParams classifier_zeros_like(const ClassifierParams& p) {
  ClassifierParams z = p;
  z.w.setZero();
  z.b.setZero();
  return z;
}

Vec bilstm_document_embed(const std::vector<Vec>& chunk_features, const BiLstmParams& params,
                          BiLstmCache* cache) {
  if (chunk_features.empty()) throw EmptyInput("bilstm_document_embed with no chunks");
  for (const auto& f : chunk_features) {
    if (f.size() != params.d_in) {
      throw DimensionMismatch("chunk feature dim " + std::to_string(f.size()) +
                              " != lstm d_in " + std::to_string(params.d_in));
    }
  }
  std::vector<Vec> reversed(chunk_features.rbegin(), chunk_features.rend());
  const auto fwd = run_direction(chunk_features, params.fwd, params.hidden,
                                 cache ? &cache->fwd : nullptr);
  const auto bwd =
      run_direction(reversed, params.bwd, params.hidden, cache ? &cache->bwd : nullptr);
  Vec out(2 * params.hidden);
  out.head(params.hidden) = fwd.final_h;
  out.tail(params.hidden) = bwd.final_h;
  return out;
}

std::vector<Vec> bilstm_backward(const std::vector<Vec>& chunk_features,
                                 const BiLstmParams& params, const BiLstmCache& cache,
                                 const Vec& d_embed, BiLstmParams& grads) {
  const int h = params.hidden;
  std::vector<Vec> d_fwd_inputs, d_bwd_inputs;
  direction_backward(params.fwd, cache.fwd, d_embed.head(h), grads.fwd, d_fwd_inputs);
  direction_backward(params.bwd, cache.bwd, d_embed.tail(h), grads.bwd, d_bwd_inputs);

  std::vector<Vec> d_inputs(chunk_features.size());
  const std::size_t n = chunk_features.size();
  for (std::size_t t = 0; t < n; ++t) {
    d_inputs[t] = d_fwd_inputs[t] + d_bwd_inputs[n - 1 - t];
  }
  return d_inputs;
}

std::pair<double, double> classify(const Vec& features, const ClassifierParams& params) {
  if (features.size() != params.w.cols()) {
    throw DimensionMismatch("feature dim " + std::to_string(features.size()) +
                            " != classifier dim " + std::to_string(params.w.cols()));
  }
  const Vec logits = params.w * features + params.b.col(0);
  const double m = logits.maxCoeff();
  const double e0 = std::exp(logits(0) - m);
  const double e1 = std::exp(logits(1) - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

double cross_entropy(const std::pair<double, double>& probs, int label) {
  const double p = label == 1 ? probs.second : probs.first;
  return -std::log(std::max(p, kProbFloor));
}

Vec classifier_backward(const Vec& features, const ClassifierParams& params,
                        const std::pair<double, double>& probs, int label, double weight,
                        ClassifierParams& grads) {
  Vec d_logits(2);
  d_logits(0) = (probs.first - (label == 0 ? 1.0 : 0.0)) * weight;
  d_logits(1) = (probs.second - (label == 1 ? 1.0 : 0.0)) * weight;
  grads.w += d_logits * features.transpose();
  grads.b.col(0) += d_logits;
  return params.w.transpose() * d_logits;
}

}  // namespace rii::heads
