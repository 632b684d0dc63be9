#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rii/rng.hpp"

namespace rii::heads {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// One direction of the Bi-LSTM. Gate rows stacked i, f, g, o.
struct LstmDirectionParams {
  Mat wx;  // 4h x d_in
  Mat wh;  // 4h x h
  Mat b;   // 4h x 1
};

struct BiLstmParams {
  LstmDirectionParams fwd, bwd;
  int hidden = 0;
  int d_in = 0;
};

struct ClassifierParams {
  Mat w;  // 2 x feature_dim
  Mat b;  // 2 x 1
};

struct LstmStepCache {
  Vec x, h_prev, c_prev;
  Vec i, f, g, o, c, tanh_c;
};

struct BiLstmCache {
  std::vector<LstmStepCache> fwd, bwd;  // bwd stored in processing order
};

BiLstmParams init_bilstm(int d_in, int hidden, rng::Stream& rng);
ClassifierParams init_classifier(int feature_dim, rng::Stream& rng);

BiLstmParams bilstm_zeros_like(const BiLstmParams& p);
ClassifierParams classifier_zeros_like(const ClassifierParams& p);

// concat(final forward hidden, final backward hidden), dimension 2h.
Vec bilstm_document_embed(const std::vector<Vec>& chunk_features, const BiLstmParams& params,
                          BiLstmCache* cache = nullptr);

// d_embed is 2h; returns d(chunk features), accumulates into grads.
std::vector<Vec> bilstm_backward(const std::vector<Vec>& chunk_features,
                                 const BiLstmParams& params, const BiLstmCache& cache,
                                 const Vec& d_embed, BiLstmParams& grads);

// softmax(W f + b): (p_reliable, p_unreliable).
std::pair<double, double> classify(const Vec& features, const ClassifierParams& params);

// -ln(max(p_label, 1e-12))
double cross_entropy(const std::pair<double, double>& probs, int label);

// Combined softmax cross-entropy backward: d_logits = p - onehot(label),
// scaled by weight; returns d(features), accumulates into grads.
Vec classifier_backward(const Vec& features, const ClassifierParams& params,
                        const std::pair<double, double>& probs, int label, double weight,
                        ClassifierParams& grads);

}  // namespace rii::heads
