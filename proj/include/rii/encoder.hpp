#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rii/preprocess.hpp"
#include "rii/rng.hpp"

namespace rii::encoder {

using Mat = Eigen::MatrixXd;

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 128;
  int max_positions = 512;
  double dropout_rate = 0.1;

  int head_dim() const { return d_model / n_heads; }
};

struct LayerParams {
  Mat wq, wk, wv, wo;              // d_model x d_model
  Mat bq, bk, bv, bo;              // d_model x 1
  Mat w1, w2;                      // d_model x d_ff, d_ff x d_model
  Mat b1, b2;                      // d_ff x 1, d_model x 1
  Mat ln1_gain, ln1_bias;          // d_model x 1
  Mat ln2_gain, ln2_bias;          // d_model x 1
};

struct EncoderParams {
  Mat tok_emb;  // vocab_size x d_model
  Mat pos_emb;  // max_positions x d_model
  std::vector<LayerParams> layers;
};

// index 0 = embedding output, index L = top layer; each seq_len x d_model.
struct HiddenStack {
  std::vector<Mat> states;
};

struct LayerNormCache {
  Eigen::VectorXd inv_std;  // per row
  Mat xhat;
};

struct LayerCache {
  Mat x_in;
  Mat q, k, v;
  std::vector<Mat> attn;  // per head, seq x seq softmax weights
  Mat ctx;
  Mat attn_out;
  Mat attn_keep;  // dropout keep mask (scaled), empty when inactive
  Mat r1;
  LayerNormCache ln1;
  Mat y1;
  Mat ff_pre;   // seq x d_ff, pre-activation
  Mat ff_act;   // gelu(ff_pre)
  Mat ff_out;
  Mat ff_keep;
  Mat r2;
  LayerNormCache ln2;
};

struct ForwardCache {
  preprocess::EncodedInput input;
  std::vector<LayerCache> layers;
  HiddenStack stack;
};

// Weights ~ Normal(0, 0.02^2) from mt19937_64 + Box-Muller; layer-norm gains
// 1, all biases 0.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

// Post-norm encoder. Padding keys get a -1e9 additive pre-softmax score.
// dropout, when non-null, draws a deterministic mask stream.
ForwardCache forward_cached(const EncoderConfig& config, const EncoderParams& params,
                            const preprocess::EncodedInput& input, rng::Stream* dropout);

HiddenStack forward(const EncoderConfig& config, const EncoderParams& params,
                    const preprocess::EncodedInput& input, bool train_mode = false,
                    rng::Stream* dropout = nullptr);

// d_states[l] is the incoming gradient for stack state l (zero matrices where
// nothing pools from that state). Accumulates into grads; returns nothing.
void backward(const EncoderConfig& config, const EncoderParams& params,
              const ForwardCache& cache, const std::vector<Mat>& d_states,
              EncoderParams& grads);

// Concatenated cls-position vectors of the top min(4, n_layers+1) states,
// highest layer first.
Eigen::VectorXd pool_last_four(const HiddenStack& stack);

int pooled_dim(const EncoderConfig& config);

EncoderParams zeros_like(const EncoderConfig& config);

}  // namespace rii::encoder
