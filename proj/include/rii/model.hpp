#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rii/encoder.hpp"
#include "rii/heads.hpp"

namespace rii::model {

using Mat = Eigen::MatrixXd;

// One training/prediction example: the chunk list of a single document.
struct Document {
  std::vector<preprocess::EncodedInput> chunks;
};

// Encoder + optional Bi-LSTM aggregator + linear classifier. lstm is engaged
// iff the long-document path is configured.
struct ModelParams {
  encoder::EncoderParams enc;
  std::optional<heads::BiLstmParams> lstm;
  heads::ClassifierParams cls;
};

struct TensorRef {
  std::string name;
  Mat* tensor;
  bool is_encoder;
};

std::vector<TensorRef> tensor_refs(ModelParams& params);

ModelParams init_model(const encoder::EncoderConfig& config, bool long_doc_mode,
                       int lstm_hidden, std::uint64_t seed);
ModelParams zeros_like(const encoder::EncoderConfig& config, const ModelParams& like);

int feature_dim(const encoder::EncoderConfig& config, const ModelParams& params);

// dropout (one rate, from config) applies inside the encoder and on the
// classifier input; null stream = evaluation mode.
double predict_proba(const encoder::EncoderConfig& config, const ModelParams& params,
                     const Document& doc, rng::Stream* dropout = nullptr);

struct LossResult {
  double loss = 0.0;
  std::vector<double> probs;  // p_unreliable per document
};

// Mean (optionally class-weighted) cross-entropy over the batch plus exact
// gradients. freeze_encoder zeroes every encoder gradient.
LossResult loss_and_gradients(const encoder::EncoderConfig& config, ModelParams& params,
                              const std::vector<Document>& batch,
                              const std::vector<int>& labels, bool freeze_encoder,
                              ModelParams& grads, rng::Stream* dropout = nullptr,
                              const std::vector<double>& class_weights = {});

}  // namespace rii::model
