#include "rii/model.hpp"

#include <cmath>

#include "rii/errors.hpp"

namespace rii::model {

namespace {

using heads::Vec;

struct DocForward {
  std::vector<encoder::ForwardCache> chunk_caches;
  std::vector<Vec> chunk_features;  // pool_last_four per chunk
  heads::BiLstmCache lstm_cache;
  Vec feature;       // classifier input, pre-dropout
  Vec feature_keep;  // dropout keep mask, empty when inactive
  std::pair<double, double> probs;
};

Vec apply_feature_dropout(const Vec& feature, double rate, rng::Stream* dropout,
                          Vec* keep_out) {
  if (dropout == nullptr || rate <= 0.0) return feature;
  Vec keep(feature.size());
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < keep.size(); ++i) {
    keep(i) = dropout->unit() >= rate ? scale : 0.0;
  }
  if (keep_out != nullptr) *keep_out = keep;
  return feature.cwiseProduct(keep);
}

DocForward forward_document(const encoder::EncoderConfig& config, const ModelParams& params,
                            const Document& doc, rng::Stream* dropout) {
  if (doc.chunks.empty()) throw EmptyInput("document with no chunks");
  DocForward fwd;
  fwd.chunk_caches.reserve(doc.chunks.size());
  fwd.chunk_features.reserve(doc.chunks.size());
  for (const auto& chunk : doc.chunks) {
    auto cache = encoder::forward_cached(config, params.enc, chunk, dropout);
    fwd.chunk_features.push_back(encoder::pool_last_four(cache.stack));
    fwd.chunk_caches.push_back(std::move(cache));
  }
  if (params.lstm) {
    fwd.feature = heads::bilstm_document_embed(fwd.chunk_features, *params.lstm,
                                               &fwd.lstm_cache);
  } else {
    if (doc.chunks.size() != 1) {
      throw DimensionMismatch("multi-chunk document requires the Bi-LSTM path");
    }
    fwd.feature = fwd.chunk_features[0];
  }
  const Vec classifier_in =
      apply_feature_dropout(fwd.feature, config.dropout_rate, dropout, &fwd.feature_keep);
  fwd.probs = heads::classify(classifier_in, params.cls);
  return fwd;
}

void backward_document(const encoder::EncoderConfig& config, const ModelParams& params,
                       const Document& doc, const DocForward& fwd, int label, double weight,
                       bool freeze_encoder, ModelParams& grads) {
  const Vec classifier_in = fwd.feature_keep.size() > 0
                                ? Vec(fwd.feature.cwiseProduct(fwd.feature_keep))
                                : fwd.feature;
  Vec d_feature = heads::classifier_backward(classifier_in, params.cls, fwd.probs, label,
                                             weight, grads.cls);
  if (fwd.feature_keep.size() > 0) d_feature = d_feature.cwiseProduct(fwd.feature_keep);

  std::vector<Vec> d_chunk_features;
  if (params.lstm) {
    d_chunk_features = heads::bilstm_backward(fwd.chunk_features, *params.lstm,
                                              fwd.lstm_cache, d_feature, *grads.lstm);
  } else {
    d_chunk_features.push_back(d_feature);
  }
  if (freeze_encoder) return;

  const int n_states = config.n_layers + 1;
  const auto t = std::min(4, n_states);
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    const auto& cache = fwd.chunk_caches[c];
    const Eigen::Index seq = cache.stack.states[0].rows();
    std::vector<Mat> d_states(static_cast<std::size_t>(n_states),
                              Mat::Zero(seq, config.d_model));
    for (int j = 0; j < t; ++j) {
      d_states[static_cast<std::size_t>(n_states - 1 - j)].row(0) =
          d_chunk_features[c].segment(j * config.d_model, config.d_model).transpose();
    }
    encoder::backward(config, params.enc, cache, d_states, grads.enc);
  }
}

}  // namespace

std::vector<TensorRef> tensor_refs(ModelParams& params) {
  std::vector<TensorRef> refs;
  refs.push_back({"enc.tok_emb", &params.enc.tok_emb, true});
  refs.push_back({"enc.pos_emb", &params.enc.pos_emb, true});
  for (std::size_t l = 0; l < params.enc.layers.size(); ++l) {
    auto& lp = params.enc.layers[l];
    const std::string prefix = "enc.layer" + std::to_string(l) + ".";
    for (auto& [suffix, tensor] : std::initializer_list<std::pair<const char*, Mat*>>{
             {"wq", &lp.wq},       {"bq", &lp.bq},
             {"wk", &lp.wk},       {"bk", &lp.bk},
             {"wv", &lp.wv},       {"bv", &lp.bv},
             {"wo", &lp.wo},       {"bo", &lp.bo},
             {"w1", &lp.w1},       {"b1", &lp.b1},
             {"w2", &lp.w2},       {"b2", &lp.b2},
             {"ln1_gain", &lp.ln1_gain}, {"ln1_bias", &lp.ln1_bias},
             {"ln2_gain", &lp.ln2_gain}, {"ln2_bias", &lp.ln2_bias}}) {
      refs.push_back({prefix + suffix, tensor, true});
    }
  }
  if (params.lstm) {
    for (auto& [dir_name, dir] : std::initializer_list<
             std::pair<const char*, heads::LstmDirectionParams*>>{
             {"lstm.fwd.", &params.lstm->fwd}, {"lstm.bwd.", &params.lstm->bwd}}) {
      refs.push_back({std::string(dir_name) + "wx", &dir->wx, false});
      refs.push_back({std::string(dir_name) + "wh", &dir->wh, false});
      refs.push_back({std::string(dir_name) + "b", &dir->b, false});
    }
  }
  refs.push_back({"cls.w", &params.cls.w, false});
  refs.push_back({"cls.b", &params.cls.b, false});
  return refs;
}

ModelParams init_model(const encoder::EncoderConfig& config, bool long_doc_mode,
                       int lstm_hidden, std::uint64_t seed) {
  ModelParams params;
  params.enc = encoder::init_params(config, seed);
  rng::Stream head_rng(seed ^ 0x9e3779b97f4a7c15ull);
  const int pooled = encoder::pooled_dim(config);
  if (long_doc_mode) {
    const int h = lstm_hidden > 0 ? lstm_hidden : config.d_model;
    params.lstm = heads::init_bilstm(pooled, h, head_rng);
    params.cls = heads::init_classifier(2 * h, head_rng);
  } else {
    params.cls = heads::init_classifier(pooled, head_rng);
  }
  return params;
}

ModelParams zeros_like(const encoder::EncoderConfig& config, const ModelParams& like) {
  ModelParams z;
  z.enc = encoder::zeros_like(config);
  if (like.lstm) z.lstm = heads::bilstm_zeros_like(*like.lstm);
  z.cls = heads::classifier_zeros_like(like.cls);
  return z;
}

int feature_dim(const encoder::EncoderConfig& config, const ModelParams& params) {
  return params.lstm ? 2 * params.lstm->hidden : encoder::pooled_dim(config);
}

double predict_proba(const encoder::EncoderConfig& config, const ModelParams& params,
                     const Document& doc, rng::Stream* dropout) {
  return forward_document(config, params, doc, dropout).probs.second;
}

LossResult loss_and_gradients(const encoder::EncoderConfig& config, ModelParams& params,
                              const std::vector<Document>& batch,
                              const std::vector<int>& labels, bool freeze_encoder,
                              ModelParams& grads, rng::Stream* dropout,
                              const std::vector<double>& class_weights) {
  if (batch.empty()) throw EmptyInput("loss_and_gradients on empty batch");
  if (batch.size() != labels.size()) throw ShapeMismatch("batch/labels size mismatch");

  LossResult result;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int label = labels[i];
    const double cw =
        class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(label)];
    const auto fwd = forward_document(config, params, batch[i], dropout);
    result.loss += cw * heads::cross_entropy(fwd.probs, label) * inv_n;
    result.probs.push_back(fwd.probs.second);
    backward_document(config, params, batch[i], fwd, label, cw * inv_n, freeze_encoder,
                      grads);
  }
  return result;
}

}  // namespace rii::model
