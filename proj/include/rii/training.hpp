#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rii/dataio.hpp"
#include "rii/model.hpp"

namespace rii::training {

struct TrainConfig {
  double learning_rate = 3e-5;
  double weight_decay = 0.01;
  int epochs = 20;
  int n_seeds = 10;
  bool freeze_first_epoch = true;
  int batch_size = 16;
  int max_len = 256;
  bool long_doc_mode = false;
  int max_chunks = 8;
  int lstm_hidden = 0;  // 0 = use d_model
  preprocess::CasingMode casing = preprocess::CasingMode::uncased_flat;
  std::string scheme = "bert_style";
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool class_weights = false;
  int vocab_min_count = 1;
  int vocab_max_size = 30000;
};

struct Fingerprint {
  std::string vocab_hash;
  preprocess::CasingMode casing = preprocess::CasingMode::uncased_flat;
  std::string scheme = "bert_style";
  int max_len = 256;
};

struct Checkpoint {
  encoder::EncoderConfig enc_config;
  TrainConfig train_config;
  model::ModelParams params;
  std::uint64_t seed = 0;
  double val_auc = 0.0;
  int best_epoch = 0;
  Fingerprint fingerprint;
  preprocess::Vocabulary vocab;
  std::string name;
};

// Ordered by id so serialized predictions are stable.
using PredictionSet = std::map<std::string, double>;

struct AdamState {
  model::ModelParams m, v;
};

// Bias-corrected Adam followed by decoupled decay p *= (1 - lr*wd). Frozen
// (encoder) tensors are untouched entirely, decay included.
void adam_step(model::ModelParams& params, model::ModelParams& grads, AdamState& state,
               const TrainConfig& config, int t, bool freeze_encoder);

// Per-post chunk list under a checkpoint-style preprocessing setup.
model::Document make_document(const std::string& text, const preprocess::Vocabulary& vocab,
                              const TrainConfig& config);

Checkpoint train_one(const dataio::Corpus& train, const dataio::Corpus& val,
                     encoder::EncoderConfig enc_config, const TrainConfig& config,
                     std::uint64_t seed,
                     const preprocess::Vocabulary* shared_vocab = nullptr);

struct MultiSeedResult {
  Checkpoint best;
  std::vector<std::pair<std::uint64_t, double>> leaderboard;  // sorted by auc desc
  std::vector<Checkpoint> checkpoints;                        // by seed
};

MultiSeedResult train_multi_seed(const dataio::Corpus& train, const dataio::Corpus& val,
                                 const encoder::EncoderConfig& enc_config,
                                 const TrainConfig& config, int n_seeds, int jobs = 1);

PredictionSet predict(const Checkpoint& checkpoint, const dataio::Corpus& corpus);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& dir);
Checkpoint load_checkpoint(const std::string& dir);

// Submission format: header then "id,p" with 9 decimal digits.
void save_predictions(const PredictionSet& preds, const std::string& path);
PredictionSet load_predictions(const std::string& path);

}  // namespace rii::training
