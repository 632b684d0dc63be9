#include "rii/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "rii/archive.hpp"
#include "rii/errors.hpp"
#include "rii/metrics.hpp"

namespace rii::training {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void shuffle(std::vector<std::size_t>& idx, rng::Stream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.below(i))]);
  }
}

std::vector<double> class_weight_table(const std::vector<int>& labels) {
  double n_pos = 0;
  for (const int l : labels) n_pos += l;
  const double n = static_cast<double>(labels.size());
  const double n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return {1.0, 1.0};
  return {n / (2.0 * n_neg), n / (2.0 * n_pos)};
}

double validation_auc(const encoder::EncoderConfig& enc_config,
                      const model::ModelParams& params,
                      const std::vector<model::Document>& docs,
                      const std::vector<int>& labels) {
  metrics::ScoredLabels data;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    data.scores.push_back(model::predict_proba(enc_config, params, docs[i]));
    data.labels.push_back(labels[i]);
  }
  return metrics::roc_auc(data);
}

bool has_both_classes(const std::vector<int>& labels) {
  bool pos = false, neg = false;
  for (const int l : labels) (l == 1 ? pos : neg) = true;
  return pos && neg;
}

json config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"epochs", c.epochs},
              {"n_seeds", c.n_seeds},
              {"freeze_first_epoch", c.freeze_first_epoch},
              {"batch_size", c.batch_size},
              {"max_len", c.max_len},
              {"long_doc_mode", c.long_doc_mode},
              {"max_chunks", c.max_chunks},
              {"lstm_hidden", c.lstm_hidden},
              {"casing", preprocess::casing_name(c.casing)},
              {"scheme", c.scheme},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"class_weights", c.class_weights},
              {"vocab_min_count", c.vocab_min_count},
              {"vocab_max_size", c.vocab_max_size}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate");
  c.weight_decay = j.at("weight_decay");
  c.epochs = j.at("epochs");
  c.n_seeds = j.at("n_seeds");
  c.freeze_first_epoch = j.at("freeze_first_epoch");
  c.batch_size = j.at("batch_size");
  c.max_len = j.at("max_len");
  c.long_doc_mode = j.at("long_doc_mode");
  c.max_chunks = j.at("max_chunks");
  c.lstm_hidden = j.at("lstm_hidden");
  c.casing = preprocess::casing_from_name(j.at("casing"));
  c.scheme = j.at("scheme");
  c.adam_beta1 = j.at("adam_beta1");
  c.adam_beta2 = j.at("adam_beta2");
  c.adam_eps = j.at("adam_eps");
  c.class_weights = j.at("class_weights");
  c.vocab_min_count = j.at("vocab_min_count");
  c.vocab_max_size = j.at("vocab_max_size");
  return c;
}

json enc_config_to_json(const encoder::EncoderConfig& c) {
  return json{{"vocab_size", c.vocab_size},   {"d_model", c.d_model},
              {"n_layers", c.n_layers},       {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},               {"max_positions", c.max_positions},
              {"dropout_rate", c.dropout_rate}};
}

encoder::EncoderConfig enc_config_from_json(const json& j) {
  encoder::EncoderConfig c;
  c.vocab_size = j.at("vocab_size");
  c.d_model = j.at("d_model");
  c.n_layers = j.at("n_layers");
  c.n_heads = j.at("n_heads");
  c.d_ff = j.at("d_ff");
  c.max_positions = j.at("max_positions");
  c.dropout_rate = j.at("dropout_rate");
  return c;
}

}  // namespace

void adam_step(model::ModelParams& params, model::ModelParams& grads, AdamState& state,
               const TrainConfig& config, int t, bool freeze_encoder) {
  if (t < 1) throw ConfigError("adam step index must be >= 1");
  auto p_refs = model::tensor_refs(params);
  auto g_refs = model::tensor_refs(grads);
  auto m_refs = model::tensor_refs(state.m);
  auto v_refs = model::tensor_refs(state.v);
  if (p_refs.size() != g_refs.size() || p_refs.size() != m_refs.size() ||
      p_refs.size() != v_refs.size()) {
    throw ShapeMismatch("params/grads/state tensor sets differ");
  }
  const double bc1 = 1.0 - std::pow(config.adam_beta1, t);
  const double bc2 = 1.0 - std::pow(config.adam_beta2, t);
  for (std::size_t i = 0; i < p_refs.size(); ++i) {
    if (freeze_encoder && p_refs[i].is_encoder) continue;
    auto& p = *p_refs[i].tensor;
    const auto& g = *g_refs[i].tensor;
    auto& m = *m_refs[i].tensor;
    auto& v = *v_refs[i].tensor;
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw ShapeMismatch("gradient shape mismatch for " + p_refs[i].name);
    }
    m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
    v = config.adam_beta2 * v.array().matrix() +
        (1.0 - config.adam_beta2) * g.array().square().matrix();
    const auto m_hat = m.array() / bc1;
    const auto v_hat = v.array() / bc2;
    p.array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_eps);
    p *= 1.0 - config.learning_rate * config.weight_decay;
  }
}

model::Document make_document(const std::string& text, const preprocess::Vocabulary& vocab,
                              const TrainConfig& config) {
  const auto tokens = preprocess::preprocess_text(text, config.casing);
  const auto scheme = preprocess::SpecialTokenScheme::from_name(config.scheme);
  model::Document doc;
  if (config.long_doc_mode) {
    doc.chunks =
        preprocess::chunk_encode(tokens, vocab, scheme, config.max_len, config.max_chunks);
  } else {
    doc.chunks.push_back(preprocess::encode(tokens, vocab, scheme, config.max_len));
  }
  return doc;
}

Checkpoint train_one(const dataio::Corpus& train, const dataio::Corpus& val,
                     encoder::EncoderConfig enc_config, const TrainConfig& config,
                     std::uint64_t seed, const preprocess::Vocabulary* shared_vocab) {
  if (!train.fully_labeled) throw NotLabeled("training corpus must be fully labeled");

  const preprocess::Vocabulary vocab =
      shared_vocab != nullptr
          ? *shared_vocab
          : preprocess::build_vocab(train, config.casing, config.vocab_min_count,
                                    config.vocab_max_size);
  enc_config.vocab_size = vocab.size();
  enc_config.max_positions = std::max(enc_config.max_positions, config.max_len);

  std::vector<model::Document> train_docs, val_docs;
  std::vector<int> train_labels, val_labels;
  for (const auto& p : train.posts) {
    train_docs.push_back(make_document(p.text, vocab, config));
    train_labels.push_back(*p.label);
  }
  for (const auto& p : val.posts) {
    val_docs.push_back(make_document(p.text, vocab, config));
    val_labels.push_back(p.label.value_or(0));
  }

  // Validation falls back to the training set when the split cannot score.
  const bool val_usable = !val_docs.empty() && has_both_classes(val_labels);
  if (!val_usable) {
    std::fprintf(stderr,
                 "warning: validation split unusable for ROC-AUC, selecting on train\n");
  }
  const auto& sel_docs = val_usable ? val_docs : train_docs;
  const auto& sel_labels = val_usable ? val_labels : train_labels;

  auto params = model::init_model(enc_config, config.long_doc_mode, config.lstm_hidden, seed);
  AdamState state{model::zeros_like(enc_config, params), model::zeros_like(enc_config, params)};
  rng::Stream shuffle_rng(seed ^ 0xd1b54a32d192ed03ull);
  rng::Stream dropout_rng(seed ^ 0x8cb92ba72f3d8dd7ull);
  const std::vector<double> weights =
      config.class_weights ? class_weight_table(train_labels) : std::vector<double>{};

  Checkpoint best;
  best.enc_config = enc_config;
  best.train_config = config;
  best.seed = seed;
  best.vocab = vocab;
  best.fingerprint = {vocab.content_hash(), config.casing, config.scheme, config.max_len};
  best.name = "seed" + std::to_string(seed);
  best.val_auc = -1.0;

  std::vector<std::size_t> order(train_docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const bool freeze = config.freeze_first_epoch && epoch == 1;
    shuffle(order, shuffle_rng);
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t hi =
          std::min(order.size(), lo + static_cast<std::size_t>(config.batch_size));
      std::vector<model::Document> batch;
      std::vector<int> labels;
      for (std::size_t i = lo; i < hi; ++i) {
        batch.push_back(train_docs[order[i]]);
        labels.push_back(train_labels[order[i]]);
      }
      auto grads = model::zeros_like(enc_config, params);
      model::loss_and_gradients(enc_config, params, batch, labels, freeze, grads,
                                enc_config.dropout_rate > 0.0 ? &dropout_rng : nullptr,
                                weights);
      adam_step(params, grads, state, config, ++step, freeze);
    }
    const double auc = validation_auc(enc_config, params, sel_docs, sel_labels);
    std::fprintf(stderr, "seed %llu epoch %d val_auc %.4f\n",
                 static_cast<unsigned long long>(seed), epoch, auc);
    if (auc > best.val_auc) {  // tie keeps the earlier epoch
      best.val_auc = auc;
      best.best_epoch = epoch;
      best.params = params;
    }
  }
  return best;
}

MultiSeedResult train_multi_seed(const dataio::Corpus& train, const dataio::Corpus& val,
                                 const encoder::EncoderConfig& enc_config,
                                 const TrainConfig& config, int n_seeds, int jobs) {
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  const auto vocab = preprocess::build_vocab(train, config.casing, config.vocab_min_count,
                                             config.vocab_max_size);
  MultiSeedResult result;
  result.checkpoints.resize(static_cast<std::size_t>(n_seeds));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_seeds));
  auto run_seed = [&](int s) {
    try {
      result.checkpoints[static_cast<std::size_t>(s)] =
          train_one(train, val, enc_config, config, static_cast<std::uint64_t>(s), &vocab);
    } catch (...) {
      errors[static_cast<std::size_t>(s)] = std::current_exception();
    }
  };

  if (jobs <= 1) {
    for (int s = 0; s < n_seeds; ++s) run_seed(s);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w] {
        for (int s = w; s < n_seeds; s += jobs) run_seed(s);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (int s = 0; s < n_seeds; ++s) {
    result.leaderboard.emplace_back(static_cast<std::uint64_t>(s),
                                    result.checkpoints[static_cast<std::size_t>(s)].val_auc);
  }
  std::sort(result.leaderboard.begin(), result.leaderboard.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  result.best = result.checkpoints[static_cast<std::size_t>(result.leaderboard[0].first)];
  return result;
}

PredictionSet predict(const Checkpoint& checkpoint, const dataio::Corpus& corpus) {
  if (checkpoint.vocab.content_hash() != checkpoint.fingerprint.vocab_hash) {
    throw FingerprintMismatch("checkpoint vocabulary does not match its fingerprint");
  }
  PredictionSet preds;
  for (const auto& post : corpus.posts) {
    const auto doc = make_document(post.text, checkpoint.vocab, checkpoint.train_config);
    preds[post.id] =
        model::predict_proba(checkpoint.enc_config, checkpoint.params, doc);
  }
  return preds;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& dir) {
  fs::create_directories(dir);
  auto params = checkpoint.params;  // tensor_refs needs mutable access
  std::vector<archive::NamedArray> arrays;
  for (const auto& ref : model::tensor_refs(params)) {
    arrays.push_back({ref.name, *ref.tensor});
  }
  json meta{{"encoder", enc_config_to_json(checkpoint.enc_config)},
            {"train", config_to_json(checkpoint.train_config)},
            {"seed", checkpoint.seed},
            {"val_auc", checkpoint.val_auc},
            {"best_epoch", checkpoint.best_epoch},
            {"name", checkpoint.name},
            {"fingerprint",
             {{"vocab_hash", checkpoint.fingerprint.vocab_hash},
              {"casing", preprocess::casing_name(checkpoint.fingerprint.casing)},
              {"scheme", checkpoint.fingerprint.scheme},
              {"max_len", checkpoint.fingerprint.max_len}}}};
  archive::save((fs::path(dir) / "params.bin").string(), arrays, meta);
  checkpoint.vocab.save((fs::path(dir) / "vocab.txt").string());
  std::ofstream meta_out(fs::path(dir) / "meta.json");
  meta_out << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& dir) {
  const auto archive = archive::load((fs::path(dir) / "params.bin").string());
  const auto& meta = archive.meta;

  Checkpoint ckpt;
  ckpt.enc_config = enc_config_from_json(meta.at("encoder"));
  ckpt.train_config = config_from_json(meta.at("train"));
  ckpt.seed = meta.at("seed");
  ckpt.val_auc = meta.at("val_auc");
  ckpt.best_epoch = meta.at("best_epoch");
  ckpt.name = meta.value("name", "");
  const auto& fp = meta.at("fingerprint");
  ckpt.fingerprint = {fp.at("vocab_hash"), preprocess::casing_from_name(fp.at("casing")),
                      fp.at("scheme"), fp.at("max_len")};
  ckpt.vocab = preprocess::Vocabulary::load((fs::path(dir) / "vocab.txt").string());

  ckpt.params = model::init_model(ckpt.enc_config, ckpt.train_config.long_doc_mode,
                                  ckpt.train_config.lstm_hidden, 0);
  for (const auto& ref : model::tensor_refs(ckpt.params)) {
    *ref.tensor = archive.at(ref.name);
  }
  return ckpt;
}

void save_predictions(const PredictionSet& preds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write predictions to " + path);
  out << "id,p_unreliable\n";
  char buf[32];
  for (const auto& [id, p] : preds) {
    std::snprintf(buf, sizeof(buf), "%.9f", p);
    out << id << ',' << buf << '\n';
  }
}

PredictionSet load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read predictions from " + path);
  PredictionSet preds;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw IoError("bad prediction line: " + line);
    const std::string id = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (first && id == "id") {
      first = false;
      continue;
    }
    first = false;
    try {
      preds[id] = std::stod(value);
    } catch (const std::exception&) {
      throw IoError("bad probability '" + value + "' for id '" + id + "'");
    }
  }
  return preds;
}

}  // namespace rii::training
