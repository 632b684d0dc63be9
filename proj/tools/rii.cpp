#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "rii/errors.hpp"
#include "rii/metrics.hpp"
#include "rii/scoring.hpp"
#include "rii/synth.hpp"
#include "rii/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Output directories created by this invocation; removed again on failure so
// no partial artifacts survive.
std::vector<fs::path> g_created_dirs;

void make_output_dir(const fs::path& dir) {
  if (!fs::exists(dir)) {
    fs::create_directories(dir);
    g_created_dirs.push_back(dir);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rii::IoError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::map<std::string, std::string> user_map(const rii::dataio::Corpus& corpus) {
  std::map<std::string, std::string> m;
  for (const auto& p : corpus.posts) m[p.id] = p.user_id;
  return m;
}

struct TrainCliOptions {
  std::string data;
  std::string out;
  double val_fraction = 0.1;
  std::uint64_t split_seed = 0;
  int seeds = 10;
  int jobs = 1;
  int k = 3;
  rii::encoder::EncoderConfig enc;
  rii::training::TrainConfig train;
  std::string casing = "uncased_flat";
};

void add_train_options(CLI::App* cmd, TrainCliOptions& o) {
  cmd->add_option("--data", o.data, "training corpus (delimited text)")->required();
  cmd->add_option("--out", o.out, "output directory")->required();
  cmd->add_option("--val-fraction", o.val_fraction, "validation fraction");
  cmd->add_option("--split-seed", o.split_seed, "stratified split seed");
  cmd->add_option("--seeds", o.seeds, "number of random restarts");
  cmd->add_option("--jobs", o.jobs, "parallel seed workers");
  cmd->add_option("--d-model", o.enc.d_model, "model width");
  cmd->add_option("--layers", o.enc.n_layers, "encoder layers");
  cmd->add_option("--heads", o.enc.n_heads, "attention heads");
  cmd->add_option("--d-ff", o.enc.d_ff, "feed-forward width");
  cmd->add_option("--dropout", o.enc.dropout_rate, "dropout rate");
  cmd->add_option("--lr", o.train.learning_rate, "learning rate");
  cmd->add_option("--weight-decay", o.train.weight_decay, "decoupled weight decay");
  cmd->add_option("--epochs", o.train.epochs, "training epochs");
  cmd->add_option("--batch-size", o.train.batch_size, "batch size");
  cmd->add_option("--max-len", o.train.max_len, "sequence length")
      ->check(CLI::IsMember({256, 512}));
  cmd->add_flag("--long-doc", o.train.long_doc_mode, "chunk + Bi-LSTM long-document path");
  cmd->add_option("--max-chunks", o.train.max_chunks, "chunk cap for long documents");
  cmd->add_option("--lstm-hidden", o.train.lstm_hidden, "Bi-LSTM hidden size (0 = d_model)");
  cmd->add_option("--casing", o.casing, "cased_raw | uncased_flat")
      ->check(CLI::IsMember({"cased_raw", "uncased_flat"}));
  cmd->add_option("--scheme", o.train.scheme, "special-token scheme")
      ->check(CLI::IsMember({"bert_style", "roberta_style"}));
  cmd->add_flag("!--no-freeze", o.train.freeze_first_epoch,
                "disable first-epoch encoder freezing");
  cmd->add_flag("--class-weights", o.train.class_weights, "inverse-frequency class weights");
  cmd->add_option("--vocab-min-count", o.train.vocab_min_count, "vocabulary count floor");
  cmd->add_option("--vocab-max-size", o.train.vocab_max_size, "vocabulary size cap");
  cmd->set_config("--config", "", "key=value config file; flags override");
  cmd->allow_config_extras(false);
}

int cmd_stats(const std::string& data, std::size_t long_threshold, const std::string& out) {
  const auto corpus = rii::dataio::load_corpus(data);
  const auto stats = rii::dataio::corpus_stats(corpus, long_threshold);
  const auto text = rii::dataio::stats_to_json(stats);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    write_text(out, text);
  }
  return 0;
}

int cmd_train(CLI::App* cmd, const TrainCliOptions& o) {
  auto options = o;
  options.train.casing = rii::preprocess::casing_from_name(o.casing);
  options.train.n_seeds = o.seeds;
  options.enc.max_positions = std::max(options.enc.max_positions, options.train.max_len);

  const auto corpus = rii::dataio::load_corpus(o.data);
  auto [train, val] = rii::dataio::stratified_split(corpus, o.val_fraction, o.split_seed);

  make_output_dir(o.out);
  write_text(fs::path(o.out) / "config.ini", cmd->config_to_str(true, true));

  const auto result = rii::training::train_multi_seed(train, val, options.enc, options.train,
                                                      o.seeds, o.jobs);
  json board = json::array();
  for (const auto& [seed, auc] : result.leaderboard) {
    board.push_back({{"seed", seed}, {"val_auc", auc}});
  }
  for (const auto& ckpt : result.checkpoints) {
    rii::training::save_checkpoint(ckpt, (fs::path(o.out) / ckpt.name).string());
  }
  write_text(fs::path(o.out) / "leaderboard.json",
             json{{"leaderboard", board}, {"best", result.best.name}}.dump(2));
  std::fprintf(stderr, "best %s val_auc %.4f\n", result.best.name.c_str(),
               result.best.val_auc);
  return 0;
}

int cmd_predict(const std::string& ckpt_dir, const std::string& data,
                const std::string& out) {
  const auto ckpt = rii::training::load_checkpoint(ckpt_dir);
  const auto corpus = rii::dataio::load_corpus(data);
  rii::training::save_predictions(rii::training::predict(ckpt, corpus), out);
  return 0;
}

int cmd_ensemble(const std::vector<std::string>& pred_files, const std::string& run_dir,
                 int k, const std::string& data, const std::string& out) {
  std::vector<rii::training::PredictionSet> sets;
  if (!run_dir.empty()) {
    if (data.empty()) throw rii::ConfigError("--run requires --data");
    std::vector<rii::training::Checkpoint> checkpoints;
    std::set<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "params.bin")) {
        dirs.insert(entry.path().string());
      }
    }
    for (const auto& d : dirs) checkpoints.push_back(rii::training::load_checkpoint(d));
    const auto corpus = rii::dataio::load_corpus(data);
    for (const auto* ckpt : rii::scoring::select_top_k(checkpoints, k)) {
      sets.push_back(rii::training::predict(*ckpt, corpus));
    }
  }
  for (const auto& f : pred_files) sets.push_back(rii::training::load_predictions(f));
  rii::training::save_predictions(rii::scoring::ensemble_average(sets), out);
  return 0;
}

int cmd_adjust(const std::string& pred_file, const std::string& train_file,
               const std::string& data_file, double alpha, double lambda,
               const std::string& out, const std::string& prior_out) {
  const auto preds = rii::training::load_predictions(pred_file);
  const auto train = rii::dataio::load_corpus(train_file);
  const auto target = rii::dataio::load_corpus(data_file);
  const auto prior = rii::scoring::fit_user_prior(train, alpha, lambda);
  rii::training::save_predictions(
      rii::scoring::apply_user_prior(preds, prior, user_map(target)), out);
  if (!prior_out.empty()) write_text(prior_out, rii::scoring::prior_to_json(prior));
  return 0;
}

int cmd_evaluate(const std::string& pred_file, const std::string& gold_file) {
  const auto preds = rii::training::load_predictions(pred_file);
  const auto gold = rii::dataio::load_corpus(gold_file);
  rii::metrics::ScoredLabels data;
  for (const auto& p : gold.posts) {
    const auto it = preds.find(p.id);
    if (it == preds.end() || !p.label) continue;
    data.scores.push_back(it->second);
    data.labels.push_back(*p.label);
  }
  std::size_t n_pos = 0;
  for (const int l : data.labels) n_pos += static_cast<std::size_t>(l);
  json j{{"auc", rii::metrics::roc_auc(data)},
         {"n", data.labels.size()},
         {"n_positive", n_pos}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reliable-post classification pipeline"};
  app.require_subcommand(1);

  // stats
  auto* stats = app.add_subcommand("stats", "corpus statistics as JSON");
  std::string stats_data, stats_out;
  std::size_t long_threshold = 500;
  stats->add_option("--data", stats_data, "corpus file")->required();
  stats->add_option("--long-threshold", long_threshold, "long-text token threshold");
  stats->add_option("--out", stats_out, "write JSON here instead of stdout");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a seeded synthetic corpus");
  rii::synth::SynthConfig synth;
  std::string gen_out;
  gen->add_option("--out", gen_out, "output corpus file")->required();
  gen->add_option("--n", synth.n, "number of posts");
  gen->add_option("--seed", synth.seed, "generator seed");
  gen->add_option("--unreliable-frac", synth.unreliable_fraction, "unreliable class share");
  gen->add_option("--long-frac", synth.long_fraction, "long-text share");
  gen->add_option("--user-determined-frac", synth.user_determined_fraction,
                  "share of users with user-determined labels and uninformative text");
  gen->add_option("--users", synth.n_users, "distinct users");
  gen->add_option("--long-len", synth.long_len, "token count of long posts");

  // train
  auto* train = app.add_subcommand("train", "multi-seed fine-tuning run");
  TrainCliOptions train_opts;
  add_train_options(train, train_opts);

  // predict
  auto* predict = app.add_subcommand("predict", "write a submission file");
  std::string p_ckpt, p_data, p_out;
  predict->add_option("--ckpt", p_ckpt, "checkpoint directory")->required();
  predict->add_option("--data", p_data, "corpus file")->required();
  predict->add_option("--out", p_out, "prediction file")->required();

  // ensemble
  auto* ensemble = app.add_subcommand("ensemble", "probability-averaged submission");
  std::vector<std::string> e_preds;
  std::string e_run, e_data, e_out;
  int e_k = 3;
  ensemble->add_option("--pred", e_preds, "prediction files to average");
  ensemble->add_option("--run", e_run, "training run directory (top-k checkpoints)");
  ensemble->add_option("--k", e_k, "ensemble size when using --run");
  ensemble->add_option("--data", e_data, "corpus to predict when using --run");
  ensemble->add_option("--out", e_out, "output prediction file")->required();

  // adjust
  auto* adjust = app.add_subcommand("adjust", "apply the username prior");
  std::string a_pred, a_train, a_data, a_out, a_prior_out;
  double a_alpha = 1.0, a_lambda = 0.25;
  adjust->add_option("--pred", a_pred, "prediction file")->required();
  adjust->add_option("--train", a_train, "labeled corpus the prior is fitted on")->required();
  adjust->add_option("--data", a_data, "corpus the predictions refer to")->required();
  adjust->add_option("--alpha", a_alpha, "Laplace smoothing");
  adjust->add_option("--lambda", a_lambda, "adjustment strength");
  adjust->add_option("--out", a_out, "adjusted prediction file")->required();
  adjust->add_option("--prior-out", a_prior_out, "also dump the fitted prior as JSON");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "ROC-AUC of predictions vs gold labels");
  std::string v_pred, v_gold;
  evaluate->add_option("--pred", v_pred, "prediction file")->required();
  evaluate->add_option("--gold", v_gold, "labeled corpus file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats->parsed()) return cmd_stats(stats_data, long_threshold, stats_out);
    if (gen->parsed()) {
      rii::dataio::save_corpus(rii::synth::generate(synth), gen_out);
      return 0;
    }
    if (train->parsed()) return cmd_train(train, train_opts);
    if (predict->parsed()) return cmd_predict(p_ckpt, p_data, p_out);
    if (ensemble->parsed()) return cmd_ensemble(e_preds, e_run, e_k, e_data, e_out);
    if (adjust->parsed())
      return cmd_adjust(a_pred, a_train, a_data, a_alpha, a_lambda, a_out, a_prior_out);
    if (evaluate->parsed()) return cmd_evaluate(v_pred, v_gold);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::error_code ec;
    for (const auto& dir : g_created_dirs) fs::remove_all(dir, ec);
    return 1;
  }
  return 0;
}
