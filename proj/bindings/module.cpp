#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rii/dataio.hpp"
#include "rii/metrics.hpp"
#include "rii/preprocess.hpp"
#include "rii/scoring.hpp"
#include "rii/synth.hpp"
#include "rii/training.hpp"

namespace py = pybind11;
using namespace rii;

PYBIND11_MODULE(riinet, m) {
  m.doc() = "reliable-post classification pipeline: preprocessing, training, "
            "ensembling, username prior, ROC-AUC";

  // ---- preprocessing ----
  py::enum_<preprocess::CasingMode>(m, "CasingMode")
      .value("cased_raw", preprocess::CasingMode::cased_raw)
      .value("uncased_flat", preprocess::CasingMode::uncased_flat);

  py::class_<preprocess::Vocabulary>(m, "Vocabulary")
      .def("id_of", &preprocess::Vocabulary::id_of)
      .def("__len__", &preprocess::Vocabulary::size)
      .def("content_hash", &preprocess::Vocabulary::content_hash)
      .def("save", &preprocess::Vocabulary::save)
      .def_static("load", &preprocess::Vocabulary::load);

  py::class_<preprocess::EncodedInput>(m, "EncodedInput")
      .def_readonly("ids", &preprocess::EncodedInput::ids)
      .def_readonly("mask", &preprocess::EncodedInput::mask)
      .def_readonly("true_length", &preprocess::EncodedInput::true_length);

  m.def("normalize", &preprocess::normalize, py::arg("text"), py::arg("mode"));
  m.def("translate_emoji",
        [](const std::string& text) {
          return preprocess::translate_emoji(text, preprocess::builtin_emoji_table());
        },
        py::arg("text"));
  m.def("tokenize", &preprocess::tokenize, py::arg("text"));
  m.def("preprocess_text", &preprocess::preprocess_text, py::arg("text"), py::arg("mode"));
  m.def("build_vocab", &preprocess::build_vocab, py::arg("corpus"), py::arg("mode"),
        py::arg("min_count") = 1, py::arg("max_size") = 30000);
  m.def("encode",
        [](const std::vector<std::string>& tokens, const preprocess::Vocabulary& vocab,
           const std::string& scheme, int max_len) {
          return preprocess::encode(tokens, vocab,
                                    preprocess::SpecialTokenScheme::from_name(scheme), max_len);
        },
        py::arg("tokens"), py::arg("vocab"), py::arg("scheme") = "bert_style",
        py::arg("max_len") = 256);
  m.def("chunk_encode",
        [](const std::vector<std::string>& tokens, const preprocess::Vocabulary& vocab,
           const std::string& scheme, int chunk_len, int max_chunks) {
          return preprocess::chunk_encode(tokens, vocab,
                                          preprocess::SpecialTokenScheme::from_name(scheme),
                                          chunk_len, max_chunks);
        },
        py::arg("tokens"), py::arg("vocab"), py::arg("scheme") = "bert_style",
        py::arg("chunk_len") = 512, py::arg("max_chunks") = 8);

  // ---- data ----
  py::class_<dataio::Post>(m, "Post")
      .def(py::init<>())
      .def_readwrite("id", &dataio::Post::id)
      .def_readwrite("user_id", &dataio::Post::user_id)
      .def_readwrite("text", &dataio::Post::text)
      .def_readwrite("num_likes", &dataio::Post::num_likes)
      .def_readwrite("num_comments", &dataio::Post::num_comments)
      .def_readwrite("num_shares", &dataio::Post::num_shares)
      .def_readwrite("label", &dataio::Post::label);

  py::class_<dataio::Corpus>(m, "Corpus")
      .def(py::init<>())
      .def_readwrite("posts", &dataio::Corpus::posts)
      .def_readwrite("fully_labeled", &dataio::Corpus::fully_labeled)
      .def("__len__", &dataio::Corpus::size);

  m.def("load_corpus",
        [](const std::string& path) { return dataio::load_corpus(path); }, py::arg("path"));
  m.def("save_corpus",
        [](const dataio::Corpus& c, const std::string& path) {
          dataio::save_corpus(c, path);
        },
        py::arg("corpus"), py::arg("path"));
  m.def("stratified_split", &dataio::stratified_split, py::arg("corpus"),
        py::arg("val_fraction"), py::arg("seed"));
  m.def("corpus_stats",
        [](const dataio::Corpus& c, std::size_t threshold) {
          const auto s = dataio::corpus_stats(c, threshold);
          return py::dict(py::arg("n") = s.n, py::arg("n_unreliable") = s.n_unreliable,
                          py::arg("unreliable_fraction") = s.unreliable_fraction,
                          py::arg("long_fraction") = s.long_fraction);
        },
        py::arg("corpus"), py::arg("long_threshold") = 500);

  py::class_<synth::SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n", &synth::SynthConfig::n)
      .def_readwrite("seed", &synth::SynthConfig::seed)
      .def_readwrite("unreliable_fraction", &synth::SynthConfig::unreliable_fraction)
      .def_readwrite("long_fraction", &synth::SynthConfig::long_fraction)
      .def_readwrite("user_determined_fraction",
                     &synth::SynthConfig::user_determined_fraction)
      .def_readwrite("n_users", &synth::SynthConfig::n_users);
  m.def("generate_synthetic", &synth::generate, py::arg("config"));

  // ---- training ----
  py::class_<encoder::EncoderConfig>(m, "EncoderConfig")
      .def(py::init<>())
      .def_readwrite("vocab_size", &encoder::EncoderConfig::vocab_size)
      .def_readwrite("d_model", &encoder::EncoderConfig::d_model)
      .def_readwrite("n_layers", &encoder::EncoderConfig::n_layers)
      .def_readwrite("n_heads", &encoder::EncoderConfig::n_heads)
      .def_readwrite("d_ff", &encoder::EncoderConfig::d_ff)
      .def_readwrite("max_positions", &encoder::EncoderConfig::max_positions)
      .def_readwrite("dropout_rate", &encoder::EncoderConfig::dropout_rate);

  py::class_<training::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &training::TrainConfig::learning_rate)
      .def_readwrite("weight_decay", &training::TrainConfig::weight_decay)
      .def_readwrite("epochs", &training::TrainConfig::epochs)
      .def_readwrite("n_seeds", &training::TrainConfig::n_seeds)
      .def_readwrite("freeze_first_epoch", &training::TrainConfig::freeze_first_epoch)
      .def_readwrite("batch_size", &training::TrainConfig::batch_size)
      .def_readwrite("max_len", &training::TrainConfig::max_len)
      .def_readwrite("long_doc_mode", &training::TrainConfig::long_doc_mode)
      .def_readwrite("max_chunks", &training::TrainConfig::max_chunks)
      .def_readwrite("lstm_hidden", &training::TrainConfig::lstm_hidden)
      .def_readwrite("casing", &training::TrainConfig::casing)
      .def_readwrite("scheme", &training::TrainConfig::scheme)
      .def_readwrite("class_weights", &training::TrainConfig::class_weights);

  py::class_<training::Checkpoint>(m, "Checkpoint")
      .def_readonly("seed", &training::Checkpoint::seed)
      .def_readonly("val_auc", &training::Checkpoint::val_auc)
      .def_readonly("best_epoch", &training::Checkpoint::best_epoch)
      .def_readonly("name", &training::Checkpoint::name)
      .def("save", [](const training::Checkpoint& c, const std::string& dir) {
        training::save_checkpoint(c, dir);
      });
  m.def("load_checkpoint", &training::load_checkpoint, py::arg("dir"));

  m.def("train_one",
        [](const dataio::Corpus& train, const dataio::Corpus& val,
           const encoder::EncoderConfig& enc, const training::TrainConfig& cfg,
           std::uint64_t seed) { return training::train_one(train, val, enc, cfg, seed); },
        py::arg("train"), py::arg("val"), py::arg("encoder_config"),
        py::arg("train_config"), py::arg("seed"));
  m.def("train_multi_seed",
        [](const dataio::Corpus& train, const dataio::Corpus& val,
           const encoder::EncoderConfig& enc, const training::TrainConfig& cfg, int n_seeds,
           int jobs) {
          auto r = training::train_multi_seed(train, val, enc, cfg, n_seeds, jobs);
          return py::make_tuple(r.best, r.leaderboard);
        },
        py::arg("train"), py::arg("val"), py::arg("encoder_config"),
        py::arg("train_config"), py::arg("n_seeds"), py::arg("jobs") = 1);
  m.def("predict", &training::predict, py::arg("checkpoint"), py::arg("corpus"));

  // ---- scoring & metrics ----
  m.def("ensemble_average", &scoring::ensemble_average, py::arg("prediction_sets"));
  py::class_<scoring::UserPrior>(m, "UserPrior")
      .def_readonly("global_rate", &scoring::UserPrior::global_rate)
      .def_readonly("user_rate", &scoring::UserPrior::user_rate)
      .def_readonly("alpha", &scoring::UserPrior::alpha)
      .def_readonly("lambda_", &scoring::UserPrior::lambda);
  m.def("fit_user_prior", &scoring::fit_user_prior, py::arg("train"), py::arg("alpha") = 1.0,
        py::arg("lambda_") = 0.25);
  m.def("apply_user_prior", &scoring::apply_user_prior, py::arg("preds"), py::arg("prior"),
        py::arg("user_of"));
  m.def("roc_auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
          return metrics::roc_auc({scores, labels});
        },
        py::arg("scores"), py::arg("labels"));
}
