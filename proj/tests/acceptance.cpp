// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Self-contained — everything runs against synthetic data or
// the bundled corpus under the data directory (first argument, default
// "data").

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_check.hpp"
#include "rii/dataio.hpp"
#include "rii/metrics.hpp"
#include "rii/model.hpp"
#include "rii/preprocess.hpp"
#include "rii/rng.hpp"
#include "rii/scoring.hpp"
#include "rii/synth.hpp"
#include "rii/training.hpp"

using namespace rii;

namespace {

std::string g_data_dir = "data";

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// --- 1: full-model gradients vs central finite differences ------------------

void criterion_gradients(Check& c) {
  encoder::EncoderConfig cfg;
  cfg.vocab_size = 24;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.max_positions = 16;
  cfg.dropout_rate = 0.0;

  auto params = model::init_model(cfg, /*long_doc_mode=*/true, /*lstm_hidden=*/8, 13);

  // Two documents, one of them multi-chunk with padding, sequence length 16.
  rng::Stream rng(99);
  auto random_chunk = [&](int true_len) {
    preprocess::EncodedInput chunk;
    chunk.ids.assign(16, preprocess::Vocabulary::kPadId);
    chunk.mask.assign(16, 0);
    chunk.ids[0] = preprocess::Vocabulary::kClsId;
    for (int i = 1; i + 1 < true_len; ++i) {
      chunk.ids[static_cast<std::size_t>(i)] =
          4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.vocab_size - 4)));
    }
    chunk.ids[static_cast<std::size_t>(true_len - 1)] = preprocess::Vocabulary::kSepId;
    for (int i = 0; i < true_len; ++i) chunk.mask[static_cast<std::size_t>(i)] = 1;
    chunk.true_length = true_len;
    return chunk;
  };
  std::vector<model::Document> batch;
  batch.push_back({{random_chunk(16), random_chunk(9)}});
  batch.push_back({{random_chunk(12)}});
  const std::vector<int> labels{1, 0};

  const double t0 = now_seconds();
  const auto result = rii::testing::check_gradients(cfg, params, batch, labels, 1e-5);
  const double elapsed = now_seconds() - t0;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "max rel err %.3e over %zu params (worst %s), %.1f s", result.max_rel_err,
                result.n_checked, result.worst_tensor.c_str(), elapsed);
  c.detail = buf;
  c.require(result.max_rel_err < 1e-4, "max relative error >= 1e-4");
  c.require(elapsed < 60.0, "runtime >= 60 s");
}

// --- 2: rank-based ROC-AUC vs the O(n^2) pair-counting oracle ---------------

void criterion_auc(Check& c) {
  metrics::ScoredLabels worked;
  worked.scores = {0.1, 0.4, 0.35, 0.8};
  worked.labels = {0, 0, 1, 1};
  c.require(metrics::roc_auc(worked) == 0.75, "worked case != 0.75 exactly");

  rng::Stream rng(2020);
  double max_diff = 0.0;
  int cases = 0;
  for (int trial = 0; trial < 1200; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    metrics::ScoredLabels sl;
    bool has0 = false, has1 = false;
    const bool coarse = trial % 2 == 0;  // heavy ties half the time
    for (std::size_t i = 0; i < n; ++i) {
      const double s = coarse ? 0.2 * static_cast<double>(rng.below(5)) : rng.unit();
      const int label = rng.below(2) == 0 ? 0 : 1;
      sl.scores.push_back(s);
      sl.labels.push_back(label);
      (label == 0 ? has0 : has1) = true;
    }
    if (!has0 || !has1) continue;
    max_diff = std::max(max_diff,
                        std::abs(metrics::roc_auc(sl) - metrics::roc_auc_pairwise(sl)));
    ++cases;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d randomized cases, max |rank - pairwise| = %.2e",
                cases, max_diff);
  c.detail = buf;
  c.require(cases >= 1000, "fewer than 1000 valid cases");
  c.require(max_diff < 1e-12, "implementations disagree beyond 1e-12");
}

// --- 3: epoch-1 freezing leaves the encoder bitwise intact ------------------

void criterion_freeze(Check& c) {
  encoder::EncoderConfig cfg;
  cfg.vocab_size = 40;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.max_positions = 32;
  cfg.dropout_rate = 0.0;

  const auto corpus = [] {
    synth::SynthConfig sc;
    sc.n = 16;
    sc.seed = 4;
    sc.n_users = 4;
    sc.avg_len = 10;
    sc.long_fraction = 0.0;
    return synth::generate(sc);
  }();
  training::TrainConfig tc;
  tc.max_len = 32;
  tc.long_doc_mode = true;
  const auto vocab = preprocess::build_vocab(corpus, tc.casing, 1, 200);
  cfg.vocab_size = vocab.size();

  auto params = model::init_model(cfg, true, 8, 21);
  auto initial = params;

  std::vector<model::Document> batch;
  std::vector<int> labels;
  for (const auto& post : corpus.posts) {
    batch.push_back(training::make_document(post.text, vocab, tc));
    labels.push_back(*post.label);
  }

  training::AdamState state{model::zeros_like(cfg, params), model::zeros_like(cfg, params)};
  auto grads = model::zeros_like(cfg, params);
  for (int step = 1; step <= 4; ++step) {  // one frozen epoch, 4 optimizer steps
    model::loss_and_gradients(cfg, params, batch, labels, /*freeze_encoder=*/true, grads);
    training::adam_step(params, grads, state, tc, step, /*freeze_encoder=*/true);
  }

  auto before = model::tensor_refs(initial);
  auto after = model::tensor_refs(params);
  bool classifier_moved = false;
  for (std::size_t i = 0; i < after.size(); ++i) {
    const double diff = ((*after[i].tensor) - (*before[i].tensor)).cwiseAbs().maxCoeff();
    if (after[i].is_encoder) {
      c.require(diff == 0.0, "encoder tensor " + after[i].name + " changed while frozen");
    } else if (diff > 0.0) {
      classifier_moved = true;
    }
  }
  c.require(classifier_moved, "no non-encoder tensor changed");
}

// --- 4: overfit the bundled 64-example separable corpus ---------------------

void criterion_overfit(Check& c) {
  const double t0 = now_seconds();
  const auto corpus = dataio::load_corpus(g_data_dir + "/separable64.csv");
  c.require(corpus.size() == 64, "bundled corpus is not 64 examples");
  const auto [train, heldout] = dataio::stratified_split(corpus, 0.25, 1);

  encoder::EncoderConfig cfg;
  cfg.vocab_size = 0;  // set from vocab by train_one
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.max_positions = 32;
  cfg.dropout_rate = 0.0;

  training::TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 8;
  tc.max_len = 32;
  tc.learning_rate = 3e-3;
  tc.freeze_first_epoch = false;
  tc.vocab_max_size = 256;

  // Validate on the training set itself: the contract is that training AUC
  // reaches 1.0, so the kept epoch must be the best-fitting one.
  const auto ckpt = training::train_one(train, train, cfg, tc, 0);

  auto auc_on = [&](const dataio::Corpus& part) {
    const auto preds = training::predict(ckpt, part);
    metrics::ScoredLabels sl;
    for (const auto& post : part.posts) {
      sl.scores.push_back(preds.at(post.id));
      sl.labels.push_back(*post.label);
    }
    return metrics::roc_auc(sl);
  };
  const double train_auc = auc_on(train);
  const double heldout_auc = auc_on(heldout);
  const double elapsed = now_seconds() - t0;

  char buf[128];
  std::snprintf(buf, sizeof(buf), "train auc %.4f, held-out auc %.4f, %.1f s", train_auc,
                heldout_auc, elapsed);
  c.detail = buf;
  c.require(train_auc == 1.0, "training AUC below 1.0 after 50 epochs");
  c.require(heldout_auc >= 0.90, "held-out AUC below 0.90");
  c.require(elapsed < 300.0, "runtime >= 5 min");
}

// --- 5: long-document chunking arithmetic and losslessness ------------------

void criterion_chunks(Check& c) {
  std::vector<std::string> pool{"tin", "nóng", "giật", "gân", "xác", "thực", "báo", "chí"};
  preprocess::Vocabulary vocab(pool);
  const auto scheme = preprocess::SpecialTokenScheme::bert_style();
  rng::Stream rng(7);

  auto make_tokens = [&](std::size_t n) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(pool[rng.below(pool.size())]);
    return tokens;
  };

  c.require(preprocess::chunk_encode(make_tokens(1020), vocab, scheme, 512, 8).size() == 2,
            "1020 tokens at chunk_len 512 != 2 chunks");
  c.require(preprocess::chunk_encode(make_tokens(1200), vocab, scheme, 512, 8).size() == 3,
            "1200 tokens at chunk_len 512 != 3 chunks");

  // Stripping framing and padding from the chunks reproduces the input prefix.
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng.below(1400);
    const int max_chunks = 1 + static_cast<int>(rng.below(6));
    const auto tokens = make_tokens(n);
    const auto chunks = preprocess::chunk_encode(tokens, vocab, scheme, 512, max_chunks);
    std::vector<int> recovered;
    for (const auto& chunk : chunks) {
      for (int i = 1; i + 1 <= chunk.true_length - 1; ++i) {
        recovered.push_back(chunk.ids[static_cast<std::size_t>(i)]);
      }
    }
    c.require(recovered.size() <= tokens.size(), "chunks cover more than the input");
    for (std::size_t i = 0; i < recovered.size(); ++i) {
      if (recovered[i] != vocab.id_of(tokens[i])) {
        c.require(false, "reconstructed chunk content diverges from the input prefix");
        return;
      }
    }
    const std::size_t expected =
        std::min(tokens.size(), static_cast<std::size_t>(max_chunks) * 510);
    c.require(recovered.size() == expected, "chunk coverage differs from expected prefix");
  }
}

// --- 6: ensemble averaging and top-k selection ------------------------------

void criterion_ensemble(Check& c) {
  rng::Stream rng(55);
  training::PredictionSet base;
  for (int i = 0; i < 40; ++i) base["p" + std::to_string(i)] = rng.unit();

  const auto same = scoring::ensemble_average({base, base, base, base, base});
  double max_dev = 0.0;
  for (const auto& [id, p] : base) max_dev = std::max(max_dev, std::abs(same.at(id) - p));
  c.require(max_dev < 1e-15, "averaging identical sets is not an identity");

  std::vector<training::PredictionSet> sets(4);
  for (auto& set : sets) {
    for (const auto& [id, p] : base) set[id] = rng.unit();
  }
  const auto fwd = scoring::ensemble_average(sets);
  std::reverse(sets.begin(), sets.end());
  const auto rev = scoring::ensemble_average(sets);
  c.require(fwd == rev, "ensemble is not permutation invariant");

  std::vector<training::Checkpoint> ckpts(5);
  const double aucs[5] = {0.9144, 0.9258, 0.8937, 0.9179, 0.9179};
  for (std::size_t i = 0; i < 5; ++i) {
    ckpts[i].seed = i;
    ckpts[i].val_auc = aucs[i];
    ckpts[i].name = "seed" + std::to_string(i);
  }
  const auto top = scoring::select_top_k(ckpts, 3);
  c.require(top.size() == 3, "top-k size wrong");
  c.require(top[0]->val_auc == 0.9258, "top-1 is not the max val_auc");
  c.require(top[1]->seed == 3 && top[2]->seed == 4,
            "tied val_auc does not break toward the lower seed");
}

// --- 7: username prior adjustment -------------------------------------------

void criterion_user_prior(Check& c) {
  // lambda = 0 must be an identity map.
  rng::Stream rng(66);
  training::PredictionSet preds;
  std::map<std::string, std::string> user_of;
  for (int i = 0; i < 30; ++i) {
    const std::string id = "p" + std::to_string(i);
    preds[id] = rng.unit();
    user_of[id] = "u" + std::to_string(i % 5);
  }
  scoring::UserPrior prior;
  prior.lambda = 0.0;
  prior.global_rate = 0.4;
  for (int u = 0; u < 5; ++u) prior.user_rate["u" + std::to_string(u)] = 0.1 * u;
  c.require(scoring::apply_user_prior(preds, prior, user_of) == preds,
            "lambda = 0 is not an identity");

  // 20% of users carry the label entirely; their texts are pure filler.
  synth::SynthConfig sc;
  sc.n = 240;
  sc.seed = 12;
  sc.n_users = 20;
  sc.user_determined_fraction = 0.2;
  sc.avg_len = 10;
  sc.long_fraction = 0.0;
  const auto corpus = synth::generate(sc);
  const auto [train, test] = dataio::stratified_split(corpus, 0.3, 2);

  encoder::EncoderConfig cfg;
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.max_positions = 32;
  cfg.dropout_rate = 0.0;
  training::TrainConfig tc;
  tc.epochs = 8;
  tc.batch_size = 8;
  tc.max_len = 32;
  tc.learning_rate = 3e-3;
  tc.freeze_first_epoch = false;
  tc.vocab_max_size = 256;
  const auto ckpt = training::train_one(train, test, cfg, tc, 0);

  const auto raw = training::predict(ckpt, test);
  const auto fitted = scoring::fit_user_prior(train, 1.0, 0.25);
  std::map<std::string, std::string> test_users;
  for (const auto& post : test.posts) test_users[post.id] = post.user_id;
  const auto adjusted = scoring::apply_user_prior(raw, fitted, test_users);

  auto auc_of = [&](const training::PredictionSet& p) {
    metrics::ScoredLabels sl;
    for (const auto& post : test.posts) {
      sl.scores.push_back(p.at(post.id));
      sl.labels.push_back(*post.label);
    }
    return metrics::roc_auc(sl);
  };
  const double before = auc_of(raw);
  const double after = auc_of(adjusted);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "test auc %.4f -> %.4f after adjustment", before, after);
  c.detail = buf;
  c.require(after > before, "prior adjustment did not strictly improve AUC");
}

// --- 8: multi-seed selection and end-to-end reproducibility -----------------

void criterion_multi_seed(Check& c) {
  synth::SynthConfig sc;
  sc.n = 32;
  sc.seed = 8;
  sc.n_users = 8;
  sc.avg_len = 8;
  sc.long_fraction = 0.0;
  const auto corpus = synth::generate(sc);
  const auto [train, val] = dataio::stratified_split(corpus, 0.25, 1);

  encoder::EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.max_positions = 24;
  cfg.dropout_rate = 0.0;
  training::TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.max_len = 24;
  tc.learning_rate = 1e-3;
  tc.vocab_max_size = 128;

  const auto result = training::train_multi_seed(train, val, cfg, tc, 10, 4);
  c.require(result.leaderboard.size() == 10, "leaderboard does not list 10 seeds");
  double max_auc = 0.0;
  for (const auto& [seed, auc] : result.leaderboard) max_auc = std::max(max_auc, auc);
  c.require(result.best.val_auc == max_auc,
            "returned checkpoint val_auc != leaderboard maximum");

  // Full pipeline twice: train 3 seeds, ensemble the top 2, write predictions.
  auto run_pipeline = [&](const std::string& path) {
    const auto r = training::train_multi_seed(train, val, cfg, tc, 3, 2);
    const auto top = scoring::select_top_k(r.checkpoints, 2);
    std::vector<training::PredictionSet> sets;
    for (const auto* member : top) sets.push_back(training::predict(*member, val));
    training::save_predictions(scoring::ensemble_average(sets), path);
  };
  const auto dir = std::filesystem::temp_directory_path();
  const auto path_a = (dir / "rii_accept_run_a.csv").string();
  const auto path_b = (dir / "rii_accept_run_b.csv").string();
  run_pipeline(path_a);
  run_pipeline(path_b);
  const auto bytes_a = read_file(path_a);
  c.require(!bytes_a.empty(), "pipeline produced an empty submission file");
  c.require(bytes_a == read_file(path_b),
            "two identically-seeded pipeline runs differ byte-for-byte");
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

// --- 9: optimizer closed forms ----------------------------------------------

void criterion_adam(Check& c) {
  encoder::EncoderConfig cfg;
  cfg.vocab_size = 20;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.max_positions = 8;
  auto params = model::init_model(cfg, false, 0, 3);
  auto reference = params;
  auto grads = model::zeros_like(cfg, params);
  for (auto ref : model::tensor_refs(grads)) ref.tensor->setConstant(-2.0);

  training::TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.weight_decay = 0.0;
  training::AdamState state{model::zeros_like(cfg, params), model::zeros_like(cfg, params)};
  training::adam_step(params, grads, state, tc, 1, false);

  auto before = model::tensor_refs(reference);
  auto after = model::tensor_refs(params);
  for (std::size_t i = 0; i < after.size(); ++i) {
    // gradient is negative everywhere, so the step is +lr per coordinate
    const double off =
        (((*after[i].tensor) - (*before[i].tensor)).array() - tc.learning_rate)
            .abs()
            .maxCoeff();
    c.require(off < 1e-9, "first step deviates from -lr * sign(g) beyond 1e-9");
  }

  auto decayed = reference;
  auto zero_grads = model::zeros_like(cfg, decayed);
  training::TrainConfig dc;
  dc.learning_rate = 0.1;
  dc.weight_decay = 0.5;
  training::AdamState dstate{model::zeros_like(cfg, decayed), model::zeros_like(cfg, decayed)};
  training::adam_step(decayed, zero_grads, dstate, dc, 1, false);
  const double factor = 1.0 - dc.learning_rate * dc.weight_decay;
  auto dec = model::tensor_refs(decayed);
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const double diff = ((*dec[i].tensor) - factor * (*before[i].tensor)).cwiseAbs().maxCoeff();
    c.require(diff == 0.0, "pure-decay step is not exactly (1 - lr*wd) scaling");
  }
}

// --- 10: preprocessing conformance ------------------------------------------

void criterion_preprocess(Check& c) {
  preprocess::Vocabulary vocab({"tin", "nóng", "thật", "giả"});
  rng::Stream rng(17);
  const std::vector<std::string> words{"tin", "nóng", "thật", "giả", "chưa_thấy"};

  for (const auto scheme_name : {"bert_style", "roberta_style"}) {
    const auto scheme = preprocess::SpecialTokenScheme::from_name(scheme_name);
    for (int trial = 0; trial < 60; ++trial) {
      const int max_len = 8 + static_cast<int>(rng.below(25));
      std::vector<std::string> tokens;
      const std::size_t n = rng.below(40);
      for (std::size_t i = 0; i < n; ++i) tokens.push_back(words[rng.below(words.size())]);
      const auto enc = preprocess::encode(tokens, vocab, scheme, max_len);

      c.require(static_cast<int>(enc.ids.size()) == max_len, "encoded length != max_len");
      c.require(enc.ids.size() == enc.mask.size(), "mask length != id length");
      const int expected_true =
          static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(max_len - 2))) +
          2;
      c.require(enc.true_length == expected_true, "true_length wrong");
      c.require(enc.ids[0] == preprocess::Vocabulary::kClsId, "first id is not cls");
      c.require(enc.ids[static_cast<std::size_t>(enc.true_length - 1)] ==
                    preprocess::Vocabulary::kSepId,
                "last content id is not sep");
      int mask_sum = 0;
      bool monotone = true;
      for (std::size_t i = 0; i < enc.mask.size(); ++i) {
        mask_sum += enc.mask[i];
        if (i > 0 && enc.mask[i] > enc.mask[i - 1]) monotone = false;
        if (static_cast<int>(i) >= enc.true_length) {
          c.require(enc.ids[i] == preprocess::Vocabulary::kPadId, "padding id is not pad");
        }
      }
      c.require(mask_sum == enc.true_length, "mask sum != true_length");
      c.require(monotone, "mask is not a prefix of ones");
    }
  }

  // uncased_flat: idempotent, newline-free.
  const std::vector<std::string> pieces{"Tin", "NÓNG", "\n", "\t", "  ", "!!!", "😂",
                                        "GIẬT gân", "\r\n", "ĐÚNG"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const std::size_t n = rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      text += pieces[rng.below(pieces.size())];
      text += ' ';
    }
    const auto once = preprocess::normalize(text, preprocess::CasingMode::uncased_flat);
    c.require(once == preprocess::normalize(once, preprocess::CasingMode::uncased_flat),
              "uncased_flat normalization is not idempotent");
    c.require(once.find('\n') == std::string::npos && once.find('\r') == std::string::npos,
              "uncased_flat output contains a newline");
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_data_dir = argv[1];

  struct Criterion {
    const char* name;
    std::function<void(Check&)> fn;
  };
  const std::vector<Criterion> criteria{
      {"gradient oracle (finite differences, tiny model)", criterion_gradients},
      {"ROC-AUC rank implementation vs pair-counting oracle", criterion_auc},
      {"first-epoch freeze leaves encoder bitwise intact", criterion_freeze},
      {"overfit bundled 64-example separable corpus", criterion_overfit},
      {"long-document chunking counts and losslessness", criterion_chunks},
      {"ensemble averaging and top-k selection", criterion_ensemble},
      {"username prior adjustment", criterion_user_prior},
      {"multi-seed selection and byte-identical pipelines", criterion_multi_seed},
      {"optimizer closed forms", criterion_adam},
      {"preprocessing framing, masks and normalization", criterion_preprocess},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    try {
      criteria[i].fn(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %2zu. %s%s%s\n", check.ok ? "PASS" : "FAIL", i + 1, criteria[i].name,
                check.detail.empty() ? "" : " — ", check.detail.c_str());
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
