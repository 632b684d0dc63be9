#include "rii/scoring.hpp"

#include <algorithm>

#include "doctest.h"
#include "rii/errors.hpp"
#include "rii/rng.hpp"

using namespace rii;
using training::PredictionSet;

namespace {

training::Checkpoint make_ckpt(std::uint64_t seed, double auc, std::string name = "") {
  training::Checkpoint c;
  c.seed = seed;
  c.val_auc = auc;
  c.name = name.empty() ? "seed" + std::to_string(seed) : std::move(name);
  return c;
}

}  // namespace

TEST_CASE("select_top_k orders by val_auc with the tie rule") {
  std::vector<training::Checkpoint> ckpts;
  ckpts.push_back(make_ckpt(0, 0.9144));
  ckpts.push_back(make_ckpt(1, 0.9258));
  ckpts.push_back(make_ckpt(2, 0.8937));
  ckpts.push_back(make_ckpt(3, 0.9179));

  const auto top3 = scoring::select_top_k(ckpts, 3);
  REQUIRE(top3.size() == 3);
  CHECK(top3[0]->val_auc == 0.9258);
  CHECK(top3[1]->val_auc == 0.9179);
  CHECK(top3[2]->val_auc == 0.9144);

  CHECK(scoring::select_top_k(ckpts, 10).size() == 4);

  std::vector<training::Checkpoint> tied;
  tied.push_back(make_ckpt(5, 0.9));
  tied.push_back(make_ckpt(2, 0.9));
  const auto first = scoring::select_top_k(tied, 1);
  CHECK(first[0]->seed == 2);

  CHECK_THROWS_AS(scoring::select_top_k({}, 1), EmptyList);
}

TEST_CASE("select_top_k is stable under input permutation") {
  rng::Stream rng(31);
  std::vector<training::Checkpoint> ckpts;
  for (int i = 0; i < 8; ++i) {
    ckpts.push_back(make_ckpt(static_cast<std::uint64_t>(i), 0.8 + 0.01 * (i % 4)));
  }
  auto names = [](const std::vector<const training::Checkpoint*>& v) {
    std::vector<std::string> out;
    for (const auto* c : v) out.push_back(c->name);
    return out;
  };
  const auto base = names(scoring::select_top_k(ckpts, 5));
  for (int trial = 0; trial < 10; ++trial) {
    for (std::size_t i = ckpts.size(); i > 1; --i) {
      std::swap(ckpts[i - 1], ckpts[rng.below(i)]);
    }
    CHECK(names(scoring::select_top_k(ckpts, 5)) == base);
  }
}

TEST_CASE("ensemble_average mean, idempotence, mismatch") {
  PredictionSet a{{"x", 0.2}}, b{{"x", 0.4}}, c{{"x", 0.6}};
  CHECK(scoring::ensemble_average({a, b, c}).at("x") == doctest::Approx(0.4).epsilon(1e-15));

  PredictionSet s{{"x", 0.31}, {"y", 0.77}};
  const auto same = scoring::ensemble_average({s, s, s});
  CHECK(same.at("x") == doctest::Approx(0.31).epsilon(1e-15));
  CHECK(same.at("y") == doctest::Approx(0.77).epsilon(1e-15));

  PredictionSet other{{"z", 0.5}};
  CHECK_THROWS_AS(scoring::ensemble_average({s, other}), IdSetMismatch);
}

TEST_CASE("ensemble_average permutation invariance and bounds") {
  rng::Stream rng(41);
  std::vector<PredictionSet> sets(4);
  for (auto& set : sets) {
    for (int i = 0; i < 10; ++i) set["p" + std::to_string(i)] = rng.unit();
  }
  const auto fwd = scoring::ensemble_average(sets);
  std::reverse(sets.begin(), sets.end());
  const auto rev = scoring::ensemble_average(sets);
  for (const auto& [id, p] : fwd) {
    CHECK(p == rev.at(id));
    double lo = 1.0, hi = 0.0;
    for (const auto& set : sets) {
      lo = std::min(lo, set.at(id));
      hi = std::max(hi, set.at(id));
    }
    CHECK(p >= lo);
    CHECK(p <= hi);
  }
}

TEST_CASE("fit_user_prior Laplace formula") {
  dataio::Corpus train;
  train.fully_labeled = true;
  for (int i = 0; i < 3; ++i) {
    train.posts.push_back({"a" + std::to_string(i), "hot", "x", 0, 0, 0, {}, 1});
  }
  for (int i = 0; i < 2; ++i) {
    train.posts.push_back({"b" + std::to_string(i), "cool", "x", 0, 0, 0, {}, 0});
  }
  const auto prior = scoring::fit_user_prior(train, 1.0, 0.25);
  CHECK(prior.user_rate.at("hot") == doctest::Approx(0.8));  // (3+1)/(3+2)
  CHECK(prior.user_rate.at("cool") == doctest::Approx(1.0 / 4.0));

  const auto raw = scoring::fit_user_prior(train, 0.0, 0.25);
  CHECK(raw.user_rate.at("cool") == 0.0);
  CHECK(raw.global_rate == doctest::Approx(3.0 / 5.0));

  dataio::Corpus unlabeled;
  unlabeled.posts.push_back({"a", "u", "x", 0, 0, 0, {}, {}});
  CHECK_THROWS_AS(scoring::fit_user_prior(unlabeled, 1.0, 0.25), NotLabeled);
}

TEST_CASE("apply_user_prior shift, clamp and identity") {
  scoring::UserPrior prior;
  prior.global_rate = 0.2;
  prior.user_rate = {{"u9", 0.9}, {"u0", 0.05}};
  prior.lambda = 0.5;

  std::map<std::string, std::string> user_of{{"a", "u9"}, {"b", "u0"}, {"c", "unknown"}};
  PredictionSet preds{{"a", 0.5}, {"b", 0.5}, {"c", 0.5}};

  const auto out = scoring::apply_user_prior(preds, prior, user_of);
  CHECK(out.at("a") == doctest::Approx(0.85));  // 0.5 + 0.5*(0.9-0.2)
  CHECK(out.at("b") == doctest::Approx(0.425));
  CHECK(out.at("c") == doctest::Approx(0.5));  // unseen user is a fixed point

  auto id_prior = prior;
  id_prior.lambda = 0.0;
  const auto same = scoring::apply_user_prior(preds, id_prior, user_of);
  for (const auto& [id, p] : preds) CHECK(same.at(id) == p);

  PredictionSet high{{"a", 0.9}};
  auto strong = prior;
  strong.user_rate["u9"] = 0.9;
  strong.lambda = 0.5;
  // shift +0.35 clamps at 1
  CHECK(scoring::apply_user_prior(high, strong, user_of).at("a") == 1.0);
}

TEST_CASE("apply_user_prior monotone in the user rate") {
  scoring::UserPrior prior;
  prior.global_rate = 0.3;
  prior.lambda = 0.4;
  std::map<std::string, std::string> user_of{{"a", "u"}};
  double prev = -1.0;
  for (double r = 0.0; r <= 1.0; r += 0.05) {
    prior.user_rate["u"] = r;
    const double p = scoring::apply_user_prior({{"a", 0.5}}, prior, user_of).at("a");
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("prior JSON roundtrip") {
  scoring::UserPrior prior;
  prior.alpha = 1.0;
  prior.lambda = 0.25;
  prior.global_rate = 0.17;
  prior.user_rate = {{"u1", 0.8}, {"u2", 0.1}};
  const auto loaded = scoring::prior_from_json(scoring::prior_to_json(prior));
  CHECK(loaded.global_rate == prior.global_rate);
  CHECK(loaded.user_rate == prior.user_rate);
}
