#include "rii/scoring.hpp"

#include <algorithm>

#include "json.hpp"
#include "rii/errors.hpp"

namespace rii::scoring {

std::vector<const training::Checkpoint*> select_top_k(
    const std::vector<training::Checkpoint>& checkpoints, int k) {
  if (checkpoints.empty()) throw EmptyList("select_top_k on no checkpoints");
  if (k < 1) throw ConfigError("k must be >= 1");
  std::vector<const training::Checkpoint*> ranked;
  ranked.reserve(checkpoints.size());
  for (const auto& c : checkpoints) ranked.push_back(&c);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->val_auc != b->val_auc) return a->val_auc > b->val_auc;
    if (a->seed != b->seed) return a->seed < b->seed;
    return a->name < b->name;
  });
  if (static_cast<std::size_t>(k) < ranked.size()) {
    ranked.resize(static_cast<std::size_t>(k));
  }
  return ranked;
}

training::PredictionSet ensemble_average(
    const std::vector<training::PredictionSet>& prediction_sets) {
  if (prediction_sets.empty()) throw EmptyList("ensemble_average on no prediction sets");
  const auto& first = prediction_sets[0];
  for (const auto& set : prediction_sets) {
    if (set.size() != first.size()) throw IdSetMismatch("prediction sets differ in size");
    for (const auto& [id, _] : set) {
      if (first.find(id) == first.end()) {
        throw IdSetMismatch("id '" + id + "' not present in every set");
      }
    }
  }
  training::PredictionSet out;
  const double inv_k = 1.0 / static_cast<double>(prediction_sets.size());
  std::vector<double> values(prediction_sets.size());
  for (const auto& [id, _] : first) {
    for (std::size_t i = 0; i < prediction_sets.size(); ++i) {
      values[i] = prediction_sets[i].at(id);
    }
    // Summing in sorted order makes the mean independent of member order.
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values) sum += v;
    out[id] = sum * inv_k;
  }
  return out;
}

UserPrior fit_user_prior(const dataio::Corpus& train, double alpha, double lambda) {
  if (!train.fully_labeled) throw NotLabeled("fit_user_prior requires full labels");
  if (alpha < 0.0 || lambda < 0.0) throw ConfigError("alpha and lambda must be >= 0");

  std::map<std::string, std::pair<double, double>> counts;  // user -> (unreliable, n)
  double total_unreliable = 0.0;
  for (const auto& post : train.posts) {
    auto& [u, n] = counts[post.user_id];
    u += *post.label;
    n += 1.0;
    total_unreliable += *post.label;
  }

  UserPrior prior;
  prior.alpha = alpha;
  prior.lambda = lambda;
  prior.global_rate = (total_unreliable + alpha) /
                      (static_cast<double>(train.posts.size()) + 2.0 * alpha);
  for (const auto& [user, un] : counts) {
    prior.user_rate[user] = (un.first + alpha) / (un.second + 2.0 * alpha);
  }
  return prior;
}

training::PredictionSet apply_user_prior(const training::PredictionSet& preds,
                                         const UserPrior& prior,
                                         const std::map<std::string, std::string>& user_of) {
  training::PredictionSet out;
  for (const auto& [id, p] : preds) {
    double rate = prior.global_rate;
    if (const auto uit = user_of.find(id); uit != user_of.end()) {
      if (const auto rit = prior.user_rate.find(uit->second); rit != prior.user_rate.end()) {
        rate = rit->second;
      }
    }
    out[id] = std::clamp(p + prior.lambda * (rate - prior.global_rate), 0.0, 1.0);
  }
  return out;
}

std::string prior_to_json(const UserPrior& prior) {
  nlohmann::json j{{"alpha", prior.alpha},
                   {"lambda", prior.lambda},
                   {"global_rate", prior.global_rate},
                   {"user_rate", prior.user_rate}};
  return j.dump(2);
}

UserPrior prior_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  UserPrior prior;
  prior.alpha = j.at("alpha");
  prior.lambda = j.at("lambda");
  prior.global_rate = j.at("global_rate");
  prior.user_rate = j.at("user_rate").get<std::map<std::string, double>>();
  return prior;
}

}  // namespace rii::scoring
