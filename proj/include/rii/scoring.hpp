#pragma once

#include <map>
#include <string>
#include <vector>

#include "rii/dataio.hpp"
#include "rii/training.hpp"

namespace rii::scoring {

// Smoothed per-user unreliable rates; unseen users resolve to the global rate.
struct UserPrior {
  std::map<std::string, double> user_rate;
  double global_rate = 0.0;
  double alpha = 1.0;
  double lambda = 0.25;
};

// k highest by val_auc; ties break by lower seed, then lexicographic name.
std::vector<const training::Checkpoint*> select_top_k(
    const std::vector<training::Checkpoint>& checkpoints, int k);

// Per-id arithmetic mean of p_unreliable over the member sets.
training::PredictionSet ensemble_average(
    const std::vector<training::PredictionSet>& prediction_sets);

// r_u = (unreliable_u + alpha) / (n_u + 2 alpha); r_global over all posts.
UserPrior fit_user_prior(const dataio::Corpus& train, double alpha, double lambda);

// p' = clamp(p + lambda * (r_u - r_global), 0, 1)
training::PredictionSet apply_user_prior(const training::PredictionSet& preds,
                                         const UserPrior& prior,
                                         const std::map<std::string, std::string>& user_of);

std::string prior_to_json(const UserPrior& prior);
UserPrior prior_from_json(const std::string& text);

}  // namespace rii::scoring
