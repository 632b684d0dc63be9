#include "rii/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "rii/errors.hpp"

namespace rii::metrics {

namespace {

void validate(const ScoredLabels& data) {
  if (data.scores.empty()) throw EmptyInput("roc_auc on empty input");
  if (data.scores.size() != data.labels.size()) {
    throw ShapeMismatch("scores/labels length mismatch");
  }
  bool has_pos = false, has_neg = false;
  for (const int l : data.labels) (l == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw SingleClass("roc_auc requires both classes");
}

}  // namespace

double roc_auc(const ScoredLabels& data) {
  validate(data);
  const std::size_t n = data.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.scores[a] < data.scores[b];
  });

  // Average ranks over tied score groups (ranks are 1-based).
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && data.scores[order[j + 1]] == data.scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (data.labels[k] == 1) {
      rank_sum_pos += rank[k];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc_pairwise(const ScoredLabels& data) {
  validate(data);
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t p = 0; p < data.scores.size(); ++p) {
    if (data.labels[p] != 1) continue;
    for (std::size_t q = 0; q < data.scores.size(); ++q) {
      if (data.labels[q] != 0) continue;
      ++pairs;
      if (data.scores[p] > data.scores[q]) wins += 1.0;
      else if (data.scores[p] == data.scores[q]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace rii::metrics
