#pragma once

#include <vector>

namespace rii::metrics {

struct ScoredLabels {
  std::vector<double> scores;
  std::vector<int> labels;  // binary
};

// Mann-Whitney AUC via sort + average ranks for ties; ties credit 0.5 per
// pair. Throws SingleClass / EmptyInput.
double roc_auc(const ScoredLabels& data);

// O(n^2) pair-counting oracle with the same tie rule. Used by tests; kept
// here so both routes share the type.
double roc_auc_pairwise(const ScoredLabels& data);

}  // namespace rii::metrics
