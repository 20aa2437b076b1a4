#include "fedbcd/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedbcd {

double eval_auc(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size())
    throw ShapeError("eval_auc: scores and labels differ in length");
  check_labels(LossKind::LogisticBinary, labels);
  const Index n = scores.size();
  Index n_pos = 0;
  for (Index i = 0; i < n; ++i)
    if (labels(i) > 0) ++n_pos;
  const Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw MetricUndefined("eval_auc: both classes must be present");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return scores(a) < scores(b); });

  // Average ranks over tied groups, 1-based.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores(order[j + 1]) == scores(order[i])) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t)
      if (labels(order[t]) > 0) rank_sum_pos += avg_rank;
    i = j + 1;
  }

  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double eval_rmse(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size())
    throw ShapeError("eval_rmse: scores and labels differ in length");
  if (scores.size() == 0) throw MetricUndefined("eval_rmse: empty input");
  return std::sqrt((scores - labels).squaredNorm() / static_cast<double>(scores.size()));
}

}  // namespace fedbcd
