#pragma once

#include <utility>
#include <vector>

#include "fedbcd/protocol.hpp"

namespace fedbcd {

/// A feature-partitioned dataset: party k holds slice k (N x d_k), the
/// last party additionally holds the labels.
struct VerticalDataset {
  std::vector<Matrix> slices;
  Vector labels;
  std::vector<std::pair<Index, Index>> column_ranges;  // [begin, end) per party

  Index n() const { return slices.empty() ? 0 : slices.front().rows(); }
  int parties() const { return static_cast<int>(slices.size()); }
  Index dim() const {
    Index d = 0;
    for (const Matrix& s : slices) d += s.cols();
    return d;
  }
};

enum class EvalKind { None, Auc, Rmse };

/// Exact Mann-Whitney AUC: P(score+ > score-) + 1/2 P(tie), computed via
/// average ranks. Labels must be -1/+1 with both classes present.
double eval_auc(const Vector& scores, const Vector& labels);

double eval_rmse(const Vector& scores, const Vector& labels);

struct RoundMetrics {
  int sync_round = 0;
  long long total_local_iters = 0;  // per-party local updates so far
  double full_loss = 0.0;
  double grad_norm_sq = 0.0;  // || grad L(Theta) ||^2, full batch
  double eval_metric = 0.0;   // held-out AUC or RMSE, NaN when no eval set
  CommLedger ledger;
  double elapsed_ms = 0.0;
};

}  // namespace fedbcd
