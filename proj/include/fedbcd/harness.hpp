#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fedbcd/algorithms.hpp"

namespace fedbcd {

enum class SyntheticTask { LogisticSeparable, LinearNoisy };

SyntheticTask task_from_string(const std::string& name);
std::string to_string(SyntheticTask task);

struct SyntheticData {
  Matrix features;
  Vector labels;
  Vector w_star;  // generating weights, kept for diagnostics
};

/// Standard-normal features; labels sign(x w* + eps) for the logistic task,
/// x w* + eps for the linear one. Deterministic in the seed.
SyntheticData gen_synthetic(Index n, Index d, SyntheticTask task, double noise,
                            std::uint64_t seed);

/// Slice columns into per-party blocks; ranges must be disjoint, ordered and
/// covering. The labels go to the last party.
VerticalDataset split_vertical(const Matrix& features, const Vector& labels,
                               const std::vector<std::pair<Index, Index>>& ranges);

/// Convenience: split d columns into `parties` near-equal contiguous blocks.
std::vector<std::pair<Index, Index>> even_column_ranges(Index d, int parties);

/// One numeric CSV (with header) per party plus a label file; row i across
/// files is sample i. Parse errors name the file and line.
VerticalDataset load_csv_vertical(const std::vector<std::string>& party_paths,
                                  const std::string& label_path);

/// Seeded row split for held-out evaluation; row order is preserved inside
/// each part.
std::pair<VerticalDataset, VerticalDataset> split_train_eval(const VerticalDataset& data,
                                                             double eval_fraction,
                                                             std::uint64_t seed);

struct SweepSpec {
  enum class Target { LossBelow, AucAbove };

  std::vector<int> q_values;
  std::vector<AlgoKind> algos;
  Target target = Target::AucAbove;
  double target_value = 0.85;
  int max_rounds = 500;
};

struct SweepCell {
  AlgoKind algo = AlgoKind::FedSGD;
  int q = 1;
  int rounds_to_target = 0;  // max_rounds + 1 when the target was never hit
  bool dnf = false;
  RunStatus status = RunStatus::Completed;
};

struct SweepTable {
  std::vector<SweepCell> cells;
  int max_rounds = 0;

  std::string to_csv() const;
  std::string to_text() const;  // aligned columns, DNF rendered as "-"
};

/// Rounds-to-target per (algo, Q) cell on an 80/20 held-out split of the
/// data. DNF cells carry the max_rounds+1 sentinel.
SweepTable run_sweep(const SweepSpec& spec, const TrainingConfig& base,
                     const VerticalDataset& data);

/// Single-machine SGD on the concatenated features with the same batch
/// schedule, learning rates and parameter init as the federated runners.
RunResult centralized_baseline(const TrainingConfig& cfg, const VerticalDataset& train,
                               const VerticalDataset* eval = nullptr);

/// Metrics CSV, one row per sync round:
/// sync_round,total_local_iters,loss,grad_norm_sq,eval_metric,messages,scalars,elapsed_ms
/// In deterministic mode elapsed_ms is written as 0 so reruns are bitwise
/// reproducible; wallclock lives in the manifest.
void write_metrics_csv(std::ostream& out, const std::vector<RoundMetrics>& metrics,
                       bool deterministic = true);

std::string format_double(double value);  // shortest round-trip decimal form

}  // namespace fedbcd
