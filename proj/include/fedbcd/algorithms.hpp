#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedbcd/data.hpp"

namespace fedbcd {

enum class AlgoKind { FedSGD, FedBCDParallel, FedBCDSequential, FedPBCDParallel };
enum class LrSchedule { Constant, InvSqrtT, InvSqrtTK };

AlgoKind algo_from_string(const std::string& name);
std::string to_string(AlgoKind algo);
LrSchedule schedule_from_string(const std::string& name);
std::string to_string(LrSchedule schedule);

struct TrainingConfig {
  AlgoKind algo = AlgoKind::FedSGD;
  int parties = 2;       // K
  int local_iters = 1;   // Q
  double eta0 = 0.1;
  double lambda = 0.0;
  double mu = 0.0;       // proximal weight, FedPBCD-p only
  Index batch_size = 64;
  int sync_rounds = 100;
  LrSchedule lr_schedule = LrSchedule::InvSqrtT;
  BatchPlan::Mode sampling = BatchPlan::Mode::PartitionCycle;
  LossKind loss = LossKind::LogisticBinary;
  std::uint64_t seed = 0;
  double init_scale = 0.01;  // stddev of the gaussian parameter init
  int threads = 1;           // >1 runs FedBCD-p local phases on worker threads

  void validate() const;  // throws ConfigError naming the violated constraint
};

struct LipschitzEstimate {
  double l_global = 0.0;            // L
  std::vector<double> l_blocks;     // L_k per party
};

/// Largest step size the convergence guarantee admits:
/// min over k of min{ sqrt(2) / (2 Q sqrt(sum_j L_j^2 + 3 L_k^2)), 1/L }.
double step_size_bound(const LipschitzEstimate& lips, int q);

double lr_at(LrSchedule schedule, double eta0, int sync_round, int parties);

/// Power-iteration estimate of L and the per-block L_k from the data Gram
/// matrix, scaled by the loss curvature (1 for squared error, 1/4 for
/// logistic), plus the regularizer weight.
LipschitzEstimate estimate_lipschitz(const VerticalDataset& data, LossKind loss, double lambda);

enum class RunStatus { Completed, Diverged };

/// Hooks for transcript recorders and per-iteration probes. When an
/// observer is attached, FedBCD-p runs its local phases in lockstep so
/// on_local_iter_end sees a consistent joint parameter state; per-party
/// arithmetic is unchanged either way.
struct TrainObserver {
  virtual ~TrainObserver() = default;
  virtual void on_exchange(int /*round*/, const std::vector<PartialScores>& /*h_messages*/,
                           const GradSignal& /*gsig*/) {}
  virtual void on_local_step(int /*round*/, int /*party*/, int /*q*/, const Vector& /*theta*/) {}
  virtual void on_local_iter_end(int /*round*/, int /*q*/,
                                 const std::vector<ModelBlock>& /*blocks*/) {}
};

struct RunResult {
  std::vector<ModelBlock> blocks;
  std::vector<RoundMetrics> metrics;
  RunStatus status = RunStatus::Completed;
  CommLedger ledger;
  LipschitzEstimate lipschitz;
};

/// One sync round's worth of local work for a single party: own-block
/// scores are recomputed from the current theta at every step, while the
/// other blocks' contribution stays frozen at the last exchange.
class LocalPhase {
 public:
  LocalPhase(PartyState& party, const SyncView& view, LossKind loss);

  /// One gradient step; returns false when theta leaves the finite range.
  bool step(double eta, double lambda, double mu, const Vector& anchor);

  int steps_done() const { return steps_done_; }

 private:
  PartyState* party_;
  const SyncView* view_;
  LossKind loss_;
  Vector offblock_;  // frozen sum of the other parties' scores over the batch
  int steps_done_ = 0;
};

/// Runs q steps of LocalPhase with a fixed anchor (the theta at the last
/// sync). Returns Diverged when an update produces non-finite values.
RunStatus local_update_block(PartyState& party, const SyncView& view, LossKind loss, int q,
                             double eta, double lambda, double mu, const Vector& anchor,
                             int round = 0, TrainObserver* observer = nullptr);

RunResult run_fedsgd(const TrainingConfig& cfg, const VerticalDataset& train,
                     const VerticalDataset* eval = nullptr, TrainObserver* observer = nullptr);
RunResult run_fedbcd_p(const TrainingConfig& cfg, const VerticalDataset& train,
                       const VerticalDataset* eval = nullptr, TrainObserver* observer = nullptr);
RunResult run_fedbcd_s(const TrainingConfig& cfg, const VerticalDataset& train,
                       const VerticalDataset* eval = nullptr, TrainObserver* observer = nullptr);

/// Dispatch on cfg.algo.
RunResult run_training(const TrainingConfig& cfg, const VerticalDataset& train,
                       const VerticalDataset* eval = nullptr, TrainObserver* observer = nullptr);

/// Deterministic per-party parameter init used by all runners (and by the
/// centralized baseline, which concatenates these same vectors).
Vector init_block_theta(const TrainingConfig& cfg, int party, Index dim);

/// Full-batch loss and squared gradient norm at the current parameters.
void full_objective(const VerticalDataset& data, LossKind loss, double lambda,
                    const std::vector<ModelBlock>& blocks, double* loss_out,
                    double* grad_norm_sq_out);

/// Concatenated scores sum_k X_k theta_k over all samples.
Vector full_scores(const VerticalDataset& data, const std::vector<ModelBlock>& blocks);

double eval_metric_for(const VerticalDataset* eval, LossKind loss,
                       const std::vector<ModelBlock>& blocks);

}  // namespace fedbcd
