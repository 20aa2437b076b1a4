#include "fedbcd/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

namespace fedbcd {

namespace {

constexpr std::uint64_t kInitStreamBase = 0x696e6974;  // "init"

std::vector<Index> all_rows(Index n) {
  std::vector<Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Index{0});
  return ids;
}

std::vector<ModelBlock> collect_blocks(const std::vector<PartyState>& parties) {
  std::vector<ModelBlock> blocks;
  blocks.reserve(parties.size());
  for (const PartyState& p : parties) blocks.push_back(p.block);
  return blocks;
}

}  // namespace

AlgoKind algo_from_string(const std::string& name) {
  if (name == "fedsgd") return AlgoKind::FedSGD;
  if (name == "fedbcd_p") return AlgoKind::FedBCDParallel;
  if (name == "fedbcd_s") return AlgoKind::FedBCDSequential;
  if (name == "fedpbcd_p") return AlgoKind::FedPBCDParallel;
  throw ConfigError("unknown algorithm '" + name +
                    "' (expected fedsgd, fedbcd_p, fedbcd_s or fedpbcd_p)");
}

std::string to_string(AlgoKind algo) {
  switch (algo) {
    case AlgoKind::FedSGD: return "fedsgd";
    case AlgoKind::FedBCDParallel: return "fedbcd_p";
    case AlgoKind::FedBCDSequential: return "fedbcd_s";
    case AlgoKind::FedPBCDParallel: return "fedpbcd_p";
  }
  return "?";
}

LrSchedule schedule_from_string(const std::string& name) {
  if (name == "constant") return LrSchedule::Constant;
  if (name == "inv_sqrt_t") return LrSchedule::InvSqrtT;
  if (name == "inv_sqrt_tk") return LrSchedule::InvSqrtTK;
  throw ConfigError("unknown lr schedule '" + name +
                    "' (expected constant, inv_sqrt_t or inv_sqrt_tk)");
}

std::string to_string(LrSchedule schedule) {
  switch (schedule) {
    case LrSchedule::Constant: return "constant";
    case LrSchedule::InvSqrtT: return "inv_sqrt_t";
    case LrSchedule::InvSqrtTK: return "inv_sqrt_tk";
  }
  return "?";
}

void TrainingConfig::validate() const {
  if (parties < 2) throw ConfigError("config: parties must satisfy K >= 2");
  if (local_iters < 1) throw ConfigError("config: local_iters must satisfy Q >= 1");
  if (algo == AlgoKind::FedSGD && local_iters != 1)
    throw ConfigError("config: fedsgd is defined with Q = 1; set local_iters to 1");
  if (!(eta0 > 0.0)) throw ConfigError("config: eta0 must be positive");
  if (lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
  if (mu < 0.0) throw ConfigError("config: mu must be >= 0");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (sync_rounds < 0) throw ConfigError("config: sync_rounds must be >= 0");
  if (init_scale < 0.0) throw ConfigError("config: init_scale must be >= 0");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
}

double step_size_bound(const LipschitzEstimate& lips, int q) {
  if (q < 1) throw ConfigError("step_size_bound: q must be >= 1");
  if (!(lips.l_global > 0.0)) throw ConfigError("step_size_bound: L must be positive");
  if (lips.l_blocks.empty()) throw ConfigError("step_size_bound: no block constants");
  double sum_sq = 0.0;
  for (double lk : lips.l_blocks) {
    if (!(lk > 0.0)) throw ConfigError("step_size_bound: every L_k must be positive");
    sum_sq += lk * lk;
  }
  double bound = 1.0 / lips.l_global;
  for (double lk : lips.l_blocks) {
    const double arm =
        std::sqrt(2.0) / (2.0 * static_cast<double>(q) * std::sqrt(sum_sq + 3.0 * lk * lk));
    bound = std::min(bound, arm);
  }
  return bound;
}

double lr_at(LrSchedule schedule, double eta0, int sync_round, int parties) {
  switch (schedule) {
    case LrSchedule::Constant: return eta0;
    case LrSchedule::InvSqrtT: return eta0 / std::sqrt(static_cast<double>(sync_round + 1));
    case LrSchedule::InvSqrtTK:
      return eta0 / std::sqrt(static_cast<double>(sync_round + 1) * static_cast<double>(parties));
  }
  return eta0;
}

LipschitzEstimate estimate_lipschitz(const VerticalDataset& data, LossKind loss, double lambda) {
  const Index n = data.n();
  const Index d = data.dim();
  Matrix x(n, d);
  Index col = 0;
  for (const Matrix& slice : data.slices) {
    x.middleCols(col, slice.cols()) = slice;
    col += slice.cols();
  }
  const double scale = loss == LossKind::LogisticBinary ? 0.25 : 1.0;
  SeededRng rng(0xF00D, 7);

  auto spectral_sq = [&](const Matrix& m) {
    // Largest eigenvalue of m^T m by power iteration.
    Vector v = rng.gaussian_vector(m.cols());
    v.normalize();
    double eig = 0.0;
    for (int it = 0; it < 80; ++it) {
      Vector w = m.transpose() * (m * v);
      const double norm = w.norm();
      if (norm == 0.0) return 0.0;
      v = w / norm;
      eig = norm;
    }
    return eig;
  };

  LipschitzEstimate est;
  est.l_global = lambda + scale * spectral_sq(x / std::sqrt(static_cast<double>(n)));
  col = 0;
  for (const Matrix& slice : data.slices) {
    // Block-row norm of the Gram matrix: || X_k^T X / n ||_2.
    const Matrix block_row = slice.transpose() * x / static_cast<double>(n);
    est.l_blocks.push_back(lambda + scale * std::sqrt(spectral_sq(block_row.transpose())));
    col += slice.cols();
  }
  return est;
}

Vector init_block_theta(const TrainingConfig& cfg, int party, Index dim) {
  SeededRng rng(cfg.seed, kInitStreamBase + static_cast<std::uint64_t>(party));
  return cfg.init_scale * rng.gaussian_vector(dim);
}

Vector full_scores(const VerticalDataset& data, const std::vector<ModelBlock>& blocks) {
  Vector h = Vector::Zero(data.n());
  for (std::size_t k = 0; k < data.slices.size(); ++k)
    h.noalias() += data.slices[k] * blocks[k].theta;
  return h;
}

void full_objective(const VerticalDataset& data, LossKind loss, double lambda,
                    const std::vector<ModelBlock>& blocks, double* loss_out,
                    double* grad_norm_sq_out) {
  const Vector h = full_scores(data, blocks);
  if (loss_out) *loss_out = full_loss(loss, h, data.labels, blocks, lambda);
  if (grad_norm_sq_out) {
    const GradSignal gsig = grad_signal(loss, h, data.labels, all_rows(data.n()));
    double acc = 0.0;
    for (std::size_t k = 0; k < blocks.size(); ++k)
      acc += partial_gradient(blocks[k], data.slices[k], gsig, lambda).squaredNorm();
    *grad_norm_sq_out = acc;
  }
}

double eval_metric_for(const VerticalDataset* eval, LossKind loss,
                       const std::vector<ModelBlock>& blocks) {
  if (eval == nullptr || eval->n() == 0) return std::nan("");
  const Vector scores = full_scores(*eval, blocks);
  try {
    return loss == LossKind::LogisticBinary ? eval_auc(scores, eval->labels)
                                            : eval_rmse(scores, eval->labels);
  } catch (const MetricUndefined&) {
    return std::nan("");
  }
}

LocalPhase::LocalPhase(PartyState& party, const SyncView& view, LossKind loss)
    : party_(&party), view_(&view), loss_(loss) {
  const PartialScores own = partial_scores(party.block, party.features, view.batch);
  offblock_ = view.h_total - own.values;
}

bool LocalPhase::step(double eta, double lambda, double mu, const Vector& anchor) {
  GradSignal fresh;
  const GradSignal* sig = &view_->gsig;
  if (steps_done_ > 0) {
    // Own scores move with theta; the off-block sum stays at its sync value.
    const PartialScores own = partial_scores(party_->block, party_->features, view_->batch);
    fresh = grad_signal(loss_, offblock_ + own.values, view_->batch_labels, view_->gsig.batch_ids);
    sig = &fresh;
  }
  Vector grad = partial_gradient(party_->block, party_->features, *sig, lambda);
  if (mu != 0.0) grad.noalias() += mu * (party_->block.theta - anchor);
  party_->block.theta -= eta * grad;
  ++steps_done_;
  return party_->block.theta.allFinite();
}

RunStatus local_update_block(PartyState& party, const SyncView& view, LossKind loss, int q,
                             double eta, double lambda, double mu, const Vector& anchor,
                             int round, TrainObserver* observer) {
  LocalPhase phase(party, view, loss);
  for (int j = 0; j < q; ++j) {
    if (!phase.step(eta, lambda, mu, anchor)) return RunStatus::Diverged;
    if (observer) observer->on_local_step(round, party.id, j, party.block.theta);
  }
  return RunStatus::Completed;
}

namespace {

struct Engine {
  const TrainingConfig& cfg;
  const VerticalDataset& train;
  const VerticalDataset* eval;
  TrainObserver* observer;

  std::vector<PartyState> parties;
  BatchPlan plan;
  Mailbox mailbox;
  RunResult result;
  std::chrono::steady_clock::time_point started;

  Engine(const TrainingConfig& cfg_, const VerticalDataset& train_, const VerticalDataset* eval_,
         TrainObserver* observer_)
      : cfg(cfg_), train(train_), eval(eval_), observer(observer_) {
    cfg.validate();
    if (train.parties() != cfg.parties)
      throw ConfigError("config: parties=" + std::to_string(cfg.parties) + " but the dataset has " +
                        std::to_string(train.parties()) + " slices");
    if (train.labels.size() != train.n()) throw ConfigError("dataset: labels missing or ragged");
    check_labels(cfg.loss, train.labels);

    for (int k = 0; k < cfg.parties; ++k) {
      PartyState party;
      party.id = k;
      party.features = train.slices[static_cast<std::size_t>(k)];
      party.block = ModelBlock{k, init_block_theta(cfg, k, party.features.cols())};
      if (k == cfg.parties - 1) {
        party.has_labels = true;
        party.labels = train.labels;
      }
      parties.push_back(std::move(party));
    }

    plan = make_batch_plan(train.n(), cfg.batch_size, cfg.sync_rounds, cfg.sampling, cfg.seed);
    result.lipschitz = estimate_lipschitz(train, cfg.loss, cfg.lambda);
    const double bound = step_size_bound(result.lipschitz, cfg.local_iters);
    if (cfg.eta0 > bound) {
      std::fprintf(stderr,
                   "warning: eta0=%g exceeds the step-size bound %g for Q=%d; proceeding\n",
                   cfg.eta0, bound, cfg.local_iters);
    }
    started = std::chrono::steady_clock::now();
    push_metrics(0);
  }

  void push_metrics(int completed_rounds) {
    RoundMetrics row;
    row.sync_round = completed_rounds;
    row.total_local_iters =
        static_cast<long long>(completed_rounds) * static_cast<long long>(cfg.local_iters);
    const std::vector<ModelBlock> blocks = collect_blocks(parties);
    full_objective(train, cfg.loss, cfg.lambda, blocks, &row.full_loss, &row.grad_norm_sq);
    row.eval_metric = eval_metric_for(eval, cfg.loss, blocks);
    row.ledger = result.ledger;
    row.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               started)
                         .count();
    result.metrics.push_back(row);
  }

  std::vector<SyncView> do_exchange(int round) {
    auto views = exchange_linear(parties, plan.schedule[static_cast<std::size_t>(round)], cfg.loss,
                                 mailbox, result.ledger, round);
    result.ledger.sync_rounds += 1;
    if (observer) {
      std::vector<PartialScores> wire;
      for (int k = 0; k + 1 < cfg.parties; ++k) {
        const ExchangeMessage& msg = mailbox.fetch(round, k, cfg.parties - 1);
        wire.push_back(PartialScores{msg.values, msg.batch_ids});
      }
      observer->on_exchange(round, wire, views[0].gsig);
    }
    return views;
  }

  bool finite_loss_check() {
    double loss = 0.0;
    full_objective(train, cfg.loss, cfg.lambda, collect_blocks(parties), &loss, nullptr);
    return std::isfinite(loss);
  }

  RunResult finish() {
    result.blocks = collect_blocks(parties);
    return std::move(result);
  }
};

}  // namespace

RunResult run_fedsgd(const TrainingConfig& cfg, const VerticalDataset& train,
                     const VerticalDataset* eval, TrainObserver* observer) {
  Engine eng(cfg, train, eval, observer);
  for (int t = 0; t < cfg.sync_rounds; ++t) {
    const std::vector<ModelBlock> snapshot = collect_blocks(eng.parties);
    const std::vector<SyncView> views = eng.do_exchange(t);
    const double eta = lr_at(cfg.lr_schedule, cfg.eta0, t, cfg.parties);
    bool ok = true;
    for (int k = 0; k < cfg.parties; ++k) {
      PartyState& party = eng.parties[static_cast<std::size_t>(k)];
      LocalPhase phase(party, views[static_cast<std::size_t>(k)], cfg.loss);
      ok = phase.step(eta, cfg.lambda, 0.0, party.block.theta) && ok;
      if (observer) observer->on_local_step(t, k, 0, party.block.theta);
    }
    if (!ok || !eng.finite_loss_check()) {
      for (int k = 0; k < cfg.parties; ++k)
        eng.parties[static_cast<std::size_t>(k)].block = snapshot[static_cast<std::size_t>(k)];
      eng.result.status = RunStatus::Diverged;
      break;
    }
    eng.push_metrics(t + 1);
  }
  return eng.finish();
}

RunResult run_fedbcd_p(const TrainingConfig& cfg, const VerticalDataset& train,
                       const VerticalDataset* eval, TrainObserver* observer) {
  Engine eng(cfg, train, eval, observer);
  const double mu_eff = cfg.algo == AlgoKind::FedPBCDParallel ? cfg.mu : 0.0;
  const int q_total = cfg.local_iters;

  for (int t = 0; t < cfg.sync_rounds; ++t) {
    const std::vector<ModelBlock> snapshot = collect_blocks(eng.parties);
    const std::vector<SyncView> views = eng.do_exchange(t);
    const double eta = lr_at(cfg.lr_schedule, cfg.eta0, t, cfg.parties);

    std::vector<Vector> anchors;
    anchors.reserve(eng.parties.size());
    for (const PartyState& p : eng.parties) anchors.push_back(p.block.theta);

    std::vector<LocalPhase> phases;
    phases.reserve(eng.parties.size());
    for (int k = 0; k < cfg.parties; ++k)
      phases.emplace_back(eng.parties[static_cast<std::size_t>(k)],
                          views[static_cast<std::size_t>(k)], cfg.loss);

    std::vector<char> ok(eng.parties.size(), 1);
    if (observer != nullptr || cfg.threads <= 1) {
      // Lockstep order so observers see a consistent joint state; identical
      // arithmetic to the threaded path since parties share nothing mutable.
      for (int q = 0; q < q_total; ++q) {
        for (int k = 0; k < cfg.parties; ++k) {
          const auto ks = static_cast<std::size_t>(k);
          if (!phases[ks].step(eta, cfg.lambda, mu_eff, anchors[ks])) ok[ks] = 0;
          if (observer)
            observer->on_local_step(t, k, q, eng.parties[ks].block.theta);
        }
        if (observer) observer->on_local_iter_end(t, q, collect_blocks(eng.parties));
      }
    } else {
      std::vector<std::thread> workers;
      for (int k = 0; k < cfg.parties; ++k) {
        workers.emplace_back([&, k] {
          const auto ks = static_cast<std::size_t>(k);
          for (int q = 0; q < q_total; ++q) {
            if (!phases[ks].step(eta, cfg.lambda, mu_eff, anchors[ks])) {
              ok[ks] = 0;
              break;
            }
          }
        });
      }
      for (std::thread& w : workers) w.join();
    }

    const bool all_ok = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    if (!all_ok || !eng.finite_loss_check()) {
      for (int k = 0; k < cfg.parties; ++k)
        eng.parties[static_cast<std::size_t>(k)].block = snapshot[static_cast<std::size_t>(k)];
      eng.result.status = RunStatus::Diverged;
      break;
    }
    eng.push_metrics(t + 1);
  }
  return eng.finish();
}

RunResult run_fedbcd_s(const TrainingConfig& cfg, const VerticalDataset& train,
                       const VerticalDataset* eval, TrainObserver* observer) {
  Engine eng(cfg, train, eval, observer);
  const Index n = train.n();
  const int k_count = cfg.parties;
  const int label_party = k_count - 1;

  // The label party keeps every party's latest full-length score vector so
  // any later batch can be served; column k is refreshed at the end of
  // party k's turn.
  Matrix stored(n, k_count);
  for (int k = 0; k < k_count; ++k) {
    stored.col(k) = eng.parties[static_cast<std::size_t>(k)].features *
                    eng.parties[static_cast<std::size_t>(k)].block.theta;
    if (k != label_party) {
      eng.result.ledger.messages += 1;
      eng.result.ledger.scalars_transferred += static_cast<long long>(n);
    }
  }

  const std::vector<Index> full_ids = all_rows(n);
  for (int t = 0; t < cfg.sync_rounds; ++t) {
    const std::vector<ModelBlock> snapshot = collect_blocks(eng.parties);
    const std::vector<Index>& batch = eng.plan.schedule[static_cast<std::size_t>(t)];
    const double eta = lr_at(cfg.lr_schedule, cfg.eta0, t, cfg.parties);
    bool ok = true;

    for (int k = 0; k < k_count && ok; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      PartyState& party = eng.parties[ks];

      SyncView view;
      view.batch = batch;
      view.h_total.resize(static_cast<Index>(batch.size()));
      view.batch_labels.resize(static_cast<Index>(batch.size()));
      for (std::size_t j = 0; j < batch.size(); ++j) {
        view.h_total(static_cast<Index>(j)) = stored.row(batch[j]).sum();
        view.batch_labels(static_cast<Index>(j)) = train.labels(batch[j]);
      }
      view.gsig = grad_signal(cfg.loss, view.h_total, view.batch_labels, batch);

      const Vector anchor = party.block.theta;
      if (local_update_block(party, view, cfg.loss, cfg.local_iters, eta, cfg.lambda, 0.0, anchor,
                             t, observer) == RunStatus::Diverged) {
        ok = false;
        break;
      }

      stored.col(k) = party.features * party.block.theta;
      if (k != label_party) {
        eng.mailbox.post(ExchangeMessage{k, label_party, t, PayloadKind::HScores, stored.col(k),
                                         full_ids});
        eng.mailbox.post(ExchangeMessage{label_party, k, t, PayloadKind::GSignal, view.gsig.values,
                                         batch});
        eng.result.ledger.messages += 2;  // refreshed H^k up, grad signal down
        eng.result.ledger.scalars_transferred +=
            static_cast<long long>(n) + static_cast<long long>(batch.size());
      }
      if (observer) {
        std::vector<PartialScores> wire;
        wire.push_back(PartialScores{stored.col(k), full_ids});
        observer->on_exchange(t, wire, view.gsig);
      }
    }

    if (!ok || !eng.finite_loss_check()) {
      for (int k = 0; k < k_count; ++k)
        eng.parties[static_cast<std::size_t>(k)].block = snapshot[static_cast<std::size_t>(k)];
      eng.result.status = RunStatus::Diverged;
      break;
    }
    eng.result.ledger.sync_rounds += 1;
    eng.push_metrics(t + 1);
  }
  return eng.finish();
}

RunResult run_training(const TrainingConfig& cfg, const VerticalDataset& train,
                       const VerticalDataset* eval, TrainObserver* observer) {
  switch (cfg.algo) {
    case AlgoKind::FedSGD: return run_fedsgd(cfg, train, eval, observer);
    case AlgoKind::FedBCDParallel:
    case AlgoKind::FedPBCDParallel: return run_fedbcd_p(cfg, train, eval, observer);
    case AlgoKind::FedBCDSequential: return run_fedbcd_s(cfg, train, eval, observer);
  }
  throw ConfigError("run_training: unknown algorithm");
}

}  // namespace fedbcd
