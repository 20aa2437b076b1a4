#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "fedbcd/model.hpp"

namespace fedbcd {

/// One party of the simulation: its vertical feature slice, parameter
/// block, and (for the label party, always the last index) the labels.
struct PartyState {
  int id = 0;
  Matrix features;  // N x d_k
  ModelBlock block;
  bool has_labels = false;
  Vector labels;  // length N at the label party, empty elsewhere
};

enum class PayloadKind { HScores, GSignal };

struct ExchangeMessage {
  int sender = 0;
  int receiver = 0;
  int round = 0;
  PayloadKind kind = PayloadKind::HScores;
  Vector values;
  std::vector<Index> batch_ids;
};

/// In-process mailbox keyed by (round, sender, receiver). Thread-safe for
/// concurrent producers and consumers.
class Mailbox {
 public:
  void post(ExchangeMessage msg);
  const ExchangeMessage& fetch(int round, int sender, int receiver) const;
  std::size_t size() const;

 private:
  using Key = std::tuple<int, int, int>;
  mutable std::mutex mutex_;
  std::map<Key, ExchangeMessage> messages_;
};

struct CommLedger {
  long long sync_rounds = 0;
  long long messages = 0;
  long long scalars_transferred = 0;
};

/// Shared minibatch schedule, identical at every party given one seed.
struct BatchPlan {
  enum class Mode { PartitionCycle, UniformResample };

  Mode mode = Mode::PartitionCycle;
  Index n = 0;
  Index batch_size = 0;
  int num_batches = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Index>> schedule;   // one batch per sync round
  std::vector<std::vector<Index>> partition;  // the B disjoint batches (PartitionCycle)
};

BatchPlan make_batch_plan(Index n, Index batch_size, int rounds, BatchPlan::Mode mode,
                          std::uint64_t seed);

/// Everything a party holds after a linear-form exchange, frozen until the
/// next sync: the broadcast grad signal plus the summed scores and label
/// view the simulator uses to re-evaluate g against fresh own-block scores.
struct SyncView {
  std::vector<Index> batch;
  GradSignal gsig;
  Vector h_total;
  Vector batch_labels;
};

/// The Exchange procedure for losses of the linear form: parties send
/// their H^k to the label party, which sums them, computes the grad
/// signal, and broadcasts it. 2(K-1) messages per call.
std::vector<SyncView> exchange_linear(std::vector<PartyState>& parties,
                                      std::span<const Index> batch, LossKind loss,
                                      Mailbox& mailbox, CommLedger& ledger, int round);

struct GeneralSummary {
  std::string kind = "identity";
};

/// Per-party view of everyone else's scores after a pairwise exchange.
struct OffblockScores {
  std::vector<std::pair<int, Vector>> others;  // (party id, H values over batch)
};

/// Pairwise exchange for arbitrary losses: every party sends its summary
/// to every other party. K^2 - K messages per call. Only the identity
/// summary is supported.
std::vector<OffblockScores> exchange_general(std::vector<PartyState>& parties,
                                             std::span<const Index> batch,
                                             const GeneralSummary& summary, Mailbox& mailbox,
                                             CommLedger& ledger, int round);

}  // namespace fedbcd
