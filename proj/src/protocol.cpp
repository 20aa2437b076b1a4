#include "fedbcd/protocol.hpp"

#include <algorithm>
#include <numeric>

namespace fedbcd {

void Mailbox::post(ExchangeMessage msg) {
  std::lock_guard<std::mutex> lock(mutex_);
  const Key key{msg.round, msg.sender, msg.receiver};
  messages_[key] = std::move(msg);
}

const ExchangeMessage& Mailbox::fetch(int round, int sender, int receiver) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = messages_.find(Key{round, sender, receiver});
  if (it == messages_.end())
    throw ProtocolError("mailbox: no message for round " + std::to_string(round) + " from " +
                        std::to_string(sender) + " to " + std::to_string(receiver));
  return it->second;
}

std::size_t Mailbox::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return messages_.size();
}

BatchPlan make_batch_plan(Index n, Index batch_size, int rounds, BatchPlan::Mode mode,
                          std::uint64_t seed) {
  if (n < 1) throw ConfigError("batch plan: need at least one sample");
  if (batch_size < 1 || batch_size > n)
    throw ConfigError("batch plan: batch size must satisfy 1 <= S <= n, got S=" +
                      std::to_string(batch_size) + ", n=" + std::to_string(n));

  BatchPlan plan;
  plan.mode = mode;
  plan.n = n;
  plan.batch_size = batch_size;
  plan.seed = seed;
  SeededRng rng(seed, /*stream=*/0x6261746368ULL);  // "batch"

  if (mode == BatchPlan::Mode::PartitionCycle) {
    // Fixed disjoint partition of floor(n/S) batches; the tail is dropped so
    // every batch has exactly S samples. One batch drawn uniformly per round.
    const int b = static_cast<int>(n / batch_size);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    rng.shuffle(perm);
    plan.num_batches = b;
    plan.partition.resize(static_cast<std::size_t>(b));
    for (int j = 0; j < b; ++j) {
      auto first = perm.begin() + static_cast<std::ptrdiff_t>(j) * batch_size;
      plan.partition[static_cast<std::size_t>(j)].assign(first, first + batch_size);
    }
    plan.schedule.reserve(static_cast<std::size_t>(rounds));
    for (int r = 0; r < rounds; ++r) {
      const Index pick = b == 1 ? 0 : rng.uniform_index(b);
      plan.schedule.push_back(plan.partition[static_cast<std::size_t>(pick)]);
    }
  } else {
    plan.num_batches = static_cast<int>(n / batch_size);
    std::vector<Index> pool(static_cast<std::size_t>(n));
    plan.schedule.reserve(static_cast<std::size_t>(rounds));
    for (int r = 0; r < rounds; ++r) {
      std::iota(pool.begin(), pool.end(), Index{0});
      // Partial Fisher-Yates: the first S slots become the sample.
      for (Index j = 0; j < batch_size; ++j) {
        const Index pick = j + rng.uniform_index(n - j);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
      }
      plan.schedule.emplace_back(pool.begin(), pool.begin() + batch_size);
    }
  }
  return plan;
}

namespace {

void check_parties(const std::vector<PartyState>& parties) {
  if (parties.size() < 2) throw ProtocolError("exchange: need at least two parties");
  for (std::size_t k = 0; k + 1 < parties.size(); ++k) {
    if (parties[k].has_labels)
      throw ProtocolError("exchange: labels must live at the last party only");
  }
  if (!parties.back().has_labels)
    throw ProtocolError("exchange: the label party (last index) holds no labels");
}

Vector gather_labels(const PartyState& label_party, std::span<const Index> batch) {
  Vector y(static_cast<Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) y(static_cast<Index>(j)) = label_party.labels(batch[j]);
  return y;
}

}  // namespace

std::vector<SyncView> exchange_linear(std::vector<PartyState>& parties,
                                      std::span<const Index> batch, LossKind loss,
                                      Mailbox& mailbox, CommLedger& ledger, int round) {
  check_parties(parties);
  if (batch.empty()) throw ProtocolError("exchange: empty batch");
  const int k_count = static_cast<int>(parties.size());
  const int label_party = k_count - 1;

  std::vector<PartialScores> scores;
  scores.reserve(parties.size());
  for (PartyState& party : parties)
    scores.push_back(partial_scores(party.block, party.features, batch));

  for (int k = 0; k < label_party; ++k) {
    mailbox.post(ExchangeMessage{k, label_party, round, PayloadKind::HScores,
                                 scores[static_cast<std::size_t>(k)].values,
                                 scores[static_cast<std::size_t>(k)].batch_ids});
    ledger.messages += 1;
    ledger.scalars_transferred += static_cast<long long>(batch.size());
  }

  Vector h_total = scores[0].values;
  for (int k = 1; k < k_count; ++k) h_total += scores[static_cast<std::size_t>(k)].values;

  const Vector y = gather_labels(parties.back(), batch);
  std::vector<Index> ids(batch.begin(), batch.end());
  const GradSignal gsig = grad_signal(loss, h_total, y, ids);

  for (int k = 0; k < label_party; ++k) {
    mailbox.post(
        ExchangeMessage{label_party, k, round, PayloadKind::GSignal, gsig.values, ids});
    ledger.messages += 1;
    ledger.scalars_transferred += static_cast<long long>(batch.size());
  }

  std::vector<SyncView> views(parties.size());
  for (auto& view : views) {
    view.batch = ids;
    view.gsig = gsig;
    view.h_total = h_total;
    view.batch_labels = y;
  }
  return views;
}

std::vector<OffblockScores> exchange_general(std::vector<PartyState>& parties,
                                             std::span<const Index> batch,
                                             const GeneralSummary& summary, Mailbox& mailbox,
                                             CommLedger& ledger, int round) {
  if (summary.kind != "identity")
    throw Unsupported("exchange_general: summary '" + summary.kind + "' is not supported");
  if (parties.size() < 2) throw ProtocolError("exchange: need at least two parties");
  if (batch.empty()) throw ProtocolError("exchange: empty batch");

  const int k_count = static_cast<int>(parties.size());
  std::vector<PartialScores> scores;
  scores.reserve(parties.size());
  for (PartyState& party : parties)
    scores.push_back(partial_scores(party.block, party.features, batch));

  std::vector<OffblockScores> views(parties.size());
  for (int q = 0; q < k_count; ++q) {
    for (int k = 0; k < k_count; ++k) {
      if (q == k) continue;
      mailbox.post(ExchangeMessage{q, k, round, PayloadKind::HScores,
                                   scores[static_cast<std::size_t>(q)].values,
                                   scores[static_cast<std::size_t>(q)].batch_ids});
      ledger.messages += 1;
      ledger.scalars_transferred += static_cast<long long>(batch.size());
      views[static_cast<std::size_t>(k)].others.emplace_back(
          q, scores[static_cast<std::size_t>(q)].values);
    }
  }
  return views;
}

}  // namespace fedbcd
