#include "fedbcd/security_audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace fedbcd {

Matrix transform_dataset(const Matrix& features_k, const OrthoWitness& witness) {
  if (features_k.cols() != witness.u.rows())
    throw ShapeError("transform_dataset: features have " + std::to_string(features_k.cols()) +
                     " columns, witness is " + std::to_string(witness.u.rows()) + "-dimensional");
  return features_k * witness.u;
}

Matrix shear_map(Index dim, double s) {
  if (dim < 2) throw DimensionTooSmall("shear_map: need dimension >= 2");
  Matrix m = Matrix::Identity(dim, dim);
  m(0, 1) += s;
  return m;
}

namespace {

std::string fingerprint(const Matrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      std::uint64_t bits;
      const double v = m(i, j);
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 0x100000001b3ULL;
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Captures the wire transcript plus the audited party's per-step thetas.
struct TranscriptRecorder : TrainObserver {
  int target_party;
  struct Round {
    std::vector<Vector> messages;  // every H^k payload then the grad signal
    std::vector<Vector> thetas;    // audited party, one per local step
  };
  std::vector<Round> rounds;

  explicit TranscriptRecorder(int target) : target_party(target) {}

  Round& at(int round) {
    if (static_cast<std::size_t>(round) >= rounds.size())
      rounds.resize(static_cast<std::size_t>(round) + 1);
    return rounds[static_cast<std::size_t>(round)];
  }

  void on_exchange(int round, const std::vector<PartialScores>& h_messages,
                   const GradSignal& gsig) override {
    Round& r = at(round);
    for (const PartialScores& msg : h_messages) r.messages.push_back(msg.values);
    r.messages.push_back(gsig.values);
  }

  void on_local_step(int round, int party, int /*q*/, const Vector& theta) override {
    if (party == target_party) at(round).thetas.push_back(theta);
  }
};

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

AuditReport run_shadow_audit(const AuditConfig& cfg, const VerticalDataset& data) {
  cfg.base.validate();
  if (cfg.trials < 1) throw ConfigError("audit: trials must be >= 1");
  if (cfg.target_party < 0 || cfg.target_party >= data.parties())
    throw ConfigError("audit: target party out of range");
  const auto k = static_cast<std::size_t>(cfg.target_party);
  const Index d_k = data.slices[k].cols();
  if (d_k < 2)
    throw DimensionTooSmall("audit: target party has feature dimension " + std::to_string(d_k) +
                            "; the guarantee requires d_k >= 2");

  const Vector theta0 = init_block_theta(cfg.base, cfg.target_party, d_k);
  if (theta0.norm() == 0.0)
    throw DegenerateInit("audit: initial theta of the target party is zero");

  TranscriptRecorder reference(cfg.target_party);
  const RunResult ref_run = run_training(cfg.base, data, nullptr, &reference);

  AuditReport report;
  report.target_party = cfg.target_party;
  report.rounds = cfg.base.sync_rounds;
  report.local_iters = cfg.base.local_iters;
  report.tol_abs = cfg.tol_abs;
  report.tol_rel = cfg.tol_rel;
  report.negative_control = cfg.negative_control;
  report.all_pass = true;

  SeededRng audit_rng(cfg.base.seed, 0x6175646974ULL);  // "audit"
  for (int trial = 0; trial < cfg.trials; ++trial) {
    Matrix u;
    std::string print;
    if (cfg.negative_control) {
      u = shear_map(d_k, 0.5);
      print = "shear(" + fingerprint(u) + ")";
    } else {
      SeededRng trial_rng = audit_rng.substream(static_cast<std::uint64_t>(trial));
      const OrthoWitness witness = sample_ortho_witness(theta0, trial_rng);
      u = witness.u;
      print = fingerprint(u);
    }

    VerticalDataset shadow = data;
    shadow.slices[k] = data.slices[k] * u;
    // theta~^0 = U^T theta^0 equals theta^0 by construction, so both runs
    // share the same deterministic init.
    TranscriptRecorder transformed(cfg.target_party);
    const RunResult shadow_run = run_training(cfg.base, shadow, nullptr, &transformed);

    AuditTrial result;
    result.trial = trial;
    result.witness_fingerprint = print;
    result.pass = ref_run.status == RunStatus::Completed &&
                  shadow_run.status == RunStatus::Completed &&
                  transformed.rounds.size() == reference.rounds.size();

    const std::size_t rounds = std::min(reference.rounds.size(), transformed.rounds.size());
    for (std::size_t r = 0; r < rounds; ++r) {
      const auto& ra = reference.rounds[r];
      const auto& rb = transformed.rounds[r];

      double msg_dev = 0.0, msg_scale = 0.0;
      if (ra.messages.size() != rb.messages.size()) {
        msg_dev = std::numeric_limits<double>::infinity();
      } else {
        for (std::size_t m = 0; m < ra.messages.size(); ++m) {
          if (ra.messages[m].size() != rb.messages[m].size()) {
            msg_dev = std::numeric_limits<double>::infinity();
            break;
          }
          msg_dev = std::max(msg_dev, max_abs(ra.messages[m] - rb.messages[m]));
          msg_scale = std::max(msg_scale, max_abs(ra.messages[m]));
        }
      }

      double theta_dev = 0.0, theta_scale = 0.0;
      if (ra.thetas.size() != rb.thetas.size()) {
        theta_dev = std::numeric_limits<double>::infinity();
      } else {
        for (std::size_t s = 0; s < ra.thetas.size(); ++s) {
          const Vector expected = u.transpose() * ra.thetas[s];
          theta_dev = std::max(theta_dev, max_abs(rb.thetas[s] - expected));
          theta_scale = std::max(theta_scale, max_abs(expected));
        }
      }

      result.round_message_dev.push_back(msg_dev);
      result.round_theta_dev.push_back(theta_dev);
      result.max_message_dev = std::max(result.max_message_dev, msg_dev);
      result.max_theta_dev = std::max(result.max_theta_dev, theta_dev);

      const bool ok = msg_dev <= cfg.tol_abs + cfg.tol_rel * msg_scale &&
                      theta_dev <= cfg.tol_abs + cfg.tol_rel * theta_scale;
      if (!ok && result.first_fail_round < 0) result.first_fail_round = static_cast<int>(r);
      result.pass = result.pass && ok;
    }

    report.all_pass = report.all_pass && result.pass;
    report.trials.push_back(std::move(result));
  }
  return report;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json j;
  j["target_party"] = target_party;
  j["rounds"] = rounds;
  j["local_iters"] = local_iters;
  j["tol_abs"] = tol_abs;
  j["tol_rel"] = tol_rel;
  j["negative_control"] = negative_control;
  j["all_pass"] = all_pass;
  j["trials"] = nlohmann::json::array();
  for (const AuditTrial& t : trials) {
    nlohmann::json jt;
    jt["trial"] = t.trial;
    jt["witness"] = t.witness_fingerprint;
    jt["max_message_dev"] = t.max_message_dev;
    jt["max_theta_dev"] = t.max_theta_dev;
    jt["first_fail_round"] = t.first_fail_round;
    jt["round_message_dev"] = t.round_message_dev;
    jt["round_theta_dev"] = t.round_theta_dev;
    jt["pass"] = t.pass;
    j["trials"].push_back(std::move(jt));
  }
  return j;
}

std::vector<OrthoWitness> enumerate_witness_family(const Vector& theta0, int count,
                                                   SeededRng& rng) {
  if (count < 1) throw ConfigError("enumerate_witness_family: count must be >= 1");
  if (theta0.size() < 2)
    throw DimensionTooSmall("enumerate_witness_family: need dimension >= 2");
  if (theta0.size() == 2 && count > 1)
    throw DegenerateInput(
        "enumerate_witness_family: in dimension 2 exactly one non-identity orthogonal matrix "
        "fixes theta0; request count 1");

  std::vector<OrthoWitness> family;
  std::uint64_t stream = 0;
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 64) throw Error("enumerate_witness_family: cannot find a distinct witness");
      SeededRng sub = rng.substream(stream++);
      OrthoWitness candidate = sample_ortho_witness(theta0, sub);
      const bool distinct = std::all_of(family.begin(), family.end(), [&](const OrthoWitness& w) {
        return max_abs_diff(w.u, candidate.u) > 1e-6;
      });
      if (distinct) {
        family.push_back(std::move(candidate));
        break;
      }
    }
  }
  return family;
}

}  // namespace fedbcd
