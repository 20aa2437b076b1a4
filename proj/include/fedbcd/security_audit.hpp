#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fedbcd/algorithms.hpp"

namespace fedbcd {

/// Shadow-training audit settings. The base config fixes the algorithm,
/// Q, rounds and seeds shared by the paired runs.
struct AuditConfig {
  int target_party = 0;
  int trials = 10;
  double tol_abs = 1e-9;
  double tol_rel = 0.0;
  bool negative_control = false;  // replace the witness by a shear
  TrainingConfig base;
};

struct AuditTrial {
  int trial = 0;
  std::string witness_fingerprint;
  double max_message_dev = 0.0;
  double max_theta_dev = 0.0;
  int first_fail_round = -1;
  std::vector<double> round_message_dev;  // per sync round, max over all messages
  std::vector<double> round_theta_dev;    // per sync round, max over local steps
  bool pass = false;
};

struct AuditReport {
  int target_party = 0;
  int rounds = 0;
  int local_iters = 0;
  double tol_abs = 0.0;
  double tol_rel = 0.0;
  bool negative_control = false;
  std::vector<AuditTrial> trials;
  bool all_pass = false;

  nlohmann::json to_json() const;
};

/// Right-multiplies every row by the witness matrix: x~ = x U. Row norms
/// are preserved by orthogonality.
Matrix transform_dataset(const Matrix& features_k, const OrthoWitness& witness);

/// Unit upper shear I + s e1 e2^T: volume-preserving but not orthogonal.
/// Used as the audit's negative control.
Matrix shear_map(Index dim, double s);

/// Runs paired trainings (original data vs. party-k data right-multiplied
/// by a sampled witness, identical seeds and batches) and records, per
/// sync round, the max deviation across all exchanged messages and the max
/// deviation of theta~ from U^T theta after every local step.
AuditReport run_shadow_audit(const AuditConfig& cfg, const VerticalDataset& data);

/// Samples pairwise-distinct witnesses for one initial block, exhibiting
/// the non-uniqueness of the attacker's inversion. Dimension 2 admits
/// exactly one non-identity orthogonal matrix fixing theta0, so count > 1
/// is only satisfiable for d >= 3.
std::vector<OrthoWitness> enumerate_witness_family(const Vector& theta0, int count,
                                                   SeededRng& rng);

}  // namespace fedbcd
