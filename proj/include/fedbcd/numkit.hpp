#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "fedbcd/errors.hpp"

namespace fedbcd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Deterministic, stream-splittable RNG. The raw bit stream comes from
/// std::mt19937_64 (fully pinned by the standard), and uniform/gaussian
/// draws are derived here rather than through std::*_distribution, whose
/// output is implementation-defined. Identical (seed, stream) pairs give
/// identical sequences everywhere.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Fresh generator for an independent substream of the same seed.
  SeededRng substream(std::uint64_t id) const;

  std::uint64_t next_u64();
  double uniform01();  // [0, 1)
  double gaussian();   // standard normal, Box-Muller
  Index uniform_index(Index n);  // unbiased draw from [0, n)

  Vector gaussian_vector(Index n);
  Matrix gaussian_matrix(Index rows, Index cols);

  /// Fisher-Yates with this generator; std::shuffle is not pinned.
  void shuffle(std::vector<Index>& values);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::mt19937_64 gen_;
};

/// A sampled non-identity orthogonal matrix that fixes a given vector,
/// together with the factors it was built from: u = householder_p *
/// blockdiag(1, inner_v) * householder_p.
struct OrthoWitness {
  Matrix u;
  Matrix householder_p;
  Matrix inner_v;        // (d-1) x (d-1), non-identity orthogonal
  Vector fixed_vector;   // the vector u leaves in place
};

/// Symmetric involution P with P * theta0 = ||theta0|| * e1. Returns the
/// identity when theta0 is already a positive multiple of e1.
Matrix householder_to_e1(const Vector& theta0);

/// Random orthogonal matrix via QR of a gaussian matrix with the diagonal
/// signs of R folded into Q, so the result is deterministic in the rng.
Matrix random_orthogonal(Index dim, SeededRng& rng);

OrthoWitness sample_ortho_witness(const Vector& theta0, SeededRng& rng);

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace fedbcd
