#include "fedbcd/numkit.hpp"

#include <cmath>
#include <numbers>

namespace fedbcd {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), gen_(make_engine(seed, stream)) {}

SeededRng SeededRng::substream(std::uint64_t id) const {
  // Children are keyed off (seed, stream, id); 0x9e3779b97f4a7c15 is the
  // 64-bit golden-ratio constant used as a stream mixer.
  return SeededRng(seed_, stream_ * 0x9e3779b97f4a7c15ULL + id + 1);
}

std::uint64_t SeededRng::next_u64() { return gen_(); }

double SeededRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::gaussian() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Index SeededRng::uniform_index(Index n) {
  if (n <= 0) throw ConfigError("uniform_index: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<Index>(x % un);
}

Vector SeededRng::gaussian_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = gaussian();
  return v;
}

Matrix SeededRng::gaussian_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gaussian();
  return m;
}

void SeededRng::shuffle(std::vector<Index>& values) {
  for (Index i = static_cast<Index>(values.size()) - 1; i > 0; --i) {
    const Index j = uniform_index(i + 1);
    std::swap(values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]);
  }
}

Matrix householder_to_e1(const Vector& theta0) {
  if (theta0.size() < 2) throw DimensionTooSmall("householder_to_e1: need length >= 2");
  const double norm = theta0.norm();
  if (norm == 0.0) throw DegenerateInput("householder_to_e1: zero vector");

  Vector v = theta0;
  v(0) -= norm;
  if (v.norm() <= 1e-12 * norm) {
    // theta0 is already a positive multiple of e1.
    return Matrix::Identity(theta0.size(), theta0.size());
  }
  const double vtv = v.squaredNorm();
  Matrix p = Matrix::Identity(theta0.size(), theta0.size());
  p.noalias() -= (2.0 / vtv) * (v * v.transpose());
  return p;
}

Matrix random_orthogonal(Index dim, SeededRng& rng) {
  if (dim < 1) throw DimensionTooSmall("random_orthogonal: dim must be >= 1");
  const Matrix g = rng.gaussian_matrix(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

OrthoWitness sample_ortho_witness(const Vector& theta0, SeededRng& rng) {
  const Index d = theta0.size();
  if (d < 2) throw DimensionTooSmall("sample_ortho_witness: need dimension >= 2");
  if (theta0.norm() == 0.0) throw DegenerateInput("sample_ortho_witness: zero vector");

  const Matrix p = householder_to_e1(theta0);

  Matrix v;
  if (d == 2) {
    // The only 1x1 non-identity orthogonal matrix.
    v = Matrix::Constant(1, 1, -1.0);
  } else {
    for (int attempt = 0;; ++attempt) {
      v = random_orthogonal(d - 1, rng);
      if (max_abs_diff(v, Matrix::Identity(d - 1, d - 1)) > 1e-3) break;
      if (attempt > 64) throw Error("sample_ortho_witness: cannot draw a non-identity block");
    }
  }

  Matrix u1 = Matrix::Identity(d, d);
  u1.block(1, 1, d - 1, d - 1) = v;
  Matrix u = p * u1 * p;

  if (max_abs_diff(u * u.transpose(), Matrix::Identity(d, d)) > 1e-10)
    throw Error("sample_ortho_witness: orthogonality check failed");
  const double theta_scale = 1.0 + theta0.cwiseAbs().maxCoeff();
  if ((u * theta0 - theta0).cwiseAbs().maxCoeff() > 1e-10 * theta_scale)
    throw Error("sample_ortho_witness: fixed-vector check failed");
  if (max_abs_diff(u, Matrix::Identity(d, d)) <= 1e-6)
    throw Error("sample_ortho_witness: witness collapsed to the identity");

  return OrthoWitness{std::move(u), p, std::move(v), theta0};
}

}  // namespace fedbcd
