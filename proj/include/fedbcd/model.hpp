#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fedbcd/numkit.hpp"

namespace fedbcd {

/// Losses of the separable form f(sum_k x_i^k theta_k, y_i).
enum class LossKind { LogisticBinary, SquaredError };

LossKind loss_from_string(const std::string& name);
std::string to_string(LossKind kind);

/// One party's parameter block.
struct ModelBlock {
  int party_id = 0;
  Vector theta;

  Index dim() const { return theta.size(); }
};

/// Per-sample score contributions H_i of one party over a minibatch.
struct PartialScores {
  Vector values;
  std::vector<Index> batch_ids;
};

/// Per-sample loss derivatives g(H_i, y_i) over a minibatch, broadcast by
/// the label party.
struct GradSignal {
  Vector values;
  std::vector<Index> batch_ids;
};

template <typename Scalar>
Scalar sample_loss(LossKind kind, Scalar h, Scalar y) {
  if (kind == LossKind::SquaredError) {
    const Scalar r = h - y;
    return Scalar(0.5) * r * r;
  }
  // log(1 + exp(-y h)), branch keeps the exponent non-positive.
  const Scalar z = -y * h;
  return z > Scalar(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

template <typename Scalar>
Scalar grad_signal_value(LossKind kind, Scalar h, Scalar y) {
  if (kind == LossKind::SquaredError) return h - y;
  return -y / (Scalar(1) + std::exp(y * h));
}

void check_labels(LossKind kind, const Vector& labels);

PartialScores partial_scores(const ModelBlock& block, const Matrix& features,
                             std::span<const Index> batch);

GradSignal grad_signal(LossKind kind, const Vector& h_total, const Vector& labels,
                       std::vector<Index> batch_ids = {});

/// Stochastic partial gradient (1/|batch|) sum_i g_i x_i^T + lambda * theta.
Vector partial_gradient(const ModelBlock& block, const Matrix& features,
                        const GradSignal& gsig, double lambda);

double full_loss(LossKind kind, const Vector& h_total, const Vector& labels,
                 const std::vector<ModelBlock>& blocks, double lambda);

/// Local feature transformation applied before training. Only the identity
/// map is supported; anything else is out of scope.
struct EncoderSpec {
  std::string name = "identity";
};

Matrix local_encoder_apply(const EncoderSpec& encoder, const Matrix& features);

}  // namespace fedbcd
