#include "fedbcd/model.hpp"

namespace fedbcd {

LossKind loss_from_string(const std::string& name) {
  if (name == "logistic") return LossKind::LogisticBinary;
  if (name == "squared") return LossKind::SquaredError;
  throw ConfigError("unknown loss '" + name + "' (expected 'logistic' or 'squared')");
}

std::string to_string(LossKind kind) {
  return kind == LossKind::LogisticBinary ? "logistic" : "squared";
}

void check_labels(LossKind kind, const Vector& labels) {
  if (!labels.allFinite()) throw LabelError("labels contain non-finite values");
  if (kind == LossKind::LogisticBinary) {
    for (Index i = 0; i < labels.size(); ++i) {
      if (labels(i) != 1.0 && labels(i) != -1.0)
        throw LabelError("logistic labels must be -1 or +1, got " + std::to_string(labels(i)));
    }
  }
}

PartialScores partial_scores(const ModelBlock& block, const Matrix& features,
                             std::span<const Index> batch) {
  if (features.cols() != block.dim())
    throw ShapeError("partial_scores: features have " + std::to_string(features.cols()) +
                     " columns, block has dimension " + std::to_string(block.dim()));
  PartialScores out;
  out.values.resize(static_cast<Index>(batch.size()));
  out.batch_ids.assign(batch.begin(), batch.end());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Index i = batch[j];
    if (i < 0 || i >= features.rows())
      throw ShapeError("partial_scores: batch index " + std::to_string(i) + " out of range");
    out.values(static_cast<Index>(j)) = features.row(i).dot(block.theta);
  }
  return out;
}

GradSignal grad_signal(LossKind kind, const Vector& h_total, const Vector& labels,
                       std::vector<Index> batch_ids) {
  if (h_total.size() != labels.size())
    throw ShapeError("grad_signal: scores and labels differ in length");
  check_labels(kind, labels);
  GradSignal out;
  out.values.resize(h_total.size());
  for (Index i = 0; i < h_total.size(); ++i)
    out.values(i) = grad_signal_value(kind, h_total(i), labels(i));
  out.batch_ids = std::move(batch_ids);
  return out;
}

Vector partial_gradient(const ModelBlock& block, const Matrix& features,
                        const GradSignal& gsig, double lambda) {
  if (gsig.batch_ids.empty()) throw EmptyBatch("partial_gradient: empty batch");
  if (static_cast<Index>(gsig.batch_ids.size()) != gsig.values.size())
    throw ShapeError("partial_gradient: grad signal not aligned with its batch");
  if (features.cols() != block.dim())
    throw ShapeError("partial_gradient: feature/block dimension mismatch");

  Vector acc = Vector::Zero(block.dim());
  for (std::size_t j = 0; j < gsig.batch_ids.size(); ++j) {
    const Index i = gsig.batch_ids[j];
    acc.noalias() += gsig.values(static_cast<Index>(j)) * features.row(i).transpose();
  }
  Vector grad = acc / static_cast<double>(gsig.batch_ids.size());
  if (lambda != 0.0) grad.noalias() += lambda * block.theta;
  return grad;
}

double full_loss(LossKind kind, const Vector& h_total, const Vector& labels,
                 const std::vector<ModelBlock>& blocks, double lambda) {
  if (h_total.size() != labels.size())
    throw ShapeError("full_loss: scores and labels differ in length");
  check_labels(kind, labels);
  double acc = 0.0;
  for (Index i = 0; i < h_total.size(); ++i)
    acc += sample_loss(kind, h_total(i), labels(i));
  double loss = acc / static_cast<double>(h_total.size());
  for (const ModelBlock& block : blocks) loss += lambda * 0.5 * block.theta.squaredNorm();
  return loss;
}

Matrix local_encoder_apply(const EncoderSpec& encoder, const Matrix& features) {
  if (encoder.name != "identity")
    throw Unsupported("local encoder '" + encoder.name + "' is not supported (identity only)");
  return features;
}

}  // namespace fedbcd
