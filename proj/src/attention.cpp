#include "layoutmask/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace layoutmask {

double attention_scale(ScaleMode mode, std::size_t d_model) {
  if (d_model == 0) throw std::invalid_argument("d_model must be positive");
  const auto d = static_cast<double>(d_model);
  return mode == ScaleMode::kInvD ? 1.0 / d : 1.0 / std::sqrt(d);
}

void AttentionInputs::validate() const {
  if (q.rows() < 1 || k.rows() < 1) {
    throw std::invalid_argument("attention needs at least one query and key");
  }
  if (q.cols() != k.cols()) {
    throw std::invalid_argument("query and key widths differ: " +
                                std::to_string(q.cols()) + " vs " +
                                std::to_string(k.cols()));
  }
  if (v.rows() != k.rows()) {
    throw std::invalid_argument("value rows must match key rows");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("attention scale must be positive and finite");
  }
  if (!q.allFinite() || !k.allFinite() || !v.allFinite()) {
    throw std::invalid_argument("attention inputs must be finite");
  }
}

Matrix to_additive(const BinaryMatrix& mask) {
  Matrix out(mask.rows(), mask.cols());
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      const auto v = mask(r, c);
      if (v > 1) {
        throw std::invalid_argument("mask entry (" + std::to_string(r) + ", " +
                                    std::to_string(c) + ") is not binary");
      }
      out(r, c) = v == 1 ? 0.0 : kMaskedScore;
    }
  }
  return out;
}

namespace {

void softmax_row_inplace(Eigen::Ref<Eigen::RowVectorXd> row) {
  const double mx = row.maxCoeff();
  // Scalar exp: masked scores underflow to exactly 0.
  row = (row.array() - mx).unaryExpr([](double v) { return std::exp(v); });
  row /= row.sum();
}

}  // namespace

AttentionResult masked_attention(const AttentionInputs& inputs,
                                 const BinaryMatrix& mask) {
  inputs.validate();
  if (mask.rows() != static_cast<std::size_t>(inputs.q.rows()) ||
      mask.cols() != static_cast<std::size_t>(inputs.k.rows())) {
    throw std::invalid_argument(
        "mask shape " + std::to_string(mask.rows()) + "x" +
        std::to_string(mask.cols()) + " does not match attention " +
        std::to_string(inputs.q.rows()) + "x" + std::to_string(inputs.k.rows()));
  }

  AttentionResult res;
  Matrix scores = (inputs.q * inputs.k.transpose()) * inputs.scale;
  const Matrix additive = to_additive(mask);
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const auto row_mask = mask.row(static_cast<std::size_t>(r));
    const bool empty =
        std::none_of(row_mask.begin(), row_mask.end(), [](auto v) { return v; });
    if (empty) {
      res.fallback_rows.push_back(static_cast<std::size_t>(r));
    } else {
      scores.row(r) += additive.row(r);
    }
    softmax_row_inplace(scores.row(r));
  }
  res.output = scores * inputs.v;
  res.weights = std::move(scores);
  return res;
}

AttentionResult dense_attention(const AttentionInputs& inputs) {
  inputs.validate();
  AttentionResult res;
  Matrix scores = (inputs.q * inputs.k.transpose()) * inputs.scale;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    softmax_row_inplace(scores.row(r));
  }
  res.output = scores * inputs.v;
  res.weights = std::move(scores);
  return res;
}

double masked_mass(const Matrix& weights, const BinaryMatrix& reference,
                   const std::vector<std::size_t>& skip_rows) {
  if (reference.rows() != static_cast<std::size_t>(weights.rows()) ||
      reference.cols() != static_cast<std::size_t>(weights.cols())) {
    throw std::invalid_argument("reference mask shape does not match weights");
  }
  double worst = 0.0;
  auto skip = skip_rows.begin();
  for (std::size_t r = 0; r < reference.rows(); ++r) {
    if (skip != skip_rows.end() && *skip == r) {
      ++skip;
      continue;
    }
    double mass = 0.0;
    for (std::size_t c = 0; c < reference.cols(); ++c) {
      if (reference(r, c) == 0) mass += weights(r, c);
    }
    worst = std::max(worst, mass);
  }
  return worst;
}

}  // namespace layoutmask
