#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "layoutmask/binary_matrix.hpp"

namespace layoutmask {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Additive value for masked-out entries. Finite so that a fully masked row
// never produces NaN before the fallback check.
inline constexpr double kMaskedScore = -1e9;

enum class ScaleMode {
  kInvSqrtD,  // 1 / sqrt(d_model)
  kInvD,      // 1 / d_model
};

double attention_scale(ScaleMode mode, std::size_t d_model);

struct AttentionInputs {
  Matrix q;  // d_q x d_model
  Matrix k;  // d_k x d_model
  Matrix v;  // d_k x d_v
  double scale = 1.0;

  void validate() const;
};

// 1 -> 0.0, 0 -> kMaskedScore. Throws std::invalid_argument on entries > 1.
Matrix to_additive(const BinaryMatrix& mask);

struct AttentionResult {
  Matrix output;   // d_q x d_v
  Matrix weights;  // d_q x d_k, rows sum to one
  // Query rows whose mask was all zero; these use the unmasked softmax.
  std::vector<std::size_t> fallback_rows;
};

// softmax(scale * Q K^T + additive(M)) V with a row-max-stabilized softmax.
AttentionResult masked_attention(const AttentionInputs& inputs,
                                 const BinaryMatrix& mask);

// Same computation without a mask.
AttentionResult dense_attention(const AttentionInputs& inputs);

// Largest per-row probability mass that lands on entries where `reference`
// is zero. Rows listed in `skip_rows` (sorted) are ignored.
double masked_mass(const Matrix& weights, const BinaryMatrix& reference,
                   const std::vector<std::size_t>& skip_rows = {});

}  // namespace layoutmask
