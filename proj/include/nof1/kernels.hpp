#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nof1/types.hpp"

// Closed-form per-sequence information for the participant-local design
// [1, a]. Every random-effect design in the model catalogue is a column
// selection of [1, a], so the marginal information follows from the three
// residual-precision quadratic forms without forming any K*L x K*L matrix.
// The dense path in reference.hpp computes the same quantities directly.
namespace nof1::kernels {

// 1' P 1, 1' P a, a' P a with P the inverse residual covariance.
struct PrecisionForms {
  double ones_ones = 0.0;
  double ones_trt = 0.0;
  double trt_trt = 0.0;

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d q;
    q << ones_ones, ones_trt, ones_trt, trt_trt;
    return q;
  }
};

// O(K*L): uses the explicit inverse of the exchangeable matrix and the
// tridiagonal inverse of the ar1 matrix.
PrecisionForms precision_forms(const Sequence& seq, int measurements_per_period,
                               const ResidualSpec& resid);

// Random-effect covariance embedded in (intercept, treatment) coordinates.
Eigen::Matrix2d embedded_random_effects(const RandomEffectsSpec& re, ModelForm form);

// [1,a]' (Sigma_eps + [1,a] D~ [1,a]')^{-1} [1,a] = Q (I + D~ Q)^{-1}.
Eigen::Matrix2d marginal_information(const Eigen::Matrix2d& q, const Eigen::Matrix2d& d_embedded);

// marginal_information for every sequence; parallel over sequences.
std::vector<Eigen::Matrix2d> sequence_information(std::span<const Sequence> sequences,
                                                  int measurements_per_period,
                                                  const ResidualSpec& resid,
                                                  const Eigen::Matrix2d& d_embedded);

}  // namespace nof1::kernels
