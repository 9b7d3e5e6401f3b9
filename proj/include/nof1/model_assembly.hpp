#pragma once

#include <optional>

#include <Eigen/Dense>

#include "nof1/types.hpp"

namespace nof1 {

// sigma^2 * R for the configured correlation structure. For ar1 the lag is the
// distance in measurement index over the whole K*L vector, so correlation
// carries across period boundaries.
Eigen::MatrixXd build_residual_covariance(const ResidualSpec& spec, Eigen::Index n);

// D for the model form: empty for Fixed-Common, [var_slope] for Fixed-Random,
// [var_intercept] for Random-Common, the full 2x2 matrix for Random-Random.
Eigen::MatrixXd random_effects_matrix(const RandomEffectsSpec& re, ModelForm form);

// Treatment indicator per measurement: each period's entry repeated L times.
Eigen::VectorXd treatment_column(const Sequence& seq, int measurements_per_period);

struct ParticipantMatrices {
  Eigen::MatrixXd x;
  std::optional<Eigen::MatrixXd> z;
  Eigen::MatrixXd sigma_marginal;
  Eigen::RowVectorXd c_theta;
  std::optional<Eigen::RowVectorXd> c_b;
};

// Design and covariance matrices for one participant.
//
// Fixed-intercept forms use the full layout: one indicator column per
// participant (n_intercept_slots of them, this participant at intercept_slot)
// followed by the shared treatment column. Random-intercept forms use the
// two columns (1, a). The treatment coordinate is always the last column.
ParticipantMatrices assemble_participant(const Sequence& seq, int measurements_per_period,
                                         ModelForm form, const RandomEffectsSpec& re,
                                         const ResidualSpec& resid, Eigen::Index intercept_slot,
                                         Eigen::Index n_intercept_slots);

}  // namespace nof1
