#include "nof1/model_assembly.hpp"

#include <cmath>

#include "nof1/errors.hpp"

namespace nof1 {

Eigen::MatrixXd build_residual_covariance(const ResidualSpec& spec, Eigen::Index n) {
  spec.validate();
  if (n < 1) throw ParameterError("n", "measurement count must be at least 1");

  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  switch (spec.structure) {
    case CorrelationStructure::independent:
      break;
    case CorrelationStructure::exchangeable:
      r.setConstant(spec.correlation);
      r.diagonal().setOnes();
      break;
    case CorrelationStructure::ar1:
      for (Eigen::Index s = 0; s < n; ++s)
        for (Eigen::Index t = s + 1; t < n; ++t)
          r(s, t) = r(t, s) = std::pow(spec.correlation, static_cast<double>(t - s));
      break;
  }
  return spec.variance * r;
}

Eigen::MatrixXd random_effects_matrix(const RandomEffectsSpec& re, ModelForm form) {
  re.validate();
  if (form == kFixedCommon) return Eigen::MatrixXd(0, 0);
  if (form == kFixedRandom) return Eigen::MatrixXd::Constant(1, 1, re.var_slope);
  if (form == kRandomCommon) return Eigen::MatrixXd::Constant(1, 1, re.var_intercept);
  Eigen::MatrixXd d(2, 2);
  d << re.var_intercept, re.cov_intercept_slope, re.cov_intercept_slope, re.var_slope;
  return d;
}

Eigen::VectorXd treatment_column(const Sequence& seq, int measurements_per_period) {
  if (measurements_per_period < 1)
    throw ParameterError("L", "measurements per period must be at least 1");
  const auto L = static_cast<Eigen::Index>(measurements_per_period);
  Eigen::VectorXd a(static_cast<Eigen::Index>(seq.periods()) * L);
  for (std::size_t k = 0; k < seq.periods(); ++k)
    a.segment(static_cast<Eigen::Index>(k) * L, L).setConstant(seq[k]);
  return a;
}

ParticipantMatrices assemble_participant(const Sequence& seq, int measurements_per_period,
                                         ModelForm form, const RandomEffectsSpec& re,
                                         const ResidualSpec& resid, Eigen::Index intercept_slot,
                                         Eigen::Index n_intercept_slots) {
  const Eigen::VectorXd a = treatment_column(seq, measurements_per_period);
  const Eigen::Index n = a.size();

  ParticipantMatrices out;
  if (form.fixed_intercepts()) {
    if (n_intercept_slots < 1 || intercept_slot < 0 || intercept_slot >= n_intercept_slots)
      throw ParameterError("intercept_slot", "must index one of the participant intercept columns");
    out.x = Eigen::MatrixXd::Zero(n, n_intercept_slots + 1);
    out.x.col(intercept_slot).setOnes();
    out.x.col(n_intercept_slots) = a;
  } else {
    out.x.resize(n, 2);
    out.x.col(0).setOnes();
    out.x.col(1) = a;
  }
  out.c_theta = Eigen::RowVectorXd::Zero(out.x.cols());
  out.c_theta(out.x.cols() - 1) = 1.0;

  const Eigen::MatrixXd sigma_eps = build_residual_covariance(resid, n);
  const Eigen::MatrixXd d = random_effects_matrix(re, form);

  if (form == kFixedCommon) {
    out.sigma_marginal = sigma_eps;
    return out;
  }
  if (form == kFixedRandom) {
    out.z = a;
    out.c_b = Eigen::RowVectorXd::Ones(1);
  } else if (form == kRandomCommon) {
    out.z = Eigen::MatrixXd::Ones(n, 1);
  } else {
    out.z = out.x;
    Eigen::RowVectorXd cb(2);
    cb << 0.0, 1.0;
    out.c_b = cb;
  }
  out.sigma_marginal = (*out.z) * d * out.z->transpose() + sigma_eps;
  return out;
}

}  // namespace nof1
