#include "nof1/reference.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nof1/errors.hpp"
#include "nof1/model_assembly.hpp"

namespace nof1::reference {

namespace {

struct DenseSystem {
  std::vector<ParticipantMatrices> participants;
  std::vector<Eigen::MatrixXd> sigma_inv_x;  // Sigma_p^{-1} X_p
  Eigen::MatrixXd information;
  Eigen::MatrixXd inverse;
};

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw InestimableError("delta", std::string(what) + " is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  const double residual = (m * inv - Eigen::MatrixXd::Identity(m.rows(), m.cols())).norm() /
                          std::sqrt(static_cast<double>(m.rows()));
  if (!(residual <= 1e-8))
    throw InestimableError("delta", std::string(what) + " solve residual too large");
  return inv;
}

DenseSystem assemble(std::span<const Sequence> sequences, std::span<const int> counts, int L, ModelForm form,
                     const RandomEffectsSpec& re, const ResidualSpec& resid) {
  if (sequences.size() != counts.size())
    throw ParameterError("participants", "one participant count per sequence is required");
  Eigen::Index total = 0;
  for (int c : counts) {
    if (c < 0) throw ParameterError("participants", "participant counts must be nonnegative");
    total += c;
  }

  DenseSystem sys;
  Eigen::Index slot = 0;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    for (int j = 0; j < counts[i]; ++j, ++slot) {
      sys.participants.push_back(assemble_participant(sequences[i], L, form, re, resid, slot, total));
      const auto& p = sys.participants.back();
      const Eigen::LLT<Eigen::MatrixXd> llt(p.sigma_marginal);
      if (llt.info() != Eigen::Success)
        throw ParameterError("residual", "marginal covariance is not positive definite");
      sys.sigma_inv_x.push_back(llt.solve(p.x));
      if (sys.information.size() == 0) sys.information = Eigen::MatrixXd::Zero(p.x.cols(), p.x.cols());
      sys.information.noalias() += p.x.transpose() * sys.sigma_inv_x.back();
    }
  if (sys.participants.empty()) throw InestimableError("delta", "design has no participants");

  // Treatment column with no within-participant contrast leaves the last
  // coordinate unidentified; reject before the factorization reports noise.
  const Eigen::Index t = sys.information.rows() - 1;
  const auto head = sys.information.topLeftCorner(t, t);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt_head(head);
  const double schur = sys.information(t, t) - sys.information.row(t).head(t) *
                                                  ldlt_head.solve(sys.information.col(t).head(t));
  if (!(schur > 1e-10 * sys.information(t, t)))
    throw InestimableError("delta", "treatment effect is not estimable");
  sys.inverse = spd_inverse(sys.information, "summed information");
  return sys;
}

}  // namespace

double var_population(std::span<const Sequence> sequences, std::span<const int> participants_per_sequence,
                      int measurements_per_period, ModelForm form, const RandomEffectsSpec& re,
                      const ResidualSpec& resid) {
  const auto sys = assemble(sequences, participants_per_sequence, measurements_per_period, form, re, resid);
  const auto& c = sys.participants.front().c_theta;
  return (c * sys.inverse * c.transpose())(0, 0);
}

double var_shrunken(std::span<const Sequence> sequences, std::span<const int> participants_per_sequence,
                    int measurements_per_period, std::size_t target_sequence, int target_member, ModelForm form,
                    const RandomEffectsSpec& re, const ResidualSpec& resid) {
  if (!form.random_slopes())
    throw UnsupportedModelError("model.slopes", "shrunken estimates require random slopes");
  if (target_sequence >= sequences.size() || target_member < 0 ||
      target_member >= participants_per_sequence[target_sequence])
    throw ParameterError("target", "target participant out of range");

  const auto sys = assemble(sequences, participants_per_sequence, measurements_per_period, form, re, resid);
  std::size_t p = static_cast<std::size_t>(target_member);
  for (std::size_t i = 0; i < target_sequence; ++i) p += static_cast<std::size_t>(participants_per_sequence[i]);

  const auto& pm = sys.participants[p];
  const Eigen::MatrixXd d = random_effects_matrix(re, form);
  const Eigen::MatrixXd& z = *pm.z;
  const Eigen::RowVectorXd& ct = pm.c_theta;
  const Eigen::RowVectorXd& cb = *pm.c_b;
  const Eigen::MatrixXd& v = sys.inverse;

  const Eigen::LLT<Eigen::MatrixXd> llt(pm.sigma_marginal);
  const Eigen::MatrixXd sigma_inv_z = llt.solve(z);
  const Eigen::MatrixXd xt_si_z = pm.x.transpose() * sigma_inv_z;  // X' Sigma^{-1} Z
  const Eigen::MatrixXd zt_si_z = z.transpose() * sigma_inv_z;     // Z' Sigma^{-1} Z

  const double term1 = (ct * v * ct.transpose())(0, 0);
  const double term2 = -2.0 * (ct * v * xt_si_z * d * cb.transpose())(0, 0);
  const Eigen::MatrixXd inner = d - d * zt_si_z * d + d * xt_si_z.transpose() * v * xt_si_z * d;
  const double term3 = (cb * inner * cb.transpose())(0, 0);
  return term1 + term2 + term3;
}

std::optional<double> se_naive(const Sequence& seq, int measurements_per_period, const ResidualSpec& resid) {
  if (!seq.has_both_treatments()) return std::nullopt;
  const Eigen::VectorXd a = treatment_column(seq, measurements_per_period);
  Eigen::MatrixXd x(a.size(), 2);
  x.col(0).setOnes();
  x.col(1) = a;
  const Eigen::MatrixXd sigma = build_residual_covariance(resid, a.size());
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  const Eigen::MatrixXd info = x.transpose() * llt.solve(x);
  const Eigen::MatrixXd inv = spd_inverse(info, "single-participant information");
  return std::sqrt(inv(1, 1));
}

}  // namespace nof1::reference
