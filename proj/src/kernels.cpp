#include "nof1/kernels.hpp"

#include <cstddef>

#include "nof1/errors.hpp"

namespace nof1::kernels {

PrecisionForms precision_forms(const Sequence& seq, int measurements_per_period,
                               const ResidualSpec& resid) {
  if (measurements_per_period < 1) throw ParameterError("L", "measurements per period must be at least 1");
  const std::size_t L = static_cast<std::size_t>(measurements_per_period);
  const std::size_t n = seq.periods() * L;
  const double n_trt = static_cast<double>(seq.intervention_periods() * L);
  const double nd = static_cast<double>(n);
  const double s2 = resid.variance;
  const double rho = resid.correlation;

  PrecisionForms f;
  switch (resid.structure) {
    case CorrelationStructure::independent:
      f.ones_ones = nd / s2;
      f.ones_trt = n_trt / s2;
      f.trt_trt = n_trt / s2;
      break;

    case CorrelationStructure::exchangeable: {
      // R^{-1} = (I - c 11') / (1 - rho), c = rho / (1 + (n-1) rho).
      const double c = rho / (1.0 + (nd - 1.0) * rho);
      const double scale = 1.0 / (s2 * (1.0 - rho));
      f.ones_ones = scale * (nd - c * nd * nd);
      f.ones_trt = scale * (n_trt - c * nd * n_trt);
      f.trt_trt = scale * (n_trt - c * n_trt * n_trt);
      break;
    }

    case CorrelationStructure::ar1: {
      if (n == 1) {
        f.ones_ones = 1.0 / s2;
        f.ones_trt = f.trt_trt = n_trt / s2;
        break;
      }
      // R^{-1} (1 - rho^2) = tridiag(-rho; 1, 1+rho^2, ..., 1+rho^2, 1; -rho).
      const double interior = 1.0 + rho * rho;
      double diag_11 = 0.0, diag_1a = 0.0, lag_1a = 0.0, lag_aa = 0.0;
      auto at = [&](std::size_t t) -> double { return seq[t / L]; };
      for (std::size_t t = 0; t < n; ++t) {
        const double d = (t == 0 || t + 1 == n) ? 1.0 : interior;
        const double a = at(t);
        diag_11 += d;
        diag_1a += d * a;
        if (t + 1 < n) {
          const double b = at(t + 1);
          lag_1a += a + b;
          lag_aa += a * b;
        }
      }
      const double scale = 1.0 / (s2 * (1.0 - rho * rho));
      f.ones_ones = scale * (diag_11 - 2.0 * rho * (nd - 1.0));
      f.ones_trt = scale * (diag_1a - rho * lag_1a);
      f.trt_trt = scale * (diag_1a - 2.0 * rho * lag_aa);  // a_t^2 == a_t
      break;
    }
  }
  return f;
}

Eigen::Matrix2d embedded_random_effects(const RandomEffectsSpec& re, ModelForm form) {
  Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
  if (!form.fixed_intercepts()) d(0, 0) = re.var_intercept;
  if (form.random_slopes()) d(1, 1) = re.var_slope;
  if (form == kRandomRandom) d(0, 1) = d(1, 0) = re.cov_intercept_slope;
  return d;
}

Eigen::Matrix2d marginal_information(const Eigen::Matrix2d& q, const Eigen::Matrix2d& d_embedded) {
  // I + D~Q has nonnegative eigenvalues shifted by one, so it is invertible.
  const Eigen::Matrix2d m = Eigen::Matrix2d::Identity() + d_embedded * q;
  Eigen::Matrix2d g = q * m.inverse();
  return 0.5 * (g + g.transpose());
}

std::vector<Eigen::Matrix2d> sequence_information(std::span<const Sequence> sequences,
                                                  int measurements_per_period,
                                                  const ResidualSpec& resid,
                                                  const Eigen::Matrix2d& d_embedded) {
  if (measurements_per_period < 1) throw ParameterError("L", "measurements per period must be at least 1");
  std::vector<Eigen::Matrix2d> out(sequences.size());
  const auto count = static_cast<std::ptrdiff_t>(sequences.size());
#pragma omp parallel for schedule(static) if (count >= 64)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = marginal_information(
        precision_forms(sequences[idx], measurements_per_period, resid).matrix(), d_embedded);
  }
  return out;
}

}  // namespace nof1::kernels
