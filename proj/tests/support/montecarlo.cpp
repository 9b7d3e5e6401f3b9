#include "montecarlo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace montecarlo {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd residual_covariance(const Config& c, int n) {
  MatrixXd r(n, n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      if (s == t) r(s, t) = 1.0;
      else if (c.structure == Structure::independent) r(s, t) = 0.0;
      else if (c.structure == Structure::exchangeable) r(s, t) = c.rho;
      else r(s, t) = std::pow(c.rho, std::abs(s - t));
    }
  return c.sigma2 * r;
}

// Symmetric square root; tolerates singular (PSD) matrices.
MatrixXd psd_root(const MatrixXd& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

struct Welford {
  long n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double sd() const { return std::sqrt(m2 / (n - 1)); }
};

}  // namespace

Result simulate(const Config& c) {
  const int I = static_cast<int>(c.sequences.size());
  if (I == 0 || c.J < 1 || c.L < 1 || c.replicates < 2) throw std::invalid_argument("bad simulation config");
  const int K = static_cast<int>(c.sequences.front().size());
  const int n = K * c.L;
  const int P = I * c.J;
  const int p_fixed = c.fixed_intercepts ? P + 1 : 2;

  // Random effects in the order (intercept, slope) restricted to the form.
  std::vector<int> re_index;  // 0 = intercept, 1 = slope
  if (!c.fixed_intercepts) re_index.push_back(0);
  if (c.random_slopes) re_index.push_back(1);
  const int q = static_cast<int>(re_index.size());
  MatrixXd full_d(2, 2);
  full_d << c.var_intercept, c.cov_intercept_slope, c.cov_intercept_slope, c.var_slope;
  MatrixXd d(q, q);
  for (int r = 0; r < q; ++r)
    for (int s = 0; s < q; ++s) d(r, s) = full_d(re_index[r], re_index[s]);

  const MatrixXd sigma_eps = residual_covariance(c, n);
  const MatrixXd eps_root = Eigen::LLT<MatrixXd>(sigma_eps).matrixL();
  const MatrixXd d_root = psd_root(d);

  std::vector<MatrixXd> x(P), z(P), w(P), vinv(P);
  std::vector<int> seq_of(P);
  MatrixXd info = MatrixXd::Zero(p_fixed, p_fixed);
  for (int i = 0, p = 0; i < I; ++i)
    for (int j = 0; j < c.J; ++j, ++p) {
      seq_of[p] = i;
      VectorXd a(n);
      for (int k = 0; k < K; ++k)
        for (int l = 0; l < c.L; ++l) a(k * c.L + l) = c.sequences[i][k];
      x[p] = MatrixXd::Zero(n, p_fixed);
      if (c.fixed_intercepts) x[p].col(p).setOnes();
      else x[p].col(0).setOnes();
      x[p].col(p_fixed - 1) = a;
      z[p].resize(n, q);
      for (int r = 0; r < q; ++r) z[p].col(r) = re_index[r] == 0 ? VectorXd::Ones(n) : a;
      const MatrixXd v = z[p] * d * z[p].transpose() + sigma_eps;
      vinv[p] = v.llt().solve(MatrixXd::Identity(n, n));
      w[p] = x[p].transpose() * vinv[p];
      info += w[p] * x[p];
    }
  const MatrixXd info_inv = info.llt().solve(MatrixXd::Identity(p_fixed, p_fixed));

  VectorXd theta(p_fixed);
  for (int k = 0; k < p_fixed - 1; ++k) theta(k) = 10.0 + 0.25 * k;
  theta(p_fixed - 1) = c.delta;

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto draw = [&](int m) {
    VectorXd v(m);
    for (int k = 0; k < m; ++k) v(k) = normal(rng);
    return v;
  };

  std::vector<int> targets;  // first participant on each sequence
  for (int i = 0; i < I; ++i) targets.push_back(i * c.J);
  const int slope_pos = c.random_slopes ? q - 1 : -1;

  Welford delta_stats;
  std::vector<Welford> shrunk(c.random_slopes ? I : 0);
  std::vector<VectorXd> y(P), b(P);
  for (int rep = 0; rep < c.replicates; ++rep) {
    VectorXd g = VectorXd::Zero(p_fixed);
    for (int p = 0; p < P; ++p) {
      b[p] = q > 0 ? VectorXd(d_root * draw(q)) : VectorXd();
      y[p] = x[p] * theta + eps_root * draw(n);
      if (q > 0) y[p] += z[p] * b[p];
      g += w[p] * y[p];
    }
    const VectorXd theta_hat = info_inv * g;
    delta_stats.add(theta_hat(p_fixed - 1));
    if (!c.random_slopes) continue;
    for (int i = 0; i < I; ++i) {
      const int t = targets[i];
      const VectorXd b_hat = d * z[t].transpose() * vinv[t] * (y[t] - x[t] * theta_hat);
      const double estimate = theta_hat(p_fixed - 1) + b_hat(slope_pos);
      const double truth = c.delta + b[t](slope_pos);
      shrunk[i].add(estimate - truth);
    }
  }

  Result out;
  out.mean_delta = delta_stats.mean;
  out.sd_delta = delta_stats.sd();
  for (const auto& s : shrunk) out.sd_shrunken.push_back(s.sd());
  return out;
}

}  // namespace montecarlo
