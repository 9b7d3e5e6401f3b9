#pragma once

#include <cstdint>
#include <vector>

// Brute-force simulation of the linear mixed model. Draws outcome vectors,
// fits the GLS estimator and the BLUP with the true covariances, and reports
// the empirical spread. Self-contained: no engine code is used, so it can
// serve as an oracle for the analytic variances.
namespace montecarlo {

enum class Structure { independent, exchangeable, ar1 };

struct Config {
  std::vector<std::vector<int>> sequences;  // I sequences, 0/1 per period
  int J = 1;
  int L = 1;
  bool fixed_intercepts = true;
  bool random_slopes = true;
  double sigma2 = 4.0;
  Structure structure = Structure::ar1;
  double rho = 0.4;
  double var_intercept = 4.0;
  double var_slope = 1.0;
  double cov_intercept_slope = 1.0;
  double delta = 1.0;
  int replicates = 20000;
  std::uint64_t seed = 1;
};

struct Result {
  double mean_delta = 0.0;
  double sd_delta = 0.0;
  // Spread of (shrunken - true) for the first participant of every sequence;
  // empty for common-slope models.
  std::vector<double> sd_shrunken;
};

Result simulate(const Config& config);

}  // namespace montecarlo
