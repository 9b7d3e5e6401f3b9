#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Closed-form crossover results used to check the engine. Nothing here calls
// into the library.
namespace oracle {

struct Counts {
  int intervention = 0;  // measurements under treatment 1
  int reference = 0;
};

inline Counts measurement_counts(const std::vector<int>& seq, int L) {
  Counts c;
  for (int a : seq) (a ? c.intervention : c.reference) += L;
  return c;
}

// Var of a participant's mean difference with a free intercept:
// independent errors give sigma2 (1/n1 + 1/n0); exchangeable errors remove
// the shared component, leaving sigma2 (1 - rho) (1/n1 + 1/n0).
inline double contrast_variance(const Counts& c, double sigma2, double rho_exchangeable) {
  return sigma2 * (1.0 - rho_exchangeable) * (1.0 / c.intervention + 1.0 / c.reference);
}

// Fixed-Common pooling over participants: precisions add.
inline double fixed_common_variance(const std::vector<std::vector<int>>& seqs, int J, int L, double sigma2,
                                    double rho_exchangeable) {
  double precision = 0.0;
  for (const auto& s : seqs) precision += J / contrast_variance(measurement_counts(s, L), sigma2, rho_exchangeable);
  return 1.0 / precision;
}

// z_{1-alpha/2} + z_{1-beta} for alpha = .05, beta = .2.
inline constexpr double kZSum = 2.8015852612;

}  // namespace oracle
