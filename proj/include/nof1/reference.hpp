#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "nof1/types.hpp"

// Serial dense reference path. Builds every participant's full design and
// marginal covariance (the (sum J + 1)-column layout for fixed intercepts)
// and evaluates the GLS and BLUP variance expressions with Cholesky solves.
// Kept for testing and benchmarking the closed-form kernels; cost grows with
// the cube of both K*L and the participant count.
namespace nof1::reference {

double var_population(std::span<const Sequence> sequences, std::span<const int> participants_per_sequence,
                      int measurements_per_period, ModelForm form, const RandomEffectsSpec& re,
                      const ResidualSpec& resid);

// target_member indexes the participants on sequences[target_sequence].
double var_shrunken(std::span<const Sequence> sequences, std::span<const int> participants_per_sequence,
                    int measurements_per_period, std::size_t target_sequence, int target_member, ModelForm form,
                    const RandomEffectsSpec& re, const ResidualSpec& resid);

std::optional<double> se_naive(const Sequence& seq, int measurements_per_period, const ResidualSpec& resid);

}  // namespace nof1::reference
