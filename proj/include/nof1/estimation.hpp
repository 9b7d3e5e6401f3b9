#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nof1/design.hpp"
#include "nof1/types.hpp"

namespace nof1 {

struct Band {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;

  // Arithmetic mean; values must be nonempty.
  static Band of(std::span<const double> values);
};

// Summed GLS information for a (possibly unbalanced) allocation of
// participants to sequences sharing L. Fixed-intercept forms are handled by
// profiling the per-participant intercepts out of the (sum J + 1)-column
// information; the result equals the full-matrix computation.
class PopulationInformation {
 public:
  // Throws InestimableError when the treatment coordinate is not identified.
  PopulationInformation(std::vector<Eigen::Matrix2d> sequence_information,
                        std::vector<int> participants_per_sequence, ModelForm form);

  static PopulationInformation build(std::span<const Sequence> sequences,
                                     std::span<const int> participants_per_sequence,
                                     int measurements_per_period, ModelForm form,
                                     const RandomEffectsSpec& re, const ResidualSpec& resid);

  ModelForm form() const noexcept { return form_; }
  std::size_t sequence_count() const noexcept { return info_.size(); }

  // C_theta (sum X' Sigma^{-1} X)^{-1} C_theta'.
  double var_treatment() const noexcept { return var_treatment_; }

  // Block of the inverse summed information on one participant's own
  // (intercept, treatment) coordinates for a participant on sequence i.
  Eigen::Matrix2d inverse_block(std::size_t i) const;

  // [1,a]' Sigma_i^{-1} [1,a] for one participant on sequence i.
  const Eigen::Matrix2d& sequence_information(std::size_t i) const { return info_.at(i); }

 private:
  std::vector<Eigen::Matrix2d> info_;
  std::vector<int> counts_;
  ModelForm form_;
  double var_treatment_ = 0.0;
  double profiled_total_ = 0.0;    // fixed intercepts: sum of Schur complements
  Eigen::Matrix2d inverse_ = Eigen::Matrix2d::Zero();  // random intercepts
};

double se_population(const BalancedDesign& design, ModelForm form, const RandomEffectsSpec& re,
                     const ResidualSpec& resid);

// Unbalanced variant: participants_per_sequence[i] participants on sequences[i].
double se_population(std::span<const Sequence> sequences, std::span<const int> participants_per_sequence,
                     int measurements_per_period, ModelForm form, const RandomEffectsSpec& re,
                     const ResidualSpec& resid);

// Two-sided power for detecting delta_min at standard error se.
double power(double se, const PowerRequirement& req);

// Largest standard error that still meets 1 - beta.
double critical_standard_error(const PowerRequirement& req);

// Standard error of the single-participant estimate; nullopt when the
// sequence lacks one of the treatments.
std::optional<double> se_naive(const Sequence& seq, int measurements_per_period, const ResidualSpec& resid);

struct ShrunkenTerms {
  double population = 0.0;  // C_theta V C_theta'
  double cross = 0.0;       // -2 C_theta V X' Sigma^{-1} Z D C_b'
  double prediction = 0.0;  // C_b Var(b_hat - b) C_b'

  double total() const noexcept { return population + cross + prediction; }
};

// Var(shrunken - true individual slope) for a participant on
// sequence target; requires random slopes (UnsupportedModelError otherwise).
ShrunkenTerms shrunken_terms(const PopulationInformation& info, std::size_t target,
                             const RandomEffectsSpec& re);

double var_shrunken(const BalancedDesign& design, std::size_t target_sequence, int target_participant,
                    ModelForm form, const RandomEffectsSpec& re, const ResidualSpec& resid);

struct IndividualSe {
  std::vector<double> per_sequence;
  Band band;
};

struct DesignEvaluation {
  double se_population = 0.0;
  double power = 0.0;
  // Present when individual-effect standard errors were requested.
  std::optional<std::vector<std::optional<double>>> naive_se;
  std::optional<Band> naive;  // over estimable sequences
  std::optional<IndividualSe> shrunken_fixed;   // Fixed-Random
  std::optional<IndividualSe> shrunken_random;  // Random-Random

  bool meets(const PowerRequirement& req) const noexcept { return power >= 1.0 - req.beta; }
};

// Population SE and power under setup.model; optionally naive and shrunken
// standard errors per sequence (shrunken under both random-slope forms).
DesignEvaluation evaluate_design(const BalancedDesign& design, const ModelSetup& setup,
                                 bool include_individual);

}  // namespace nof1
