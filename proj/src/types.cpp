#include "nof1/types.hpp"

#include <algorithm>
#include <cmath>

#include "nof1/errors.hpp"

namespace nof1 {

Sequence::Sequence(std::vector<std::uint8_t> assignments) : assignments_(std::move(assignments)) {
  if (assignments_.empty()) throw ParameterError("sequence", "a sequence needs at least one period");
  for (auto a : assignments_)
    if (a > 1) throw ParameterError("sequence", "treatment indicators must be 0 or 1");
}

Sequence::Sequence(std::initializer_list<int> assignments)
    : Sequence([&] {
        std::vector<std::uint8_t> v;
        v.reserve(assignments.size());
        for (int a : assignments) {
          if (a != 0 && a != 1) throw ParameterError("sequence", "treatment indicators must be 0 or 1");
          v.push_back(static_cast<std::uint8_t>(a));
        }
        return v;
      }()) {}

std::size_t Sequence::intervention_periods() const noexcept {
  return static_cast<std::size_t>(std::count(assignments_.begin(), assignments_.end(), 1));
}

bool Sequence::has_both_treatments() const noexcept {
  const auto ones = intervention_periods();
  return ones > 0 && ones < periods();
}

std::string Sequence::to_string() const {
  std::string out;
  out.reserve(2 * assignments_.size());
  for (std::size_t k = 0; k < assignments_.size(); ++k) {
    if (k) out.push_back(',');
    out.push_back(assignments_[k] ? '1' : '0');
  }
  return out;
}

void ResidualSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw ParameterError("residual.variance", "must be a positive finite number");
  if (structure == CorrelationStructure::independent) return;
  if (!std::isfinite(correlation) || !(std::abs(correlation) < 1.0))
    throw ParameterError("residual.correlation", "must lie strictly between -1 and 1");
  if (structure == CorrelationStructure::exchangeable && correlation < 0.0)
    throw ParameterError("residual.correlation", "exchangeable correlation must be in [0, 1)");
}

void RandomEffectsSpec::validate() const {
  if (!(var_intercept >= 0.0) || !std::isfinite(var_intercept))
    throw ParameterError("random_effects.var_intercept", "must be a nonnegative finite number");
  if (!(var_slope >= 0.0) || !std::isfinite(var_slope))
    throw ParameterError("random_effects.var_slope", "must be a nonnegative finite number");
  if (!std::isfinite(cov_intercept_slope))
    throw ParameterError("random_effects.cov_intercept_slope", "must be finite");
  // Relative slack so that a perfectly correlated D (cov^2 == product) passes.
  const double bound = var_intercept * var_slope;
  if (cov_intercept_slope * cov_intercept_slope > bound * (1.0 + 1e-12))
    throw ParameterError("random_effects.cov_intercept_slope",
                         "squared covariance exceeds var_intercept * var_slope; D is not positive semidefinite");
}

std::string ModelForm::name() const {
  std::string out = fixed_intercepts() ? "Fixed" : "Random";
  out += random_slopes() ? "-Random" : "-Common";
  return out;
}

void PowerRequirement::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("requirement.alpha", "must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("requirement.beta", "must lie in (0, 1)");
  if (!(alpha + beta < 1.0))
    throw ParameterError("requirement.beta", "alpha + beta must be below 1");
  if (!std::isfinite(delta_min) || delta_min == 0.0)
    throw ParameterError("requirement.delta_min", "must be a nonzero finite number");
}

void ModelSetup::validate() const {
  random_effects.validate();
  residual.validate();
  requirement.validate();
}

std::string_view to_string(CorrelationStructure s) {
  switch (s) {
    case CorrelationStructure::independent: return "independent";
    case CorrelationStructure::exchangeable: return "exchangeable";
    case CorrelationStructure::ar1: return "ar1";
  }
  return "?";
}

std::string_view to_string(InterceptForm f) { return f == InterceptForm::fixed ? "fixed" : "random"; }
std::string_view to_string(SlopeForm f) { return f == SlopeForm::common ? "common" : "random"; }

CorrelationStructure parse_correlation_structure(std::string_view text) {
  if (text == "independent") return CorrelationStructure::independent;
  if (text == "exchangeable") return CorrelationStructure::exchangeable;
  if (text == "ar1" || text == "AR1" || text == "ar-1") return CorrelationStructure::ar1;
  throw ParameterError("residual.structure",
                       "unknown structure '" + std::string(text) + "' (independent|exchangeable|ar1)");
}

InterceptForm parse_intercept_form(std::string_view text) {
  if (text == "fixed") return InterceptForm::fixed;
  if (text == "random") return InterceptForm::random;
  throw ParameterError("model.intercepts", "expected 'fixed' or 'random'");
}

SlopeForm parse_slope_form(std::string_view text) {
  if (text == "common") return SlopeForm::common;
  if (text == "random") return SlopeForm::random;
  throw ParameterError("model.slopes", "expected 'common' or 'random'");
}

int openmp_version() noexcept {
#ifdef _OPENMP
  return _OPENMP;
#else
  return 0;
#endif
}

}  // namespace nof1
