#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nof1 {

// Treatment assignment per period: 0 = reference, 1 = intervention.
// Every measurement inside a period shares the period's assignment.
class Sequence {
 public:
  Sequence() = default;
  explicit Sequence(std::vector<std::uint8_t> assignments);
  Sequence(std::initializer_list<int> assignments);

  std::size_t periods() const noexcept { return assignments_.size(); }
  std::size_t intervention_periods() const noexcept;
  std::size_t reference_periods() const noexcept { return periods() - intervention_periods(); }
  bool has_both_treatments() const noexcept;

  std::uint8_t operator[](std::size_t k) const { return assignments_[k]; }
  std::span<const std::uint8_t> assignments() const noexcept { return assignments_; }

  // Comma-separated 0/1 tokens, e.g. "1,0,1,0".
  std::string to_string() const;

  friend auto operator<=>(const Sequence&, const Sequence&) = default;
  friend bool operator==(const Sequence&, const Sequence&) = default;

 private:
  std::vector<std::uint8_t> assignments_;
};

enum class CorrelationStructure { independent, exchangeable, ar1 };

// Within-participant error model, identical for every participant.
struct ResidualSpec {
  double variance = 4.0;
  CorrelationStructure structure = CorrelationStructure::ar1;
  double correlation = 0.4;

  void validate() const;
};

// Between-participant variance parameters. Which entries enter D depends on
// the model form; the PSD condition is checked on the full 2x2 matrix.
struct RandomEffectsSpec {
  double var_intercept = 4.0;
  double var_slope = 1.0;
  double cov_intercept_slope = 1.0;

  void validate() const;
};

enum class InterceptForm { fixed, random };
enum class SlopeForm { common, random };

struct ModelForm {
  InterceptForm intercepts = InterceptForm::fixed;
  SlopeForm slopes = SlopeForm::random;

  bool fixed_intercepts() const noexcept { return intercepts == InterceptForm::fixed; }
  bool random_slopes() const noexcept { return slopes == SlopeForm::random; }

  // "Fixed-Common", "Fixed-Random", "Random-Common", "Random-Random".
  std::string name() const;

  friend bool operator==(const ModelForm&, const ModelForm&) = default;
};

inline constexpr ModelForm kFixedCommon{InterceptForm::fixed, SlopeForm::common};
inline constexpr ModelForm kFixedRandom{InterceptForm::fixed, SlopeForm::random};
inline constexpr ModelForm kRandomCommon{InterceptForm::random, SlopeForm::common};
inline constexpr ModelForm kRandomRandom{InterceptForm::random, SlopeForm::random};
inline constexpr ModelForm kAllModelForms[] = {kFixedCommon, kFixedRandom, kRandomCommon,
                                               kRandomRandom};

struct PowerRequirement {
  double alpha = 0.05;
  double beta = 0.2;
  double delta_min = 1.0;
  // Keep the Phi(-z - delta/se) term of the two-sided power.
  bool include_lower_tail = true;

  void validate() const;
};

// Everything needed to evaluate a design except the design itself.
struct ModelSetup {
  ModelForm model;
  RandomEffectsSpec random_effects;
  ResidualSpec residual;
  PowerRequirement requirement;

  void validate() const;
};

std::string_view to_string(CorrelationStructure s);
std::string_view to_string(InterceptForm f);
std::string_view to_string(SlopeForm f);
CorrelationStructure parse_correlation_structure(std::string_view text);
InterceptForm parse_intercept_form(std::string_view text);
SlopeForm parse_slope_form(std::string_view text);

// _OPENMP of the engine build, 0 when compiled without OpenMP.
int openmp_version() noexcept;

}  // namespace nof1
