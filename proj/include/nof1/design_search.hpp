#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nof1/design.hpp"
#include "nof1/estimation.hpp"
#include "nof1/sequences.hpp"
#include "nof1/types.hpp"

namespace nof1 {

// Which product is held fixed: K*L (then J is solved) or I*J (then L is solved).
enum class FixedAxis { measurements_per_participant, participants };
enum class SearchStrategy { linear, binary };

std::string_view to_string(FixedAxis axis);
FixedAxis parse_fixed_axis(std::string_view text);
std::string_view to_string(SearchStrategy s);
SearchStrategy parse_search_strategy(std::string_view text);

struct SearchBounds {
  int max_J = 1000;
  int max_L = 1000;
  // Largest K tried; only binding for alternating sequences under fixed I*J.
  int max_K = 24;
  // Period counts whose scheme yields more sequences than this are skipped.
  std::size_t max_sequences = 4096;

  void validate() const;
};

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

struct SearchConstraint {
  FixedAxis fix = FixedAxis::participants;
  int value = 32;
  SearchBounds bounds;
  ModelSetup setup;
  RandomizationScheme scheme;
  SearchStrategy strategy = SearchStrategy::linear;
  bool include_individual = true;
  Deadline deadline;

  void validate() const;
};

struct DesignRow {
  BalancedDesign design;
  DesignEvaluation evaluation;

  std::int64_t total() const noexcept { return design.total_measurements(); }
};

// Smallest J <= max_J meeting the power requirement with L fixed, or nullopt.
// Throws InestimableError when no J can identify the treatment effect.
std::optional<int> solve_min_participants(std::span<const Sequence> sequences, int measurements_per_period,
                                          const ModelSetup& setup, int max_J,
                                          SearchStrategy strategy = SearchStrategy::linear);

// Smallest L <= max_L with J fixed, or nullopt. Random-slope models whose
// sqrt(var_slope / (I J)) floor already fails the requirement return nullopt
// without scanning.
std::optional<int> solve_min_measurements(std::span<const Sequence> sequences, int participants_per_sequence,
                                          const ModelSetup& setup, int max_L,
                                          SearchStrategy strategy = SearchStrategy::linear);

// Every admissible split of the fixed product with its last component
// solved to the minimum. Infeasible splits are omitted; an empty result is
// valid. Rows are ordered by K.
std::vector<DesignRow> enumerate_designs_fixed_product(const SearchConstraint& constraint);

// Every design whose fixed product equals constraint.value, whose other
// product lies in [other_min, other_max], and which meets the requirement.
// Ordered by the other product, then K.
std::vector<DesignRow> enumerate_feasible_designs(const SearchConstraint& constraint, int other_min,
                                                  int other_max);

// True when the solved row is also minimal in the remaining free component
// (J for fixed I*J, L for fixed K*L).
bool is_optimized(const DesignRow& row, const SearchConstraint& constraint);

struct CurvePoint {
  int x = 0;
  std::vector<DesignRow> rows;
  std::optional<Band> total;  // empty marks a gap
};

struct TotalCurve {
  FixedAxis axis = FixedAxis::participants;
  std::vector<CurvePoint> points;
};

// Required total measurements I*J*K*L against the fixed product over
// [lo, hi]. Points are computed in parallel; the result does not depend on
// scheduling. With optimize_y_only the optimality filter is skipped.
TotalCurve optimize_total_measurements_curve(const SearchConstraint& base, int lo, int hi,
                                             bool optimize_y_only = false);

enum class SeGrouping { measurements_per_participant, periods, participants };

std::string_view to_string(SeGrouping g);

struct SeriesPoint {
  std::int64_t x = 0;
  Band band;
};

struct Series {
  std::string name;  // naive | shrunken_fixed | shrunken_random
  std::vector<SeriesPoint> points;
};

// Naive and shrunken (fixed- and random-intercept) standard errors grouped by
// the chosen design quantity. Bands span every sequence of every design in
// the group; the mean is the average of per-design means.
std::vector<Series> individual_se_curve(std::span<const DesignRow> designs, SeGrouping grouping);

enum class SweepParameter {
  alpha,
  beta,
  sigma2,
  rho,
  structure,
  var_slope,
  var_intercept,
  cov_intercept_slope,
  delta_min
};

std::string_view to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(std::string_view text);

using SweepValue = std::variant<double, CorrelationStructure>;

std::string format_sweep_value(const SweepValue& v);

// Copy of setup with one parameter replaced; validates the result.
ModelSetup apply_sweep_value(ModelSetup setup, SweepParameter parameter, const SweepValue& value);

struct SweepMember {
  SweepValue value;
  std::string label;  // e.g. "var_intercept=4"
  TotalCurve curve;
};

std::vector<SweepMember> parameter_sweep(SweepParameter parameter, std::span<const SweepValue> values,
                                         const SearchConstraint& base, int lo, int hi,
                                         bool optimize_y_only = false);

}  // namespace nof1
