#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nof1/design_search.hpp"

namespace nof1::io {

using nlohmann::json;

enum class Command { evaluate, search, sweep, sequences };

std::string_view to_string(Command c);

// Everything a run needs. Defaults are the reference parameter set:
// sigma^2 = 4, ar1 rho = 0.4, var_intercept = 4, var_slope = 1, cov = 1,
// alpha = .05, beta = .2, delta = 1, Fixed-Random, pairwise.
struct RunConfig {
  ModelSetup setup;
  RandomizationScheme scheme;

  // evaluate
  int K = 4;
  int J = 8;
  int L = 6;

  // search / designs
  FixedAxis fix = FixedAxis::participants;
  int value = 32;
  int range_lo = 1;
  int range_hi = 64;
  int other_lo = 1;  // drill-down range of the other product
  int other_hi = 48;
  std::optional<int> other;  // single drill-down value; overrides the range
  SearchBounds bounds;
  SearchStrategy strategy = SearchStrategy::linear;
  bool include_individual = true;
  bool optimize_y_only = false;
  std::optional<SeGrouping> grouping;  // defaults to the other product

  // sweep
  SweepParameter sweep_parameter = SweepParameter::var_intercept;
  std::vector<SweepValue> sweep_values{2.0, 4.0, 8.0};

  SearchConstraint constraint() const;
  SeGrouping resolved_grouping() const;
  // Checks everything the engine would reject, with field paths. Sweep
  // values are checked when the sweep runs.
  void validate() const;
};

// Overlays the keys present in `doc` onto `config`. Unknown keys, wrong
// types and out-of-domain values raise ParameterError naming the dotted path.
void merge_config(RunConfig& config, const json& doc);

json to_json(const RunConfig& config);

json to_json(const Band& b);
json to_json(const BalancedDesign& d);
json to_json(const DesignRow& row, bool include_individual);
json to_json(std::span<const DesignRow> rows, bool include_individual);
json to_json(const TotalCurve& curve, bool include_rows);
json to_json(std::span<const Series> series);
json sequences_json(std::span<const Sequence> seqs);

// %.6g, the CSV number format.
std::string format_number(double v);

// I,J,K,L,total,se_pop,power,naive_min,naive_mean,naive_max,shrunk_fixed,shrunk_random
std::string design_table_csv(std::span<const DesignRow> rows);

// x,series,y_min,y_mean,y_max. Gaps are omitted.
void append_curve_csv(std::string& out, const TotalCurve& curve, const std::string& series);
std::string curve_csv_header();
std::string series_csv(std::span<const Series> series);

// One sequence per line in the upload format.
std::string sequences_text(std::span<const Sequence> seqs);

}  // namespace nof1::io
