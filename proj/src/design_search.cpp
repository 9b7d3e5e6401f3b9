#include "nof1/design_search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>

#include "nof1/errors.hpp"
#include "nof1/kernels.hpp"

namespace nof1 {

namespace {

void check_deadline(const Deadline& deadline) {
  if (deadline && std::chrono::steady_clock::now() > *deadline)
    throw TimeoutError("compute deadline exceeded");
}

// Smallest x in [1, max_x] with pass(x); pass must be monotone.
std::optional<int> first_passing(int max_x, SearchStrategy strategy, const std::function<bool(int)>& pass) {
  if (strategy == SearchStrategy::linear) {
    for (int x = 1; x <= max_x; ++x)
      if (pass(x)) return x;
    return std::nullopt;
  }
  if (!pass(max_x)) return std::nullopt;
  int lo = 1, hi = max_x;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (pass(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

bool meets(double var_treatment, const PowerRequirement& req) {
  return power(std::sqrt(var_treatment), req) >= 1.0 - req.beta;
}

struct Candidate {
  int K = 0;
  std::vector<Sequence> sequences;
};

bool admissible_periods(const RandomizationScheme& scheme, int K) {
  if (scheme.is_manual()) return static_cast<std::size_t>(K) == scheme.manual_sequences.front().periods();
  return !scheme.requires_even_periods() || K % 2 == 0;
}

// Period counts the scheme allows within the bounds, with their sequences.
// `accept(K, I)` filters before enumeration.
std::vector<Candidate> candidate_periods(const SearchConstraint& c, int max_K,
                                         const std::function<bool(int, std::uint64_t)>& accept) {
  std::vector<Candidate> out;
  for (int K = 1; K <= max_K; ++K) {
    if (!admissible_periods(c.scheme, K)) continue;
    const auto count = count_sequences(c.scheme, K);
    if (count > c.bounds.max_sequences || !accept(K, count)) continue;
    out.push_back({K, enumerate_sequences(c.scheme, K)});
  }
  return out;
}

DesignRow make_row(const SearchConstraint& c, std::vector<Sequence> sequences, int K, int J, int L) {
  BalancedDesign d{c.scheme.kind, std::move(sequences), J, K, L};
  auto ev = evaluate_design(d, c.setup, c.include_individual);
  return DesignRow{std::move(d), std::move(ev)};
}

}  // namespace

std::string_view to_string(FixedAxis axis) {
  return axis == FixedAxis::participants ? "participants" : "measurements_per_participant";
}

FixedAxis parse_fixed_axis(std::string_view text) {
  if (text == "participants" || text == "IJ") return FixedAxis::participants;
  if (text == "measurements_per_participant" || text == "measurements" || text == "KL")
    return FixedAxis::measurements_per_participant;
  throw ParameterError("fix", "expected 'participants' or 'measurements_per_participant'");
}

std::string_view to_string(SearchStrategy s) { return s == SearchStrategy::linear ? "linear" : "binary"; }

SearchStrategy parse_search_strategy(std::string_view text) {
  if (text == "linear") return SearchStrategy::linear;
  if (text == "binary") return SearchStrategy::binary;
  throw ParameterError("search.strategy", "expected 'linear' or 'binary'");
}

std::string_view to_string(SeGrouping g) {
  switch (g) {
    case SeGrouping::measurements_per_participant: return "measurements_per_participant";
    case SeGrouping::periods: return "periods";
    case SeGrouping::participants: return "participants";
  }
  return "?";
}

void SearchBounds::validate() const {
  if (max_J < 1) throw ParameterError("bounds.max_J", "must be at least 1");
  if (max_L < 1) throw ParameterError("bounds.max_L", "must be at least 1");
  if (max_K < 1) throw ParameterError("bounds.max_K", "must be at least 1");
  if (max_sequences < 1) throw ParameterError("bounds.max_sequences", "must be at least 1");
}

void SearchConstraint::validate() const {
  if (value < 1) throw ParameterError("search.value", "fixed product must be at least 1");
  bounds.validate();
  setup.validate();
  if (scheme.is_manual() && scheme.manual_sequences.empty())
    throw ParameterError("sequences", "manual scheme needs sequences");
}

std::optional<int> solve_min_participants(std::span<const Sequence> sequences, int measurements_per_period,
                                          const ModelSetup& setup, int max_J, SearchStrategy strategy) {
  setup.validate();
  if (max_J < 1) throw ParameterError("bounds.max_J", "must be at least 1");
  auto info = kernels::sequence_information(sequences, measurements_per_period, setup.residual,
                                            kernels::embedded_random_effects(setup.random_effects, setup.model));
  const auto pass = [&](int J) {
    const PopulationInformation pop(info, std::vector<int>(sequences.size(), J), setup.model);
    return meets(pop.var_treatment(), setup.requirement);
  };
  return first_passing(max_J, strategy, pass);
}

std::optional<int> solve_min_measurements(std::span<const Sequence> sequences, int participants_per_sequence,
                                          const ModelSetup& setup, int max_L, SearchStrategy strategy) {
  setup.validate();
  if (max_L < 1) throw ParameterError("bounds.max_L", "must be at least 1");
  if (participants_per_sequence < 1) throw ParameterError("design.J", "must be at least 1");
  const std::vector<int> counts(sequences.size(), participants_per_sequence);

  // Estimability does not depend on L; surface it before any floor shortcut.
  const auto at = [&](int L) {
    return PopulationInformation::build(sequences, counts, L, setup.model, setup.random_effects, setup.residual)
        .var_treatment();
  };
  const double var_at_one = at(1);

  if (setup.model.random_slopes() && setup.random_effects.var_slope > 0.0) {
    const double floor_var =
        setup.random_effects.var_slope / (static_cast<double>(sequences.size()) * participants_per_sequence);
    if (!meets(floor_var, setup.requirement)) return std::nullopt;
  }
  return first_passing(max_L, strategy,
                       [&](int L) { return meets(L == 1 ? var_at_one : at(L), setup.requirement); });
}

std::vector<DesignRow> enumerate_designs_fixed_product(const SearchConstraint& c) {
  c.validate();
  std::vector<DesignRow> rows;
  int candidates = 0, inestimable = 0;

  if (c.fix == FixedAxis::measurements_per_participant) {
    const int M = c.value;
    auto periods = candidate_periods(c, std::min(M, c.bounds.max_K), [&](int K, std::uint64_t) { return M % K == 0; });
    for (auto& cand : periods) {
      check_deadline(c.deadline);
      ++candidates;
      const int L = M / cand.K;
      try {
        const auto J = solve_min_participants(cand.sequences, L, c.setup, c.bounds.max_J, c.strategy);
        if (J) rows.push_back(make_row(c, std::move(cand.sequences), cand.K, *J, L));
      } catch (const InestimableError&) {
        ++inestimable;
      }
    }
  } else {
    const int P = c.value;
    auto periods = candidate_periods(c, c.bounds.max_K, [&](int, std::uint64_t I) {
      return I <= static_cast<std::uint64_t>(P) && P % static_cast<int>(I) == 0;
    });
    for (auto& cand : periods) {
      check_deadline(c.deadline);
      ++candidates;
      const int J = P / static_cast<int>(cand.sequences.size());
      try {
        const auto L = solve_min_measurements(cand.sequences, J, c.setup, c.bounds.max_L, c.strategy);
        if (L) rows.push_back(make_row(c, std::move(cand.sequences), cand.K, J, *L));
      } catch (const InestimableError&) {
        ++inestimable;
      }
    }
  }
  if (candidates > 0 && inestimable == candidates)
    throw InestimableError("delta", "treatment effect is not estimable for any admissible design");
  return rows;
}

std::vector<DesignRow> enumerate_feasible_designs(const SearchConstraint& c, int other_min, int other_max) {
  c.validate();
  if (other_min < 1 || other_max < other_min)
    throw ParameterError("search.other_range", "range must satisfy 1 <= min <= max");

  struct Keyed {
    std::int64_t other;
    DesignRow row;
  };
  std::vector<Keyed> found;

  const auto consider = [&](const std::vector<Sequence>& seqs, int K, int J, int L, std::int64_t other) {
    check_deadline(c.deadline);
    const std::vector<int> counts(seqs.size(), J);
    try {
      const auto pop =
          PopulationInformation::build(seqs, counts, L, c.setup.model, c.setup.random_effects, c.setup.residual);
      if (!meets(pop.var_treatment(), c.setup.requirement)) return;
    } catch (const InestimableError&) {
      return;
    }
    found.push_back({other, make_row(c, seqs, K, J, L)});
  };

  if (c.fix == FixedAxis::participants) {
    const int P = c.value;
    auto periods = candidate_periods(c, c.bounds.max_K, [&](int, std::uint64_t I) {
      return I <= static_cast<std::uint64_t>(P) && P % static_cast<int>(I) == 0;
    });
    for (const auto& cand : periods) {
      const int J = P / static_cast<int>(cand.sequences.size());
      for (int L = 1; L <= c.bounds.max_L && std::int64_t{cand.K} * L <= other_max; ++L)
        if (std::int64_t{cand.K} * L >= other_min) consider(cand.sequences, cand.K, J, L, std::int64_t{cand.K} * L);
    }
  } else {
    const int M = c.value;
    auto periods =
        candidate_periods(c, std::min(M, c.bounds.max_K), [&](int K, std::uint64_t) { return M % K == 0; });
    for (const auto& cand : periods) {
      const auto I = static_cast<std::int64_t>(cand.sequences.size());
      for (int J = 1; J <= c.bounds.max_J && I * J <= other_max; ++J)
        if (I * J >= other_min) consider(cand.sequences, cand.K, J, M / cand.K, I * J);
    }
  }

  std::stable_sort(found.begin(), found.end(), [](const Keyed& a, const Keyed& b) {
    return a.other != b.other ? a.other < b.other : a.row.design.K < b.row.design.K;
  });
  std::vector<DesignRow> rows;
  rows.reserve(found.size());
  for (auto& k : found) rows.push_back(std::move(k.row));
  return rows;
}

bool is_optimized(const DesignRow& row, const SearchConstraint& c) {
  const auto& d = row.design;
  const std::vector<int> counts(d.sequences.size(), 0);
  if (c.fix == FixedAxis::participants) {
    if (d.J == 1) return true;
    const std::vector<int> fewer(d.sequences.size(), d.J - 1);
    const auto pop = PopulationInformation::build(d.sequences, fewer, d.L, c.setup.model, c.setup.random_effects,
                                                  c.setup.residual);
    return !meets(pop.var_treatment(), c.setup.requirement);
  }
  if (d.L == 1) return true;
  const std::vector<int> same(d.sequences.size(), d.J);
  const auto pop = PopulationInformation::build(d.sequences, same, d.L - 1, c.setup.model, c.setup.random_effects,
                                                c.setup.residual);
  return !meets(pop.var_treatment(), c.setup.requirement);
}

TotalCurve optimize_total_measurements_curve(const SearchConstraint& base, int lo, int hi, bool optimize_y_only) {
  if (lo < 1 || hi < lo) throw ParameterError("curve.range", "range must satisfy 1 <= lo <= hi");
  base.bounds.validate();
  base.setup.validate();

  TotalCurve curve;
  curve.axis = base.fix;
  curve.points.resize(static_cast<std::size_t>(hi - lo + 1));
  std::vector<std::exception_ptr> errors(curve.points.size());

  const auto n = static_cast<std::ptrdiff_t>(curve.points.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    auto& pt = curve.points[static_cast<std::size_t>(idx)];
    pt.x = lo + static_cast<int>(idx);
    try {
      SearchConstraint c = base;
      c.value = pt.x;
      std::vector<DesignRow> rows;
      try {
        rows = enumerate_designs_fixed_product(c);
      } catch (const InestimableError&) {
      }
      for (auto& r : rows)
        if (optimize_y_only || is_optimized(r, c)) pt.rows.push_back(std::move(r));
      if (!pt.rows.empty()) {
        std::vector<double> totals;
        for (const auto& r : pt.rows) totals.push_back(static_cast<double>(r.total()));
        pt.total = Band::of(totals);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(idx)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return curve;
}

std::vector<Series> individual_se_curve(std::span<const DesignRow> designs, SeGrouping grouping) {
  if (designs.empty()) throw ParameterError("designs", "at least one design is required");

  const auto key_of = [&](const BalancedDesign& d) -> std::int64_t {
    switch (grouping) {
      case SeGrouping::measurements_per_participant: return d.measurements_per_participant();
      case SeGrouping::periods: return d.K;
      case SeGrouping::participants: return d.participants();
    }
    return 0;
  };

  struct Acc {
    std::vector<double> values;
    std::vector<double> design_means;
  };
  std::map<std::int64_t, Acc> naive, fixed, random;

  for (const auto& row : designs) {
    const auto key = key_of(row.design);
    const auto& ev = row.evaluation;
    if (ev.naive_se && ev.naive) {
      auto& acc = naive[key];
      for (const auto& v : *ev.naive_se)
        if (v) acc.values.push_back(*v);
      acc.design_means.push_back(ev.naive->mean);
    }
    if (ev.shrunken_fixed) {
      auto& acc = fixed[key];
      acc.values.insert(acc.values.end(), ev.shrunken_fixed->per_sequence.begin(),
                        ev.shrunken_fixed->per_sequence.end());
      acc.design_means.push_back(ev.shrunken_fixed->band.mean);
    }
    if (ev.shrunken_random) {
      auto& acc = random[key];
      acc.values.insert(acc.values.end(), ev.shrunken_random->per_sequence.begin(),
                        ev.shrunken_random->per_sequence.end());
      acc.design_means.push_back(ev.shrunken_random->band.mean);
    }
  }

  const auto to_series = [](std::string name, const std::map<std::int64_t, Acc>& groups) {
    Series s{std::move(name), {}};
    for (const auto& [x, acc] : groups) {
      const Band spread = Band::of(acc.values);
      const Band means = Band::of(acc.design_means);
      s.points.push_back({x, Band{spread.min, means.mean, spread.max}});
    }
    return s;
  };
  return {to_series("naive", naive), to_series("shrunken_fixed", fixed), to_series("shrunken_random", random)};
}

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::alpha: return "alpha";
    case SweepParameter::beta: return "beta";
    case SweepParameter::sigma2: return "sigma2";
    case SweepParameter::rho: return "rho";
    case SweepParameter::structure: return "structure";
    case SweepParameter::var_slope: return "var_slope";
    case SweepParameter::var_intercept: return "var_intercept";
    case SweepParameter::cov_intercept_slope: return "cov_intercept_slope";
    case SweepParameter::delta_min: return "delta_min";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(std::string_view text) {
  for (auto p : {SweepParameter::alpha, SweepParameter::beta, SweepParameter::sigma2, SweepParameter::rho,
                 SweepParameter::structure, SweepParameter::var_slope, SweepParameter::var_intercept,
                 SweepParameter::cov_intercept_slope, SweepParameter::delta_min})
    if (text == to_string(p)) return p;
  throw ParameterError("sweep.parameter", "unknown sweep parameter '" + std::string(text) + "'");
}

std::string format_sweep_value(const SweepValue& v) {
  if (const auto* s = std::get_if<CorrelationStructure>(&v)) return std::string(to_string(*s));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::get<double>(v));
  return buf;
}

ModelSetup apply_sweep_value(ModelSetup setup, SweepParameter parameter, const SweepValue& value) {
  if (parameter == SweepParameter::structure) {
    const auto* s = std::get_if<CorrelationStructure>(&value);
    if (!s) throw ParameterError("sweep.values", "structure sweeps take structure names");
    setup.residual.structure = *s;
  } else {
    const auto* x = std::get_if<double>(&value);
    if (!x) throw ParameterError("sweep.values", "numeric sweep values expected");
    switch (parameter) {
      case SweepParameter::alpha: setup.requirement.alpha = *x; break;
      case SweepParameter::beta: setup.requirement.beta = *x; break;
      case SweepParameter::sigma2: setup.residual.variance = *x; break;
      case SweepParameter::rho: setup.residual.correlation = *x; break;
      case SweepParameter::var_slope: setup.random_effects.var_slope = *x; break;
      case SweepParameter::var_intercept: setup.random_effects.var_intercept = *x; break;
      case SweepParameter::cov_intercept_slope: setup.random_effects.cov_intercept_slope = *x; break;
      case SweepParameter::delta_min: setup.requirement.delta_min = *x; break;
      case SweepParameter::structure: break;
    }
  }
  setup.validate();
  return setup;
}

std::vector<SweepMember> parameter_sweep(SweepParameter parameter, std::span<const SweepValue> values,
                                         const SearchConstraint& base, int lo, int hi, bool optimize_y_only) {
  if (values.empty()) throw ParameterError("sweep.values", "at least one value is required");
  std::vector<SearchConstraint> constraints;
  for (const auto& v : values) {
    SearchConstraint c = base;
    c.setup = apply_sweep_value(base.setup, parameter, v);
    constraints.push_back(std::move(c));
  }
  std::vector<SweepMember> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back({values[i], std::string(to_string(parameter)) + "=" + format_sweep_value(values[i]),
                   optimize_total_measurements_curve(constraints[i], lo, hi, optimize_y_only)});
  return out;
}

}  // namespace nof1
