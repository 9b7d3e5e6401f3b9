#include "nof1/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>

#include "nof1/errors.hpp"

namespace nof1::io {

namespace {

std::string join(const std::string& prefix, std::string_view key) {
  return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParameterError(path, "expected an object");
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& prefix) {
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ParameterError(join(prefix, key), "unknown field");
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParameterError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParameterError(path, "expected a finite number");
  return v;
}

int as_int(const json& j, const std::string& path) {
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      throw ParameterError(path, "integer out of range");
    return static_cast<int>(v);
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v == std::floor(v) && std::abs(v) < 2e9) return static_cast<int>(v);
  }
  throw ParameterError(path, "expected an integer");
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ParameterError(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParameterError(path, "expected a string");
  return j.get<std::string>();
}

// Parse a string-valued enum, re-labelling the library's field with `path`.
template <class F>
auto parse_at(const json& j, const std::string& path, F&& parse) {
  const auto text = as_string(j, path);
  try {
    return parse(text);
  } catch (const ParameterError&) {
    throw ParameterError(path, "invalid value '" + text + "'");
  }
}

template <class F>
void field(const json& obj, std::string_view key, const std::string& prefix, F&& apply) {
  if (const auto it = obj.find(key); it != obj.end()) apply(*it, join(prefix, key));
}

std::pair<int, int> as_range(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParameterError(path, "expected [lo, hi]");
  return {as_int(j[0], path + "[0]"), as_int(j[1], path + "[1]")};
}

ModelForm parse_model_name(const std::string& text, const std::string& path) {
  for (auto form : kAllModelForms)
    if (form.name() == text) return form;
  throw ParameterError(path, "expected one of Fixed-Common, Fixed-Random, Random-Common, Random-Random");
}

std::vector<Sequence> parse_sequences(const json& j, const std::string& path) {
  if (j.is_string()) return parse_sequence_file(j.get<std::string>());
  if (!j.is_array()) throw ParameterError(path, "expected a list of 0/1 lists or sequence-file text");
  std::vector<Sequence> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) throw ParameterError(p, "expected a list of 0/1 values");
    std::vector<std::uint8_t> a;
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      const int v = as_int(j[i][k], p + "[" + std::to_string(k) + "]");
      if (v != 0 && v != 1) throw ParameterError(p, "entries must be 0 or 1");
      a.push_back(static_cast<std::uint8_t>(v));
    }
    if (a.empty()) throw ParameterError(p, "sequence must have at least one period");
    out.emplace_back(std::move(a));
  }
  return out;
}

SweepValue parse_sweep_value(const json& j, SweepParameter p, const std::string& path) {
  if (p == SweepParameter::structure) return parse_at(j, path, parse_correlation_structure);
  return as_double(j, path);
}

json sweep_value_json(const SweepValue& v) {
  if (const auto* s = std::get_if<CorrelationStructure>(&v)) return std::string(to_string(*s));
  return std::get<double>(v);
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::evaluate: return "evaluate";
    case Command::search: return "search";
    case Command::sweep: return "sweep";
    case Command::sequences: return "sequences";
  }
  return "?";
}

SearchConstraint RunConfig::constraint() const {
  SearchConstraint c;
  c.fix = fix;
  c.value = value;
  c.bounds = bounds;
  c.setup = setup;
  c.scheme = scheme;
  c.strategy = strategy;
  c.include_individual = include_individual;
  return c;
}

SeGrouping RunConfig::resolved_grouping() const {
  if (grouping) return *grouping;
  return fix == FixedAxis::participants ? SeGrouping::measurements_per_participant : SeGrouping::participants;
}

void RunConfig::validate() const {
  setup.validate();
  bounds.validate();
  if (scheme.is_manual() && scheme.manual_sequences.empty())
    throw ParameterError("sequences", "a manual scheme needs sequences");
  if (K < 1) throw ParameterError("design.K", "must be at least 1");
  if (J < 1) throw ParameterError("design.J", "must be at least 1");
  if (L < 1) throw ParameterError("design.L", "must be at least 1");
  if (value < 1) throw ParameterError("search.value", "must be at least 1");
  if (range_lo < 1 || range_hi < range_lo) throw ParameterError("search.range", "expected 1 <= lo <= hi");
  if (other_lo < 1 || other_hi < other_lo) throw ParameterError("search.other_range", "expected 1 <= lo <= hi");
  if (other && *other < 1) throw ParameterError("search.other", "must be at least 1");
  if (sweep_values.empty()) throw ParameterError("sweep.values", "at least one value is required");
}

void merge_config(RunConfig& c, const json& doc) {
  expect_object(doc, "config");
  check_keys(doc,
             {"model", "residual", "random_effects", "requirement", "scheme", "sequences", "design", "search",
              "bounds", "sweep"},
             "");

  field(doc, "model", "", [&](const json& j, const std::string& p) {
    if (j.is_string()) {
      c.setup.model = parse_model_name(j.get<std::string>(), p);
      return;
    }
    expect_object(j, p);
    check_keys(j, {"intercepts", "slopes"}, p);
    field(j, "intercepts", p, [&](const json& v, const std::string& q) {
      c.setup.model.intercepts = parse_at(v, q, parse_intercept_form);
    });
    field(j, "slopes", p,
          [&](const json& v, const std::string& q) { c.setup.model.slopes = parse_at(v, q, parse_slope_form); });
  });

  field(doc, "residual", "", [&](const json& j, const std::string& p) {
    expect_object(j, p);
    check_keys(j, {"variance", "structure", "correlation"}, p);
    field(j, "variance", p, [&](const json& v, const std::string& q) { c.setup.residual.variance = as_double(v, q); });
    field(j, "structure", p, [&](const json& v, const std::string& q) {
      c.setup.residual.structure = parse_at(v, q, parse_correlation_structure);
    });
    field(j, "correlation", p,
          [&](const json& v, const std::string& q) { c.setup.residual.correlation = as_double(v, q); });
  });

  field(doc, "random_effects", "", [&](const json& j, const std::string& p) {
    expect_object(j, p);
    check_keys(j, {"var_intercept", "var_slope", "cov_intercept_slope"}, p);
    auto& re = c.setup.random_effects;
    field(j, "var_intercept", p, [&](const json& v, const std::string& q) { re.var_intercept = as_double(v, q); });
    field(j, "var_slope", p, [&](const json& v, const std::string& q) { re.var_slope = as_double(v, q); });
    field(j, "cov_intercept_slope", p,
          [&](const json& v, const std::string& q) { re.cov_intercept_slope = as_double(v, q); });
  });

  field(doc, "requirement", "", [&](const json& j, const std::string& p) {
    expect_object(j, p);
    check_keys(j, {"alpha", "beta", "delta_min", "include_lower_tail"}, p);
    auto& r = c.setup.requirement;
    field(j, "alpha", p, [&](const json& v, const std::string& q) { r.alpha = as_double(v, q); });
    field(j, "beta", p, [&](const json& v, const std::string& q) { r.beta = as_double(v, q); });
    field(j, "delta_min", p, [&](const json& v, const std::string& q) { r.delta_min = as_double(v, q); });
    field(j, "include_lower_tail", p,
          [&](const json& v, const std::string& q) { r.include_lower_tail = as_bool(v, q); });
  });

  field(doc, "scheme", "", [&](const json& j, const std::string& p) {
    const auto kind = parse_at(j, p, parse_scheme_kind);
    if (kind != SchemeKind::manual) c.scheme = {kind, {}};
    else c.scheme.kind = SchemeKind::manual;
  });
  field(doc, "sequences", "", [&](const json& j, const std::string& p) {
    if (c.scheme.kind != SchemeKind::manual && doc.contains("scheme"))
      throw ParameterError("scheme", "sequences require the manual scheme");
    c.scheme = RandomizationScheme::manual(parse_sequences(j, p));
  });

  field(doc, "design", "", [&](const json& j, const std::string& p) {
    expect_object(j, p);
    check_keys(j, {"K", "J", "L"}, p);
    field(j, "K", p, [&](const json& v, const std::string& q) { c.K = as_int(v, q); });
    field(j, "J", p, [&](const json& v, const std::string& q) { c.J = as_int(v, q); });
    field(j, "L", p, [&](const json& v, const std::string& q) { c.L = as_int(v, q); });
  });

  field(doc, "search", "", [&](const json& j, const std::string& p) {
    expect_object(j, p);
    check_keys(j,
               {"fix", "value", "range", "other", "other_range", "strategy", "include_individual", "optimize_y_only",
                "grouping"},
               p);
    field(j, "fix", p, [&](const json& v, const std::string& q) { c.fix = parse_at(v, q, parse_fixed_axis); });
    field(j, "value", p, [&](const json& v, const std::string& q) { c.value = as_int(v, q); });
    field(j, "range", p, [&](const json& v, const std::string& q) {
      std::tie(c.range_lo, c.range_hi) = as_range(v, q);
    });
    field(j, "other", p, [&](const json& v, const std::string& q) {
      if (v.is_null()) c.other.reset();
      else c.other = as_int(v, q);
    });
    field(j, "other_range", p, [&](const json& v, const std::string& q) {
      std::tie(c.other_lo, c.other_hi) = as_range(v, q);
    });
    field(j, "strategy", p,
          [&](const json& v, const std::string& q) { c.strategy = parse_at(v, q, parse_search_strategy); });
    field(j, "include_individual", p,
          [&](const json& v, const std::string& q) { c.include_individual = as_bool(v, q); });
    field(j, "optimize_y_only", p,
          [&](const json& v, const std::string& q) { c.optimize_y_only = as_bool(v, q); });
    field(j, "grouping", p, [&](const json& v, const std::string& q) {
      const auto text = as_string(v, q);
      for (auto g : {SeGrouping::measurements_per_participant, SeGrouping::periods, SeGrouping::participants})
        if (text == to_string(g)) {
          c.grouping = g;
          return;
        }
      throw ParameterError(q, "expected measurements_per_participant, periods or participants");
    });
  });

  field(doc, "bounds", "", [&](const json& j, const std::string& p) {
    expect_object(j, p);
    check_keys(j, {"max_J", "max_L", "max_K", "max_sequences"}, p);
    field(j, "max_J", p, [&](const json& v, const std::string& q) { c.bounds.max_J = as_int(v, q); });
    field(j, "max_L", p, [&](const json& v, const std::string& q) { c.bounds.max_L = as_int(v, q); });
    field(j, "max_K", p, [&](const json& v, const std::string& q) { c.bounds.max_K = as_int(v, q); });
    field(j, "max_sequences", p, [&](const json& v, const std::string& q) {
      const int n = as_int(v, q);
      if (n < 1) throw ParameterError(q, "must be at least 1");
      c.bounds.max_sequences = static_cast<std::size_t>(n);
    });
  });

  field(doc, "sweep", "", [&](const json& j, const std::string& p) {
    expect_object(j, p);
    check_keys(j, {"parameter", "values"}, p);
    field(j, "parameter", p,
          [&](const json& v, const std::string& q) { c.sweep_parameter = parse_at(v, q, parse_sweep_parameter); });
    // Values are read after the parameter so structure names parse correctly.
    field(j, "values", p, [&](const json& v, const std::string& q) {
      if (!v.is_array() || v.empty()) throw ParameterError(q, "expected a nonempty list");
      c.sweep_values.clear();
      for (std::size_t i = 0; i < v.size(); ++i)
        c.sweep_values.push_back(parse_sweep_value(v[i], c.sweep_parameter, q + "[" + std::to_string(i) + "]"));
    });
  });
}

json to_json(const RunConfig& c) {
  json doc;
  doc["model"] = {{"intercepts", to_string(c.setup.model.intercepts)},
                  {"slopes", to_string(c.setup.model.slopes)}};
  doc["residual"] = {{"variance", c.setup.residual.variance},
                     {"structure", to_string(c.setup.residual.structure)},
                     {"correlation", c.setup.residual.correlation}};
  doc["random_effects"] = {{"var_intercept", c.setup.random_effects.var_intercept},
                           {"var_slope", c.setup.random_effects.var_slope},
                           {"cov_intercept_slope", c.setup.random_effects.cov_intercept_slope}};
  doc["requirement"] = {{"alpha", c.setup.requirement.alpha},
                        {"beta", c.setup.requirement.beta},
                        {"delta_min", c.setup.requirement.delta_min},
                        {"include_lower_tail", c.setup.requirement.include_lower_tail}};
  doc["scheme"] = to_string(c.scheme.kind);
  if (c.scheme.is_manual()) doc["sequences"] = sequences_json(c.scheme.manual_sequences)["sequences"];
  doc["design"] = {{"K", c.K}, {"J", c.J}, {"L", c.L}};
  doc["search"] = {{"fix", to_string(c.fix)},
                   {"value", c.value},
                   {"range", {c.range_lo, c.range_hi}},
                   {"other", c.other ? json(*c.other) : json(nullptr)},
                   {"other_range", {c.other_lo, c.other_hi}},
                   {"strategy", to_string(c.strategy)},
                   {"include_individual", c.include_individual},
                   {"optimize_y_only", c.optimize_y_only},
                   {"grouping", to_string(c.resolved_grouping())}};
  doc["bounds"] = {{"max_J", c.bounds.max_J},
                   {"max_L", c.bounds.max_L},
                   {"max_K", c.bounds.max_K},
                   {"max_sequences", c.bounds.max_sequences}};
  json values = json::array();
  for (const auto& v : c.sweep_values) values.push_back(sweep_value_json(v));
  doc["sweep"] = {{"parameter", to_string(c.sweep_parameter)}, {"values", values}};
  return doc;
}

json to_json(const Band& b) { return {{"min", b.min}, {"mean", b.mean}, {"max", b.max}}; }

json to_json(const BalancedDesign& d) {
  return {{"I", d.I()},
          {"J", d.J},
          {"K", d.K},
          {"L", d.L},
          {"participants", d.participants()},
          {"measurements_per_participant", d.measurements_per_participant()},
          {"total", d.total_measurements()},
          {"scheme", to_string(d.scheme)},
          {"sequences", sequences_json(d.sequences)["sequences"]}};
}

json to_json(const DesignRow& row, bool include_individual) {
  json j = to_json(row.design);
  const auto& ev = row.evaluation;
  j["se_pop"] = ev.se_population;
  j["power"] = ev.power;
  if (!include_individual) return j;
  json naive = json::array();
  if (ev.naive_se)
    for (const auto& v : *ev.naive_se) naive.push_back(v ? json(*v) : json(nullptr));
  j["naive_se"] = naive;
  j["naive"] = ev.naive ? to_json(*ev.naive) : json(nullptr);
  const auto series = [](const std::optional<IndividualSe>& s) {
    if (!s) return json(nullptr);
    return json{{"per_sequence", s->per_sequence}, {"band", to_json(s->band)}};
  };
  j["shrunken_fixed"] = series(ev.shrunken_fixed);
  j["shrunken_random"] = series(ev.shrunken_random);
  return j;
}

json to_json(std::span<const DesignRow> rows, bool include_individual) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(to_json(r, include_individual));
  return out;
}

json to_json(const TotalCurve& curve, bool include_rows) {
  json points = json::array();
  for (const auto& p : curve.points) {
    json pt{{"x", p.x}, {"total", p.total ? to_json(*p.total) : json(nullptr)}};
    if (include_rows) pt["rows"] = to_json(p.rows, false);
    points.push_back(std::move(pt));
  }
  return {{"axis", to_string(curve.axis)}, {"points", points}};
}

json to_json(std::span<const Series> series) {
  json out = json::array();
  for (const auto& s : series) {
    json pts = json::array();
    for (const auto& p : s.points) {
      json pt = to_json(p.band);
      pt["x"] = p.x;
      pts.push_back(std::move(pt));
    }
    out.push_back({{"name", s.name}, {"points", pts}});
  }
  return out;
}

json sequences_json(std::span<const Sequence> seqs) {
  json list = json::array();
  for (const auto& s : seqs) {
    json row = json::array();
    for (auto a : s.assignments()) row.push_back(static_cast<int>(a));
    list.push_back(std::move(row));
  }
  return {{"count", seqs.size()}, {"K", seqs.empty() ? 0 : seqs.front().periods()}, {"sequences", list}};
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string design_table_csv(std::span<const DesignRow> rows) {
  std::string out = "I,J,K,L,total,se_pop,power,naive_min,naive_mean,naive_max,shrunk_fixed,shrunk_random\n";
  for (const auto& r : rows) {
    const auto& d = r.design;
    const auto& ev = r.evaluation;
    out += std::to_string(d.I()) + "," + std::to_string(d.J) + "," + std::to_string(d.K) + "," +
           std::to_string(d.L) + "," + std::to_string(r.total()) + "," + format_number(ev.se_population) + "," +
           format_number(ev.power) + ",";
    if (ev.naive)
      out += format_number(ev.naive->min) + "," + format_number(ev.naive->mean) + "," + format_number(ev.naive->max);
    else
      out += ",,";
    out += ",";
    out += optional_number(ev.shrunken_fixed ? std::optional(ev.shrunken_fixed->band.mean) : std::nullopt);
    out += ",";
    out += optional_number(ev.shrunken_random ? std::optional(ev.shrunken_random->band.mean) : std::nullopt);
    out += "\n";
  }
  return out;
}

std::string curve_csv_header() { return "x,series,y_min,y_mean,y_max\n"; }

void append_curve_csv(std::string& out, const TotalCurve& curve, const std::string& series) {
  for (const auto& p : curve.points) {
    if (!p.total) continue;
    out += std::to_string(p.x) + "," + series + "," + format_number(p.total->min) + "," +
           format_number(p.total->mean) + "," + format_number(p.total->max) + "\n";
  }
}

std::string series_csv(std::span<const Series> series) {
  std::string out = curve_csv_header();
  for (const auto& s : series)
    for (const auto& p : s.points)
      out += std::to_string(p.x) + "," + s.name + "," + format_number(p.band.min) + "," +
             format_number(p.band.mean) + "," + format_number(p.band.max) + "\n";
  return out;
}

std::string sequences_text(std::span<const Sequence> seqs) {
  std::string out;
  for (const auto& s : seqs) out += s.to_string() + "\n";
  return out;
}

}  // namespace nof1::io
