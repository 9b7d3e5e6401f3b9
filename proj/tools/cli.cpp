#include "nof1/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "montecarlo.hpp"
#include "nof1/errors.hpp"
#include "nof1/io.hpp"

namespace nof1::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

struct Common {
  std::string config_path;
  std::string out_dir;
  std::string format = "csv";
  std::uint64_t seed = 1;
  int simulate = 0;

  // Overrides. Each is applied only when given on the command line.
  std::string model, intercepts, slopes, structure, scheme, sequences_file, fix, strategy, grouping, parameter;
  double sigma2 = 0, rho = 0, var_intercept = 0, var_slope = 0, cov = 0, alpha = 0, beta = 0, delta = 0;
  int K = 0, J = 0, L = 0, value = 0, other = 0, max_J = 0, max_L = 0, max_K = 0, max_sequences = 0;
  std::vector<int> range, other_range;
  std::vector<std::string> values;
  bool y_only = false, no_individual = false, drop_lower_tail = false;

  // One handle per subcommand for each override name.
  std::map<std::string, std::vector<CLI::Option*>> opts;
};

void add_options(CLI::App* app, Common& c) {
  auto& o = c.opts;
  app->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--out", c.out_dir, "output directory (default: main table to stdout)");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--seed", c.seed, "seed for --simulate");

  o["model"].push_back(app->add_option("--model", c.model, "Fixed-Common | Fixed-Random | Random-Common | Random-Random"));
  o["intercepts"].push_back(app->add_option("--intercepts", c.intercepts, "fixed | random"));
  o["slopes"].push_back(app->add_option("--slopes", c.slopes, "common | random"));
  o["sigma2"].push_back(app->add_option("--sigma2", c.sigma2, "residual variance"));
  o["structure"].push_back(app->add_option("--structure", c.structure, "independent | exchangeable | ar1"));
  o["rho"].push_back(app->add_option("--rho", c.rho, "residual correlation"));
  o["var_intercept"].push_back(app->add_option("--var-intercept", c.var_intercept, "random intercept variance"));
  o["var_slope"].push_back(app->add_option("--var-slope", c.var_slope, "random slope variance"));
  o["cov"].push_back(app->add_option("--cov", c.cov, "intercept/slope covariance"));
  o["alpha"].push_back(app->add_option("--alpha", c.alpha, "type I error"));
  o["beta"].push_back(app->add_option("--beta", c.beta, "type II error"));
  o["delta"].push_back(app->add_option("--delta", c.delta, "minimal clinically important effect"));
  o["drop_lower_tail"].push_back(app->add_flag("--drop-lower-tail", c.drop_lower_tail, "ignore the small power term"));
  o["scheme"].push_back(app->add_option("--scheme", c.scheme, "alternating | pairwise | restricted | unrestricted"));
  o["sequences_file"].push_back(
      app->add_option("--sequences-file", c.sequences_file, "manual sequences, one per line")->check(CLI::ExistingFile));
  o["K"].push_back(app->add_option("--K", c.K, "periods per sequence"));
  o["J"].push_back(app->add_option("--J", c.J, "participants per sequence"));
  o["L"].push_back(app->add_option("--L", c.L, "measurements per period"));
  o["fix"].push_back(app->add_option("--fix", c.fix, "participants | measurements_per_participant"));
  o["value"].push_back(app->add_option("--value", c.value, "fixed product value"));
  o["range"].push_back(app->add_option("--range", c.range, "curve range LO HI")->expected(2));
  o["other"].push_back(app->add_option("--other", c.other, "drill-down value of the other product"));
  o["other_range"].push_back(app->add_option("--other-range", c.other_range, "drill-down range LO HI")->expected(2));
  o["strategy"].push_back(app->add_option("--strategy", c.strategy, "linear | binary"));
  o["grouping"].push_back(app->add_option("--grouping", c.grouping, "individual-SE grouping"));
  o["y_only"].push_back(app->add_flag("--y-only", c.y_only, "skip the optimality filter"));
  o["no_individual"].push_back(app->add_flag("--no-individual", c.no_individual, "omit individual-effect SEs"));
  o["max_J"].push_back(app->add_option("--max-J", c.max_J, "search bound on J"));
  o["max_L"].push_back(app->add_option("--max-L", c.max_L, "search bound on L"));
  o["max_K"].push_back(app->add_option("--max-K", c.max_K, "search bound on K"));
  o["max_sequences"].push_back(app->add_option("--max-sequences", c.max_sequences, "skip K with more sequences"));
  o["parameter"].push_back(app->add_option("--parameter", c.parameter, "sweep parameter"));
  o["values"].push_back(app->add_option("--values", c.values, "sweep values"));
}

bool given(const Common& c, const std::string& name) {
  const auto it = c.opts.find(name);
  if (it == c.opts.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [](const CLI::Option* o) { return o->count() > 0; });
}

std::string read_file(const std::string& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError(field, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flags become a JSON overlay so they go through the same validation as files.
json flag_overlay(const Common& c) {
  json doc = json::object();
  if (given(c, "model")) doc["model"] = c.model;
  if (given(c, "intercepts")) doc["model"]["intercepts"] = c.intercepts;
  if (given(c, "slopes")) doc["model"]["slopes"] = c.slopes;
  if (given(c, "sigma2")) doc["residual"]["variance"] = c.sigma2;
  if (given(c, "structure")) doc["residual"]["structure"] = c.structure;
  if (given(c, "rho")) doc["residual"]["correlation"] = c.rho;
  if (given(c, "var_intercept")) doc["random_effects"]["var_intercept"] = c.var_intercept;
  if (given(c, "var_slope")) doc["random_effects"]["var_slope"] = c.var_slope;
  if (given(c, "cov")) doc["random_effects"]["cov_intercept_slope"] = c.cov;
  if (given(c, "alpha")) doc["requirement"]["alpha"] = c.alpha;
  if (given(c, "beta")) doc["requirement"]["beta"] = c.beta;
  if (given(c, "delta")) doc["requirement"]["delta_min"] = c.delta;
  if (given(c, "drop_lower_tail")) doc["requirement"]["include_lower_tail"] = false;
  if (given(c, "scheme")) doc["scheme"] = c.scheme;
  if (given(c, "sequences_file")) {
    doc["scheme"] = "manual";
    doc["sequences"] = read_file(c.sequences_file, "sequences");
  }
  if (given(c, "K")) doc["design"]["K"] = c.K;
  if (given(c, "J")) doc["design"]["J"] = c.J;
  if (given(c, "L")) doc["design"]["L"] = c.L;
  if (given(c, "fix")) doc["search"]["fix"] = c.fix;
  if (given(c, "value")) doc["search"]["value"] = c.value;
  if (given(c, "range")) doc["search"]["range"] = c.range;
  if (given(c, "other")) doc["search"]["other"] = c.other;
  if (given(c, "other_range")) doc["search"]["other_range"] = c.other_range;
  if (given(c, "strategy")) doc["search"]["strategy"] = c.strategy;
  if (given(c, "grouping")) doc["search"]["grouping"] = c.grouping;
  if (given(c, "y_only")) doc["search"]["optimize_y_only"] = true;
  if (given(c, "no_individual")) doc["search"]["include_individual"] = false;
  if (given(c, "max_J")) doc["bounds"]["max_J"] = c.max_J;
  if (given(c, "max_L")) doc["bounds"]["max_L"] = c.max_L;
  if (given(c, "max_K")) doc["bounds"]["max_K"] = c.max_K;
  if (given(c, "max_sequences")) doc["bounds"]["max_sequences"] = c.max_sequences;
  if (given(c, "parameter")) doc["sweep"]["parameter"] = c.parameter;
  if (given(c, "values")) {
    json values = json::array();
    for (const auto& v : c.values) {
      try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        values.push_back(used == v.size() ? json(x) : json(v));
      } catch (const std::exception&) {
        values.push_back(v);
      }
    }
    doc["sweep"]["values"] = values;
  }
  return doc;
}

io::RunConfig resolve(const Common& c) {
  io::RunConfig config;
  if (!c.config_path.empty()) {
    json file;
    try {
      file = json::parse(read_file(c.config_path, "config"));
    } catch (const json::parse_error& e) {
      throw ParameterError("config", std::string("invalid JSON: ") + e.what());
    }
    io::merge_config(config, file);
  }
  io::merge_config(config, flag_overlay(c));
  config.validate();
  return config;
}

class Sink {
 public:
  Sink(const Common& c, std::ostream& out) : dir_(c.out_dir), json_(c.format == "json"), out_(out) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }

  bool json_format() const { return json_; }

  // Writes `name.ext`; the primary output also goes to stdout when no
  // directory was given.
  void write(const std::string& name, const std::string& content, bool primary) {
    if (dir_.empty()) {
      if (primary) out_ << content;
      return;
    }
    std::ofstream f(fs::path(dir_) / (name + (json_ ? ".json" : ".csv")), std::ios::binary);
    if (!f) throw ParameterError("out", "cannot write to '" + dir_ + "'");
    f << content;
  }

 private:
  std::string dir_;
  bool json_;
  std::ostream& out_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<Sequence> design_sequences(const io::RunConfig& config, int& K) {
  if (config.scheme.is_manual()) {
    K = static_cast<int>(config.scheme.manual_sequences.front().periods());
    return config.scheme.manual_sequences;
  }
  if (count_sequences(config.scheme, K) > config.bounds.max_sequences)
    throw TooLargeError("design.K", std::to_string(count_sequences(config.scheme, K)) +
                                        " sequences exceed bounds.max_sequences; upload sequences instead");
  return enumerate_sequences(config.scheme, K);
}

montecarlo::Config simulation_config(const io::RunConfig& config, const BalancedDesign& d, int replicates,
                                     std::uint64_t seed) {
  montecarlo::Config m;
  for (const auto& s : d.sequences) m.sequences.emplace_back(s.assignments().begin(), s.assignments().end());
  m.J = d.J;
  m.L = d.L;
  m.fixed_intercepts = config.setup.model.fixed_intercepts();
  m.random_slopes = config.setup.model.random_slopes();
  m.sigma2 = config.setup.residual.variance;
  m.structure = static_cast<montecarlo::Structure>(config.setup.residual.structure);
  m.rho = config.setup.residual.correlation;
  m.var_intercept = config.setup.random_effects.var_intercept;
  m.var_slope = config.setup.random_effects.var_slope;
  m.cov_intercept_slope = config.setup.random_effects.cov_intercept_slope;
  m.delta = config.setup.requirement.delta_min;
  m.replicates = replicates;
  m.seed = seed;
  return m;
}

int cmd_evaluate(const Common& c, std::ostream& out) {
  const auto config = resolve(c);
  int K = config.K;
  auto seqs = design_sequences(config, K);
  const BalancedDesign design{config.scheme.kind, std::move(seqs), config.J, K, config.L};
  const DesignRow row{design, evaluate_design(design, config.setup, config.include_individual)};
  const std::vector<DesignRow> rows{row};

  Sink sink(c, out);
  if (sink.json_format()) {
    json doc{{"parameters", io::to_json(config)}, {"design", io::to_json(row, config.include_individual)}};
    if (c.simulate > 0) {
      const auto sim = montecarlo::simulate(simulation_config(config, design, c.simulate, c.seed));
      doc["simulation"] = {{"replicates", c.simulate},
                           {"seed", c.seed},
                           {"mean_delta", sim.mean_delta},
                           {"sd_delta", sim.sd_delta},
                           {"sd_shrunken", sim.sd_shrunken}};
    }
    sink.write("evaluation", dump(doc), true);
    return 0;
  }
  sink.write("evaluation", io::design_table_csv(rows), true);
  if (c.simulate > 0) {
    const auto sim = montecarlo::simulate(simulation_config(config, design, c.simulate, c.seed));
    std::string csv = "quantity,analytic,simulated\n";
    csv += "se_pop," + io::format_number(row.evaluation.se_population) + "," + io::format_number(sim.sd_delta) + "\n";
    const auto& shrunk = config.setup.model.fixed_intercepts() ? row.evaluation.shrunken_fixed
                                                               : row.evaluation.shrunken_random;
    if (shrunk && config.setup.model.random_slopes())
      for (std::size_t i = 0; i < sim.sd_shrunken.size(); ++i)
        csv += "shrunken_seq" + std::to_string(i + 1) + "," + io::format_number(shrunk->per_sequence[i]) + "," +
               io::format_number(sim.sd_shrunken[i]) + "\n";
    sink.write("simulation", csv, true);
  }
  return 0;
}

int cmd_search(const Common& c, std::ostream& out) {
  const auto config = resolve(c);
  const auto constraint = config.constraint();
  const auto curve =
      optimize_total_measurements_curve(constraint, config.range_lo, config.range_hi, config.optimize_y_only);

  std::vector<DesignRow> designs;
  for (auto& r : enumerate_designs_fixed_product(constraint))
    if (config.optimize_y_only || is_optimized(r, constraint)) designs.push_back(std::move(r));

  const int lo = config.other.value_or(config.other_lo);
  const int hi = config.other.value_or(config.other_hi);
  const auto feasible = enumerate_feasible_designs(constraint, lo, hi);
  std::vector<Series> individual;
  if (config.include_individual && !feasible.empty())
    individual = individual_se_curve(feasible, config.resolved_grouping());

  Sink sink(c, out);
  if (sink.json_format()) {
    json doc{{"parameters", io::to_json(config)},
             {"curve", io::to_json(curve, false)},
             {"designs", io::to_json(designs, config.include_individual)},
             {"feasible", io::to_json(feasible, config.include_individual)}};
    if (config.include_individual) doc["individual_se"] = io::to_json(individual);
    sink.write("search", dump(doc), true);
  } else {
    std::string curve_csv = io::curve_csv_header();
    io::append_curve_csv(curve_csv, curve, "total");
    sink.write("designs", io::design_table_csv(designs), true);
    sink.write("curve", curve_csv, false);
    sink.write("feasible", io::design_table_csv(feasible), false);
    if (config.include_individual) sink.write("individual_se", io::series_csv(individual), false);
  }

  const bool any_curve =
      std::any_of(curve.points.begin(), curve.points.end(), [](const CurvePoint& p) { return p.total.has_value(); });
  if (!any_curve && designs.empty() && feasible.empty()) throw InfeasibleError("no design meets the requirement");
  return 0;
}

std::string file_label(std::string label) {
  for (auto& ch : label)
    if (ch == '=' || ch == '.' || ch == '-') ch = '_';
  return label;
}

int cmd_sweep(const Common& c, std::ostream& out) {
  const auto config = resolve(c);
  const auto members = parameter_sweep(config.sweep_parameter, config.sweep_values, config.constraint(),
                                       config.range_lo, config.range_hi, config.optimize_y_only);
  Sink sink(c, out);
  bool any = false;
  if (sink.json_format()) {
    json list = json::array();
    for (const auto& m : members) {
      json curve = io::to_json(m.curve, true);
      curve["label"] = m.label;
      list.push_back(std::move(curve));
    }
    sink.write("sweep", dump({{"parameters", io::to_json(config)}, {"curves", list}}), true);
  } else {
    std::string csv = io::curve_csv_header();
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& m = members[i];
      io::append_curve_csv(csv, m.curve, m.label);
      std::vector<DesignRow> rows;
      for (const auto& p : m.curve.points) rows.insert(rows.end(), p.rows.begin(), p.rows.end());
      sink.write("designs_" + file_label(m.label), io::design_table_csv(rows), false);
    }
    sink.write("sweep", csv, true);
  }
  for (const auto& m : members)
    for (const auto& p : m.curve.points) any = any || p.total.has_value();
  if (!any) throw InfeasibleError("no design meets the requirement for any sweep value");
  return 0;
}

int cmd_sequences(const Common& c, std::ostream& out) {
  const auto config = resolve(c);
  int K = config.K;
  const auto seqs = design_sequences(config, K);
  Sink sink(c, out);
  if (sink.json_format()) {
    json doc = io::sequences_json(seqs);
    doc["scheme"] = to_string(config.scheme.kind);
    sink.write("sequences", dump(doc), true);
  } else {
    sink.write("sequences", io::sequences_text(seqs), true);
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design calculations for series of n-of-1 trials", "nof1"};
  app.require_subcommand(1);
  Common common;
  auto* evaluate = app.add_subcommand("evaluate", "standard errors and power of one design");
  auto* search = app.add_subcommand("search", "minimal designs under a fixed K*L or I*J");
  auto* sweep = app.add_subcommand("sweep", "required totals across values of one parameter");
  auto* sequences = app.add_subcommand("sequences", "list the sequences of a scheme");
  for (auto* sub : {evaluate, search, sweep, sequences}) add_options(sub, common);
  evaluate->add_option("--simulate", common.simulate, "Monte-Carlo cross-check with N replicates")
      ->check(CLI::Range(2, 10000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*evaluate) return cmd_evaluate(common, out);
    if (*search) return cmd_search(common, out);
    if (*sweep) return cmd_sweep(common, out);
    return cmd_sequences(common, out);
  } catch (const Error& e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace nof1::cli
