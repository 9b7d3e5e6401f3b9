#include "nof1/service.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>

#include "nof1/errors.hpp"
#include "nof1/io.hpp"

// after Eigen: <resolv.h> defines _res
#include <httplib.h>

#ifndef NOF1_VERSION
#define NOF1_VERSION "0.0.0"
#endif

namespace nof1::service {

namespace {

using io::json;

Response json_response(int status, const json& body) { return {status, body.dump() + "\n", "application/json"}; }

Response error_response(int status, const Error& e) {
  json err{{"code", e.code()}, {"message", e.what()}, {"exit_code", e.exit_code()}};
  if (const auto* p = dynamic_cast<const ParameterError*>(&e)) err["field"] = p->field();
  if (const auto* p = dynamic_cast<const ParseError*>(&e)) err["line"] = p->line();
  if (const auto* p = dynamic_cast<const InestimableError*>(&e)) err["coordinate"] = p->coordinate();
  return json_response(status, {{"error", err}});
}

int status_for(const Error& e) {
  if (dynamic_cast<const TooLargeError*>(&e)) return 413;
  if (dynamic_cast<const ParameterError*>(&e)) return 400;
  if (dynamic_cast<const InestimableError*>(&e) || dynamic_cast<const InfeasibleError*>(&e)) return 422;
  if (dynamic_cast<const TimeoutError*>(&e)) return 503;
  return 500;
}

json parse_body(std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParameterError("body", std::string("invalid JSON: ") + e.what());
  }
}

struct Request {
  io::RunConfig config;
  Deadline deadline;
};

Request resolve(const Options& opt, std::string_view body) {
  Request r;
  io::merge_config(r.config, parse_body(body));
  r.config.validate();
  if (r.config.scheme.is_manual() && r.config.scheme.manual_sequences.size() > opt.sequence_cap)
    throw TooLargeError("sequences", "more than " + std::to_string(opt.sequence_cap) + " sequences");
  r.config.bounds.max_sequences = std::min(r.config.bounds.max_sequences, opt.sequence_cap);
  r.deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(opt.timeout_ms);
  return r;
}

SearchConstraint constraint_of(const Request& r) {
  auto c = r.config.constraint();
  c.deadline = r.deadline;
  return c;
}

Response search_optimized(const Options& opt, std::string_view body) {
  const auto r = resolve(opt, body);
  auto c = constraint_of(r);
  c.include_individual = false;
  const auto curve =
      optimize_total_measurements_curve(c, r.config.range_lo, r.config.range_hi, r.config.optimize_y_only);
  if (std::none_of(curve.points.begin(), curve.points.end(), [](const CurvePoint& p) { return p.total.has_value(); }))
    throw InfeasibleError("no design in the range meets the requirement");
  return json_response(200, {{"parameters", io::to_json(r.config)}, {"curve", io::to_json(curve, true)}});
}

Response designs(const Options& opt, std::string_view body) {
  const auto r = resolve(opt, body);
  const auto c = constraint_of(r);
  const bool individual = r.config.include_individual;

  std::vector<DesignRow> optimized;
  for (auto& row : enumerate_designs_fixed_product(c))
    if (r.config.optimize_y_only || is_optimized(row, c)) optimized.push_back(std::move(row));

  const int lo = r.config.other.value_or(r.config.other_lo);
  const int hi = r.config.other.value_or(r.config.other_hi);
  const auto feasible = enumerate_feasible_designs(c, lo, hi);
  if (optimized.empty() && feasible.empty()) throw InfeasibleError("no design meets the requirement");

  json doc{{"parameters", io::to_json(r.config)},
           {"fix", to_string(r.config.fix)},
           {"value", r.config.value},
           {"optimized", io::to_json(optimized, individual)},
           {"drilldown", {{"other_range", {lo, hi}}, {"rows", io::to_json(feasible, individual)}}}};
  if (individual && !feasible.empty()) {
    doc["individual_se"] = {{"grouping", to_string(r.config.resolved_grouping())},
                            {"series", io::to_json(individual_se_curve(feasible, r.config.resolved_grouping()))}};
  }
  return json_response(200, doc);
}

Response sequences_enumerate(const Options& opt, std::string_view body) {
  const auto r = resolve(opt, body);
  const auto& cfg = r.config;
  std::vector<Sequence> seqs;
  if (cfg.scheme.is_manual()) {
    seqs = cfg.scheme.manual_sequences;
  } else {
    const auto n = count_sequences(cfg.scheme, cfg.K);
    if (n > opt.sequence_cap)
      throw TooLargeError("design.K", std::to_string(n) + " sequences exceed the cap of " +
                                          std::to_string(opt.sequence_cap) + "; upload specific sequences instead");
    seqs = enumerate_sequences(cfg.scheme, cfg.K);
  }
  json doc = io::sequences_json(seqs);
  doc["scheme"] = to_string(cfg.scheme.kind);
  return json_response(200, doc);
}

Response sequences_upload(const Options& opt, std::string_view body, std::string_view content_type) {
  std::string text;
  if (content_type.rfind("application/json", 0) == 0) {
    const auto doc = parse_body(body);
    if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string())
      throw ParameterError("text", "expected {\"text\": \"<sequence file>\"}");
    text = doc["text"].get<std::string>();
  } else {
    text = std::string(body);
  }
  const auto seqs = parse_sequence_file(text);
  if (seqs.size() > opt.sequence_cap)
    throw TooLargeError("sequences", "more than " + std::to_string(opt.sequence_cap) + " sequences");
  RandomizationScheme::manual(seqs);
  json doc = io::sequences_json(seqs);
  doc["scheme"] = "manual";
  return json_response(200, doc);
}

Response health(const Options& opt) {
  json build{{"cxx_standard", __cplusplus},
             {"openmp", openmp_version()},
#ifdef NDEBUG
             {"assertions", false}
#else
             {"assertions", true}
#endif
  };
  return json_response(200, {{"status", "ok"},
                             {"version", NOF1_VERSION},
                             {"build", build},
                             {"limits", {{"sequence_cap", opt.sequence_cap}, {"timeout_ms", opt.timeout_ms}}}});
}

}  // namespace

Options options_from_env(Options base) {
  if (const char* listen = std::getenv("NOF1_LISTEN")) {
    const std::string s(listen);
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw ParameterError("NOF1_LISTEN", "expected host:port");
    base.host = s.substr(0, colon);
    try {
      base.port = std::stoi(s.substr(colon + 1));
    } catch (const std::exception&) {
      throw ParameterError("NOF1_LISTEN", "invalid port");
    }
  }
  if (const char* cap = std::getenv("NOF1_SEQUENCE_CAP")) {
    try {
      base.sequence_cap = static_cast<std::size_t>(std::stoul(cap));
    } catch (const std::exception&) {
      throw ParameterError("NOF1_SEQUENCE_CAP", "expected a positive integer");
    }
  }
  if (const char* t = std::getenv("NOF1_TIMEOUT_MS")) {
    try {
      base.timeout_ms = std::stoi(t);
    } catch (const std::exception&) {
      throw ParameterError("NOF1_TIMEOUT_MS", "expected milliseconds");
    }
  }
  if (const char* dir = std::getenv("NOF1_STATIC_DIR")) base.static_dir = dir;
  return base;
}

Response handle(const Options& options, std::string_view method, std::string_view path, std::string_view body,
                std::string_view content_type) {
  using Handler = std::function<Response()>;
  const std::map<std::string_view, std::pair<std::string_view, Handler>> routes{
      {"/api/v1/health", {"GET", [&] { return health(options); }}},
      {"/api/v1/search/optimized", {"POST", [&] { return search_optimized(options, body); }}},
      {"/api/v1/designs", {"POST", [&] { return designs(options, body); }}},
      {"/api/v1/sequences/enumerate", {"POST", [&] { return sequences_enumerate(options, body); }}},
      {"/api/v1/sequences/upload", {"POST", [&] { return sequences_upload(options, body, content_type); }}},
  };
  const auto it = routes.find(path);
  if (it == routes.end())
    return json_response(404, {{"error", {{"code", "not_found"}, {"message", "no such endpoint"}}}});
  if (method != it->second.first)
    return json_response(405, {{"error", {{"code", "method_not_allowed"}, {"message", "use " + std::string(it->second.first)}}}});
  try {
    return it->second.second();
  } catch (const Error& e) {
    return error_response(status_for(e), e);
  } catch (const std::exception& e) {
    return json_response(500, {{"error", {{"code", "internal"}, {"message", e.what()}, {"exit_code", 1}}}});
  }
}

void mount(httplib::Server& server, const Options& options) {
  const auto forward = [options](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle(options, req.method, req.path, req.body, req.get_header_value("Content-Type"));
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.set_post_routing_handler([options](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", options.cors_origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get(R"(/api/v1/.*)", forward);
  server.Post(R"(/api/v1/.*)", forward);
  if (!options.static_dir.empty() && !server.set_mount_point("/", options.static_dir))
    throw ParameterError("static_dir", "cannot serve '" + options.static_dir + "'");
}

}  // namespace nof1::service
