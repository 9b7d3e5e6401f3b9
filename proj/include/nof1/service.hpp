#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace nof1::service {

struct Options {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t sequence_cap = 4096;  // enumerations above this answer 413
  int timeout_ms = 30000;           // per-request compute budget; 503 when exceeded
  std::string static_dir;           // served at / when set
  std::string cors_origin = "*";
};

// Reads NOF1_LISTEN (host:port), NOF1_SEQUENCE_CAP, NOF1_TIMEOUT_MS and
// NOF1_STATIC_DIR over `base`.
Options options_from_env(Options base = {});

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Stateless request handler behind every /api/v1 route. Identical inputs
// give identical responses.
Response handle(const Options& options, std::string_view method, std::string_view path, std::string_view body,
                std::string_view content_type = "application/json");

// Registers the API routes, CORS preflight and the optional static mount.
void mount(httplib::Server& server, const Options& options);

}  // namespace nof1::service
