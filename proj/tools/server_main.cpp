#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "nof1/errors.hpp"
#include "nof1/service.hpp"

int main(int argc, char** argv) {
  CLI::App app{"HTTP service for n-of-1 series design calculations", "nof1_server"};
  nof1::service::Options options;
  try {
    options = nof1::service::options_from_env();
  } catch (const nof1::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::string listen = options.host + ":" + std::to_string(options.port);
  app.add_option("--listen", listen, "host:port (env NOF1_LISTEN)");
  app.add_option("--sequence-cap", options.sequence_cap, "largest enumeration served (env NOF1_SEQUENCE_CAP)");
  app.add_option("--timeout-ms", options.timeout_ms, "per-request compute budget (env NOF1_TIMEOUT_MS)");
  app.add_option("--static-dir", options.static_dir, "directory served at / (env NOF1_STATIC_DIR)");
  app.add_option("--cors-origin", options.cors_origin, "Access-Control-Allow-Origin value");
  CLI11_PARSE(app, argc, argv);

  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "error: --listen expects host:port\n";
    return 2;
  }
  options.host = listen.substr(0, colon);
  options.port = std::stoi(listen.substr(colon + 1));

  httplib::Server server;
  try {
    nof1::service::mount(server, options);
  } catch (const nof1::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "listening on " << options.host << ":" << options.port << "\n";
  if (!server.listen(options.host, options.port)) {
    std::cerr << "error: cannot listen on " << listen << "\n";
    return 1;
  }
  return 0;
}
