#pragma once

// HTTP/JSON service over a campaign directory and a manifest.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "stargen/proposer.hpp"

namespace stargen {

inline constexpr int kDefaultPort = 8377;

struct ServerOptions {
  std::filesystem::path campaign_dir;
  std::filesystem::path manifest_path;
  std::string host = "127.0.0.1";
  int port = kDefaultPort;  // 0 picks a free port
  BackendConfig backend;
  std::string cors_origin = "*";
};

struct ApiRequest {
  std::string method;  // GET, POST, OPTIONS
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::optional<std::string> idempotency_key;  // Idempotency-Key header
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

/// HTTP status for an error code: 404 unknown ids, 409 quota/duplicates,
/// 422 protocol and validation failures, 400 unsupported axis, 502/504
/// upstream failures.
int http_status(ErrorCode code);

/// Draft copy of a manifest: `<manifest>.draft` beside it.
std::filesystem::path draft_path(const std::filesystem::path& manifest_path);

class ConsoleApi {
public:
  explicit ConsoleApi(ServerOptions options);
  ~ConsoleApi();
  ConsoleApi(const ConsoleApi&) = delete;
  ConsoleApi& operator=(const ConsoleApi&) = delete;

  /// Routes one request in-process; thread-safe.
  ApiResponse handle(const ApiRequest& request);

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stargen
