#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "model_dir.hpp"

namespace coastal::tools {

struct ApiResponse {
  int status = 200;
  std::string body;  ///< JSON
};

/// Request handlers over an immutable loaded model; safe to call from many
/// threads at once.
class ServiceApi {
 public:
  explicit ServiceApi(ModelDir model);

  ApiResponse health() const;
  ApiResponse meta() const;
  ApiResponse locations() const;
  /// {"scenario": bits, "include_grid": bool?, "reference": bits?}
  ApiResponse predict(const std::string& body) const;
  /// {"a": bits, "b": bits} -> {"diff": depth(b) - depth(a)}
  ApiResponse compare(const std::string& body) const;

  const ModelDir& model() const noexcept { return model_; }

 private:
  ModelDir model_;
  mutable std::atomic<unsigned long long> incidents_{0};
};

/// HTTP front end for a ServiceApi.
class HttpService {
 public:
  explicit HttpService(const ServiceApi& api);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds the socket; port 0 picks a free one. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocks serving the API until the process is stopped.
void run_server(const ServiceApi& api, const std::string& host, int port);

}  // namespace coastal::tools
