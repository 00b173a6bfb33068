#pragma once

#include <memory>
#include <string>

#include "crowdqc/error.hpp"
#include "crowdqc/service.hpp"

namespace crowdqc {

/// HTTP status used for an error code on the wire.
int http_status_for(ErrorCode code);

/// `/api/v1/` JSON API over a Service. Errors are returned as
/// {"error": {"code", "message", "details"}}.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns false when the address is taken.
  bool bind(const std::string& host, int port);
  int port() const;

  /// Serves until stop(). Requires a successful bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace crowdqc
