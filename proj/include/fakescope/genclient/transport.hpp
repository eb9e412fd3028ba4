#pragma once

#include <atomic>
#include <memory>
#include <string>

namespace fakescope::genclient {

struct HttpResult {
  int status = 0;  // 0 = connection failure
  std::string body;
};

// Minimal request/response channel to the generation sidecar.
class SidecarTransport {
 public:
  virtual ~SidecarTransport() = default;
  virtual HttpResult get(const std::string& path) = 0;
  virtual HttpResult post(const std::string& path, const std::string& json_body) = 0;
};

// HTTP transport over cpp-httplib; one connection per call so it can be
// shared between worker threads.
class HttpTransport final : public SidecarTransport {
 public:
  // endpoint like "http://127.0.0.1:8000"
  explicit HttpTransport(std::string endpoint, int timeout_seconds = 600);
  HttpResult get(const std::string& path) override;
  HttpResult post(const std::string& path, const std::string& json_body) override;

 private:
  std::string endpoint_;
  int timeout_seconds_;
};

// "mock://" selects the in-process mock sidecar; anything else is HTTP.
std::unique_ptr<SidecarTransport> make_transport(const std::string& endpoint);

}  // namespace fakescope::genclient
