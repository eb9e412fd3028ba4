#include "fakescope/genclient/transport.hpp"

#include <httplib.h>

#include "fakescope/genclient/mock_sidecar.hpp"

namespace fakescope::genclient {

HttpTransport::HttpTransport(std::string endpoint, int timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

HttpResult HttpTransport::get(const std::string& path) {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(5);
  client.set_read_timeout(timeout_seconds_);
  auto res = client.Get(path);
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

HttpResult HttpTransport::post(const std::string& path, const std::string& json_body) {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(5);
  client.set_read_timeout(timeout_seconds_);
  client.set_write_timeout(timeout_seconds_);
  auto res = client.Post(path, json_body, "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

std::unique_ptr<SidecarTransport> make_transport(const std::string& endpoint) {
  if (endpoint.rfind("mock://", 0) == 0) return std::make_unique<MockSidecar>();
  return std::make_unique<HttpTransport>(endpoint);
}

}  // namespace fakescope::genclient
