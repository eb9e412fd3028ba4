#pragma once

#include <atomic>
#include <cstdint>
#include <opencv2/core.hpp>
#include <string>

#include "fakescope/common/mask.hpp"
#include "fakescope/genclient/transport.hpp"

namespace fakescope::genclient {

// Constants of the deterministic stand-in generator. The fingerprint is a
// sinusoid at (freq_x, freq_y) cycles per pixel; 1/4 and 1/8 land on exact
// DFT bins for any side divisible by 8.
struct MockConfig {
  double fingerprint_freq_x = 0.25;
  double fingerprint_freq_y = 0.125;
  double fingerprint_amplitude = 3.0;
  double lowpass_sigma = 0.5;
  double fill_noise_std = 40.0;
  double fill_noise_sigma = 2.0;
  std::string model_id = "mock-fingerprint-v1";
};

// Adds the fingerprint pattern to an 8-bit BGR image in place (float domain
// before rounding is done by the caller).
void add_fingerprint(cv::Mat& image_f64, const MockConfig& config);

// Pure transform implemented by the mock: empty mask -> low-pass plus
// fingerprint over the whole image; otherwise seeded filtered noise plus
// fingerprint inside the mask and the input bit-exact outside it.
cv::Mat mock_inpaint(const cv::Mat& image, const BinaryMask& mask, const std::string& prompt,
                     std::uint64_t seed, const MockConfig& config = {});

// In-process implementation of the sidecar wire contract.
class MockSidecar final : public SidecarTransport {
 public:
  explicit MockSidecar(MockConfig config = {}) : config_(std::move(config)) {}

  HttpResult get(const std::string& path) override;
  HttpResult post(const std::string& path, const std::string& json_body) override;

  int health_calls() const { return health_calls_.load(); }
  int inpaint_calls() const { return inpaint_calls_.load(); }
  int total_calls() const { return health_calls() + inpaint_calls(); }
  // Makes the next n /inpaint calls fail with HTTP 500.
  void fail_next(int n) { fail_budget_.store(n); }

 private:
  MockConfig config_;
  std::atomic<int> health_calls_{0};
  std::atomic<int> inpaint_calls_{0};
  std::atomic<int> fail_budget_{0};
};

}  // namespace fakescope::genclient
