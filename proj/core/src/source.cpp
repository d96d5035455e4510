#include "rfa/source.hpp"

#include <cmath>
#include <string>

#include "rfa/error.hpp"

namespace rfa {

bool is_valid_fft_size(std::uint64_t n) noexcept {
  return n >= 64 && (n & (n - 1)) == 0;
}

void validate(const CaptureSettings& s) {
  if (!std::isfinite(s.center_freq_hz) || s.center_freq_hz < 0.0) {
    throw ConfigError("center_freq_hz must be finite and >= 0");
  }
  if (!std::isfinite(s.sample_rate_hz) || s.sample_rate_hz <= 0.0) {
    throw ConfigError("sample_rate_hz must be > 0");
  }
  if (!std::isfinite(s.gain_db)) {
    throw ConfigError("gain_db must be finite");
  }
  if (!is_valid_fft_size(s.fft_size)) {
    throw ConfigError("fft_size must be a power of two >= 64 (got " +
                      std::to_string(s.fft_size) + ")");
  }
}

}  // namespace rfa
