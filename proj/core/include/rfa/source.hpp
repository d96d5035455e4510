#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace rfa {

inline constexpr std::uint32_t kDefaultFftSize = 2048;

struct CaptureSettings {
  double center_freq_hz = 0.0;
  double sample_rate_hz = 1.0;
  double gain_db = 0.0;
  std::uint32_t fft_size = kDefaultFftSize;

  bool operator==(const CaptureSettings&) const = default;
};

// Throws ConfigError naming the first violated invariant.
void validate(const CaptureSettings& settings);

bool is_valid_fft_size(std::uint64_t n) noexcept;

using Sample = std::complex<float>;

struct IQBlock {
  std::vector<Sample> samples;  // always settings.fft_size long
  std::uint64_t block_index = 0;
  CaptureSettings settings;
};

// Single-consumer stream of blocks. next() returns nullopt once exhausted.
class BlockSource {
 public:
  virtual ~BlockSource() = default;
  virtual std::optional<IQBlock> next() = 0;
  virtual const CaptureSettings& settings() const = 0;
};

}  // namespace rfa
