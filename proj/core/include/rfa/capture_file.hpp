#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "rfa/source.hpp"

namespace rfa {

// Capture replay file: "RFA1", f64 centre frequency, f64 sample rate,
// f64 gain, u32 fft size (all little-endian), then interleaved f32 I/Q pairs.
inline constexpr std::size_t kCaptureHeaderSize = 4 + 8 * 3 + 4;

struct Capture {
  CaptureSettings settings;
  std::vector<Sample> samples;  // a whole number of fft_size blocks
};

void write_capture(const std::filesystem::path& path, const CaptureSettings& settings,
                   std::span<const IQBlock> blocks);
Capture read_capture(const std::filesystem::path& path);

// Splits a capture into fft_size blocks, numbered from 0.
std::vector<IQBlock> capture_blocks(const Capture& capture);

// Replays a capture file as a block stream.
class CaptureReplaySource final : public BlockSource {
 public:
  explicit CaptureReplaySource(Capture capture);
  std::optional<IQBlock> next() override;
  const CaptureSettings& settings() const override { return capture_.settings; }

 private:
  Capture capture_;
  std::uint64_t next_ = 0;
};

}  // namespace rfa
