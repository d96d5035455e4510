#include "rfa/capture_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "rfa/error.hpp"

namespace rfa {
namespace {

static_assert(std::endian::native == std::endian::little,
              "capture I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T take(const std::vector<char>& data, std::size_t& pos) {
  T value;
  std::memcpy(&value, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

constexpr std::array<char, 4> kMagic{'R', 'F', 'A', '1'};

}  // namespace

void write_capture(const std::filesystem::path& path, const CaptureSettings& settings,
                   std::span<const IQBlock> blocks) {
  validate(settings);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic.data(), kMagic.size());
  put(out, settings.center_freq_hz);
  put(out, settings.sample_rate_hz);
  put(out, settings.gain_db);
  put(out, settings.fft_size);
  for (const auto& block : blocks) {
    if (block.samples.size() != settings.fft_size) {
      throw FormatError("block length does not match fft_size");
    }
    for (const auto& s : block.samples) {
      put(out, s.real());
      put(out, s.imag());
    }
  }
  if (!out) throw FormatError("write to '" + path.string() + "' failed");
}

Capture read_capture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open capture '" + path.string() + "'");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < kCaptureHeaderSize || !std::equal(kMagic.begin(), kMagic.end(), data.begin())) {
    throw FormatError("'" + path.string() + "' is not an RFA1 capture");
  }
  std::size_t pos = kMagic.size();
  Capture capture;
  capture.settings.center_freq_hz = take<double>(data, pos);
  capture.settings.sample_rate_hz = take<double>(data, pos);
  capture.settings.gain_db = take<double>(data, pos);
  capture.settings.fft_size = take<std::uint32_t>(data, pos);
  validate(capture.settings);

  const std::size_t payload = data.size() - pos;
  const std::size_t block_bytes = std::size_t{capture.settings.fft_size} * 2 * sizeof(float);
  if (payload % block_bytes != 0) {
    throw FormatError("capture payload is not a whole number of blocks");
  }
  capture.samples.resize(payload / (2 * sizeof(float)));
  for (auto& s : capture.samples) {
    const float re = take<float>(data, pos);
    const float im = take<float>(data, pos);
    s = {re, im};
  }
  return capture;
}

std::vector<IQBlock> capture_blocks(const Capture& capture) {
  const std::size_t n = capture.settings.fft_size;
  std::vector<IQBlock> blocks(capture.samples.size() / n);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    blocks[b].block_index = b;
    blocks[b].settings = capture.settings;
    blocks[b].samples.assign(capture.samples.begin() + static_cast<std::ptrdiff_t>(b * n),
                             capture.samples.begin() + static_cast<std::ptrdiff_t>((b + 1) * n));
  }
  return blocks;
}

CaptureReplaySource::CaptureReplaySource(Capture capture) : capture_(std::move(capture)) {
  validate(capture_.settings);
}

std::optional<IQBlock> CaptureReplaySource::next() {
  const std::size_t n = capture_.settings.fft_size;
  if ((next_ + 1) * n > capture_.samples.size()) return std::nullopt;
  IQBlock block;
  block.block_index = next_;
  block.settings = capture_.settings;
  const auto first = capture_.samples.begin() + static_cast<std::ptrdiff_t>(next_ * n);
  block.samples.assign(first, first + static_cast<std::ptrdiff_t>(n));
  ++next_;
  return block;
}

}  // namespace rfa
