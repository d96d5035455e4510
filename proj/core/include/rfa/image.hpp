#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rfa {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row-major, top row first.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::uint32_t width, std::uint32_t height, Rgb fill = {255, 255, 255});

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }

  Rgb at(std::uint32_t x, std::uint32_t y) const;
  void set(std::uint32_t x, std::uint32_t y, Rgb c);
  // Clipped to the image; negative or out-of-range coordinates are ignored.
  void set_clipped(std::int64_t x, std::int64_t y, Rgb c);
  void fill_rect(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1, Rgb c);

  std::span<const std::uint8_t> data() const noexcept { return pixels_; }
  std::span<std::uint8_t> data() noexcept { return pixels_; }

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using PngText = std::map<std::string, std::string>;

// 8-bit RGB PNG, no alpha. Text entries are written as iTXt chunks.
std::vector<std::uint8_t> encode_png(const RgbImage& image, const PngText& text = {});
RgbImage decode_png(std::span<const std::uint8_t> bytes);
PngText read_png_text(std::span<const std::uint8_t> bytes);

}  // namespace rfa
