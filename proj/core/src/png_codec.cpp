#include "rfa/image.hpp"

#include <cstring>
#include <stdexcept>

#include <png.h>

#include "rfa/error.hpp"

namespace rfa {

RgbImage::RgbImage(std::uint32_t width, std::uint32_t height, Rgb fill)
    : width_(width), height_(height), pixels_(std::size_t{width} * height * 3) {
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Rgb RgbImage::at(std::uint32_t x, std::uint32_t y) const {
  if (x >= width_ || y >= height_) throw std::out_of_range("pixel outside image");
  const std::size_t i = (std::size_t{y} * width_ + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RgbImage::set(std::uint32_t x, std::uint32_t y, Rgb c) {
  if (x >= width_ || y >= height_) throw std::out_of_range("pixel outside image");
  const std::size_t i = (std::size_t{y} * width_ + x) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

void RgbImage::set_clipped(std::int64_t x, std::int64_t y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  set(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), c);
}

void RgbImage::fill_rect(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1, Rgb c) {
  for (std::int64_t y = y0; y < y1; ++y) {
    for (std::int64_t x = x0; x < x1; ++x) set_clipped(x, y, c);
  }
}

namespace {

struct WriteState {
  std::vector<std::uint8_t>* out;
};

void write_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<WriteState*>(png_get_io_ptr(png));
  state->out->insert(state->out->end(), data, data + length);
}

void flush_bytes(png_structp) {}

struct ReadState {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
};

void read_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<ReadState*>(png_get_io_ptr(png));
  if (state->pos + length > state->in.size()) png_error(png, "truncated PNG");
  std::memcpy(data, state->in.data() + state->pos, length);
  state->pos += length;
}

[[noreturn]] void on_error(png_structp, png_const_charp message) {
  throw FormatError(std::string("png: ") + message);
}

void on_warning(png_structp, png_const_charp) {}

// Owns the read structs for the duration of a decode.
class PngReader {
 public:
  explicit PngReader(std::span<const std::uint8_t> bytes) : state_{bytes, 0} {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
      throw FormatError("not a PNG stream");
    }
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    info_ = png_create_info_struct(png_);
    png_set_read_fn(png_, &state_, read_bytes);
    png_read_info(png_, info_);
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }

 private:
  ReadState state_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image, const PngText& text) {
  std::vector<std::uint8_t> out;
  WriteState state{&out};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &state, write_bytes, flush_bytes);
    png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);

    std::vector<png_text> chunks;
    std::vector<std::string> storage;
    storage.reserve(text.size() * 2);
    for (const auto& [key, value] : text) {
      storage.push_back(key);
      const char* k = storage.back().c_str();
      storage.push_back(value);
      const char* v = storage.back().c_str();
      png_text t{};
      t.compression = PNG_ITXT_COMPRESSION_NONE;
      t.key = const_cast<char*>(k);
      t.text = const_cast<char*>(v);
      t.itxt_length = std::strlen(v);
      t.lang = nullptr;
      t.lang_key = nullptr;
      chunks.push_back(t);
    }
    if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));

    png_write_info(png, info);
    const auto data = image.data();
    for (std::uint32_t y = 0; y < image.height(); ++y) {
      png_write_row(png, const_cast<png_bytep>(data.data() + std::size_t{y} * image.width() * 3));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  PngReader reader(bytes);
  auto* png = reader.png();
  auto* info = reader.info();
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  RgbImage image(width, height);
  auto data = image.data();
  for (std::uint32_t y = 0; y < height; ++y) {
    png_read_row(png, data.data() + std::size_t{y} * width * 3, nullptr);
  }
  return image;
}

PngText read_png_text(std::span<const std::uint8_t> bytes) {
  PngReader reader(bytes);
  auto* png = reader.png();
  auto* info = reader.info();
  // Text chunks after IDAT are only visible once the image has been consumed.
  const auto height = png_get_image_height(png, info);
  std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
  for (std::uint32_t y = 0; y < height; ++y) png_read_row(png, row.data(), nullptr);
  png_read_end(png, info);

  PngText out;
  png_textp text = nullptr;
  int count = 0;
  png_get_text(png, info, &text, &count);
  for (int i = 0; i < count; ++i) out[text[i].key] = text[i].text;
  return out;
}

}  // namespace rfa
