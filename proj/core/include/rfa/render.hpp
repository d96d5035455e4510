#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfa/dsp.hpp"
#include "rfa/image.hpp"
#include "rfa/util.hpp"

namespace rfa {

enum class ColormapKind { viridis_like };

// Blue-to-yellow table whose CIE lightness rises strictly with the index.
class Colormap {
 public:
  static const Colormap& get(ColormapKind kind);

  std::size_t size() const noexcept { return stops_.size(); }
  Rgb stop(std::size_t i) const { return stops_.at(i); }

  // Stop index for a value clamped to [lo, hi]; the range is split into
  // size() equal cells.
  std::size_t index_for(double value, double lo, double hi) const noexcept;
  Rgb color_for(double value, double lo, double hi) const noexcept {
    return stops_[index_for(value, lo, hi)];
  }
  // Exact inverse of stop(); nullopt for colours not in the table.
  std::optional<std::size_t> lookup(Rgb c) const noexcept;

 private:
  explicit Colormap(std::vector<Rgb> stops) : stops_(std::move(stops)) {}
  std::vector<Rgb> stops_;
};

// CIE 1976 L* of an sRGB colour, 0..100.
double lightness(Rgb c) noexcept;

struct RenderSpec {
  std::uint32_t width_px = 1000;
  std::uint32_t height_px = 600;
  ColormapKind colormap = ColormapKind::viridis_like;
  // Colour scale limits; auto_scale() of the snapshot when unset.
  std::optional<double> db_min;
  std::optional<double> db_max;
  std::string title_template = "Waterfall — Fc: {fc} MHz, SR: {SR} MHz";
};

std::string format_title(const std::string& title_template, double center_freq_hz,
                         double sample_rate_hz);

struct ScaleLimits {
  double db_min = 0.0;
  double db_max = 0.0;
};

// (p5, p99.5) of every bin in the snapshot, widened symmetrically to at least
// 10 dB apart.
ScaleLimits auto_scale(std::span<const SpectrumFrame> rows);

// Pixel geometry of a rendered waterfall, for callers that need to locate the
// heatmap (tests, the UI thumbnail).
struct RenderLayout {
  std::uint32_t heat_x0 = 0, heat_y0 = 0, heat_x1 = 0, heat_y1 = 0;  // half-open
  std::uint32_t bar_x0 = 0, bar_x1 = 0;
  double freq_lo_hz = 0.0;  // frequency at the left edge of the heatmap
  double freq_hi_hz = 0.0;  // ...and at the right edge
  ScaleLimits scale;
  std::string title;

  std::uint32_t heat_width() const noexcept { return heat_x1 - heat_x0; }
  std::uint32_t heat_height() const noexcept { return heat_y1 - heat_y0; }
  double column_frequency_hz(std::uint32_t column) const noexcept;
};

struct FrequencyTick {
  double mhz = 0.0;
  std::uint32_t x_px = 0;
  std::string label;
};

std::vector<FrequencyTick> frequency_ticks(const RenderLayout& layout);

// Spectrum bin sampled by heatmap column `column` (nearest bin centre).
std::size_t column_bin(const RenderLayout& layout, const SpectrumFrame& calibration,
                       std::uint32_t column) noexcept;

struct RenderedWaterfall {
  RgbImage image;
  RenderLayout layout;
};

// Heatmap (oldest row on top, newest at the bottom), MHz axis, colour bar and
// title. Nothing else is drawn. Throws PreconditionError on an empty snapshot.
RenderedWaterfall rasterize_waterfall(std::span<const SpectrumFrame> rows, const RenderSpec& spec);

// PNG bytes of rasterize_waterfall(); the title is also stored as an iTXt
// "Title" entry.
std::vector<std::uint8_t> render_waterfall(std::span<const SpectrumFrame> rows, const RenderSpec& spec);

}  // namespace rfa
