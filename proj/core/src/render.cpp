#include "rfa/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "rfa/error.hpp"

namespace rfa {
namespace {

constexpr std::array<Rgb, 64> kViridis{{
#include "viridis_64.inc"
}};

constexpr int kGlyphWidth = 6;
constexpr int kGlyphHeight = 11;
constexpr std::array<std::array<std::uint8_t, kGlyphHeight>, 95> kFont{{
#include "font_6x11.inc"
}};

constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kFrame{64, 64, 64};

// Decodes UTF-8 into code points; malformed bytes become U+FFFD.
std::vector<char32_t> decode_utf8(const std::string& s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xe ? 2 : (c >> 3) == 0x1e ? 3 : -1;
    if (extra < 0 || i + static_cast<std::size_t>(extra) >= s.size()) {
      out.push_back(0xfffd);
      ++i;
      continue;
    }
    char32_t cp = extra == 0 ? c : c & (0x3f >> extra);
    for (int k = 1; k <= extra; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3f);
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

int text_width(const std::string& text, int scale) {
  return static_cast<int>(decode_utf8(text).size()) * kGlyphWidth * scale;
}

void draw_glyph(RgbImage& img, int x, int y, char32_t cp, int scale, Rgb color) {
  if (cp == U'—' || cp == U'–') {
    // No dash glyphs beyond '-' in the bitmap font; draw a rule instead.
    img.fill_rect(x, y + 5 * scale, x + kGlyphWidth * scale, y + 6 * scale, color);
    return;
  }
  if (cp < 32 || cp > 126) cp = U'?';
  const auto& rows = kFont[cp - 32];
  for (int gy = 0; gy < kGlyphHeight; ++gy) {
    for (int gx = 0; gx < kGlyphWidth; ++gx) {
      if ((rows[gy] >> (kGlyphWidth - 1 - gx)) & 1) {
        img.fill_rect(x + gx * scale, y + gy * scale, x + (gx + 1) * scale, y + (gy + 1) * scale, color);
      }
    }
  }
}

void draw_text(RgbImage& img, int x, int y, const std::string& text, int scale, Rgb color) {
  for (char32_t cp : decode_utf8(text)) {
    draw_glyph(img, x, y, cp, scale, color);
    x += kGlyphWidth * scale;
  }
}

void draw_text_centered(RgbImage& img, int cx, int y, const std::string& text, int scale, Rgb color) {
  draw_text(img, cx - text_width(text, scale) / 2, y, text, scale, color);
}

double srgb_to_linear(std::uint8_t v) {
  const double c = v / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

}  // namespace

const Colormap& Colormap::get(ColormapKind kind) {
  switch (kind) {
    case ColormapKind::viridis_like: {
      static const Colormap viridis(std::vector<Rgb>(kViridis.begin(), kViridis.end()));
      return viridis;
    }
  }
  throw ConfigError("unknown colormap");
}

std::size_t Colormap::index_for(double value, double lo, double hi) const noexcept {
  const double t = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
  const auto n = stops_.size();
  return std::min(n - 1, static_cast<std::size_t>(t * static_cast<double>(n)));
}

std::optional<std::size_t> Colormap::lookup(Rgb c) const noexcept {
  for (std::size_t i = 0; i < stops_.size(); ++i) {
    if (stops_[i] == c) return i;
  }
  return std::nullopt;
}

double lightness(Rgb c) noexcept {
  const double y = 0.2126 * srgb_to_linear(c.r) + 0.7152 * srgb_to_linear(c.g) +
                   0.0722 * srgb_to_linear(c.b);
  return y > 216.0 / 24389.0 ? 116.0 * std::cbrt(y) - 16.0 : y * 24389.0 / 27.0;
}

std::string format_title(const std::string& title_template, double center_freq_hz,
                         double sample_rate_hz) {
  std::string out = title_template;
  const auto replace_all = [&out](const std::string& key, const std::string& value) {
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size())) {
      out.replace(pos, key.size(), value);
    }
  };
  replace_all("{fc}", format_mhz(center_freq_hz));
  replace_all("{SR}", format_mhz(sample_rate_hz));
  return out;
}

ScaleLimits auto_scale(std::span<const SpectrumFrame> rows) {
  std::vector<double> all;
  for (const auto& r : rows) all.insert(all.end(), r.power_db.begin(), r.power_db.end());
  if (all.empty()) throw PreconditionError("auto_scale needs a non-empty snapshot");
  ScaleLimits s{percentile(all, 5.0), percentile(all, 99.5)};
  constexpr double kMinSpan = 10.0;
  if (s.db_max - s.db_min < kMinSpan) {
    const double mid = 0.5 * (s.db_min + s.db_max);
    s = {mid - kMinSpan / 2.0, mid + kMinSpan / 2.0};
  }
  return s;
}

double RenderLayout::column_frequency_hz(std::uint32_t column) const noexcept {
  return freq_lo_hz + (static_cast<double>(column) + 0.5) * (freq_hi_hz - freq_lo_hz) /
                          static_cast<double>(heat_width());
}

std::size_t column_bin(const RenderLayout& layout, const SpectrumFrame& cal,
                       std::uint32_t column) noexcept {
  const double f = layout.column_frequency_hz(column);
  const auto n = static_cast<std::int64_t>(cal.power_db.size());
  const auto k = std::llround((f - cal.freq_start_hz) / cal.freq_step_hz);
  return static_cast<std::size_t>(std::clamp<std::int64_t>(k, 0, n - 1));
}

std::vector<FrequencyTick> frequency_ticks(const RenderLayout& layout) {
  const double lo = layout.freq_lo_hz / 1e6;
  const double hi = layout.freq_hi_hz / 1e6;
  const double span = hi - lo;
  constexpr int kMaxIntervals = 10;

  double step = 0.0;
  int decimals = 0;
  for (int exp = -3; exp <= 6 && step == 0.0; ++exp) {
    for (double mult : {1.0, 2.0, 5.0}) {
      const double candidate = mult * std::pow(10.0, exp);
      if (span / candidate <= kMaxIntervals) {
        step = candidate;
        decimals = std::max(0, -exp);
        break;
      }
    }
  }

  std::vector<FrequencyTick> ticks;
  const double eps = 1e-9 * std::max(1.0, std::abs(hi));
  for (double i = std::ceil((lo - eps) / step); i * step <= hi + eps; i += 1.0) {
    const double mhz = i * step;
    FrequencyTick t;
    t.mhz = mhz;
    const double frac = std::clamp((mhz - lo) / span, 0.0, 1.0);
    t.x_px = layout.heat_x0 +
             std::min(layout.heat_width() - 1,
                      static_cast<std::uint32_t>(std::lround(frac * layout.heat_width())));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, mhz);
    t.label = buf;
    ticks.push_back(std::move(t));
  }
  return ticks;
}

RenderedWaterfall rasterize_waterfall(std::span<const SpectrumFrame> rows, const RenderSpec& spec) {
  if (rows.empty()) throw PreconditionError("cannot render an empty waterfall");
  if (spec.width_px < 300 || spec.height_px < 200) {
    throw ConfigError("render size must be at least 300x200 pixels");
  }
  const SpectrumFrame& cal = rows.front();
  for (const auto& r : rows) {
    if (!same_calibration(r, cal)) throw CalibrationMismatch("snapshot rows disagree on calibration");
  }

  RenderLayout layout;
  if (spec.db_min && spec.db_max) {
    layout.scale = {*spec.db_min, *spec.db_max};
  } else {
    layout.scale = auto_scale(rows);
    if (spec.db_min) layout.scale.db_min = *spec.db_min;
    if (spec.db_max) layout.scale.db_max = *spec.db_max;
  }
  if (!(layout.scale.db_min < layout.scale.db_max)) throw ConfigError("db_min must be below db_max");

  const auto n = static_cast<double>(cal.power_db.size());
  const double sample_rate = cal.freq_step_hz * n;
  const double centre = cal.freq_start_hz + sample_rate / 2.0;
  layout.freq_lo_hz = centre - sample_rate / 2.0;
  layout.freq_hi_hz = centre + sample_rate / 2.0;
  layout.title = format_title(spec.title_template, centre, sample_rate);

  const std::uint32_t w = spec.width_px;
  const std::uint32_t h = spec.height_px;
  layout.heat_x0 = 70;
  layout.heat_x1 = w - 110;
  layout.heat_y0 = 40;
  layout.heat_y1 = h - 60;
  layout.bar_x0 = w - 95;
  layout.bar_x1 = w - 79;

  RgbImage img(w, h, kWhite);
  const Colormap& cmap = Colormap::get(spec.colormap);

  const std::uint32_t hw = layout.heat_width();
  const std::uint32_t hh = layout.heat_height();
  std::vector<std::size_t> bins(hw);
  for (std::uint32_t x = 0; x < hw; ++x) bins[x] = column_bin(layout, cal, x);

  const auto row_count = rows.size();
  for (std::uint32_t y = 0; y < hh; ++y) {
    const std::size_t r = std::min(row_count - 1, std::size_t{y} * row_count / hh);
    const auto& power = rows[r].power_db;
    for (std::uint32_t x = 0; x < hw; ++x) {
      img.set(layout.heat_x0 + x, layout.heat_y0 + y,
              cmap.color_for(power[bins[x]], layout.scale.db_min, layout.scale.db_max));
    }
  }

  const auto x0 = static_cast<int>(layout.heat_x0);
  const auto x1 = static_cast<int>(layout.heat_x1);
  const auto y0 = static_cast<int>(layout.heat_y0);
  const auto y1 = static_cast<int>(layout.heat_y1);
  img.fill_rect(x0 - 1, y0 - 1, x1 + 1, y0, kFrame);
  img.fill_rect(x0 - 1, y1, x1 + 1, y1 + 1, kFrame);
  img.fill_rect(x0 - 1, y0, x0, y1, kFrame);
  img.fill_rect(x1, y0, x1 + 1, y1, kFrame);

  for (const auto& tick : frequency_ticks(layout)) {
    const auto tx = static_cast<int>(tick.x_px);
    img.fill_rect(tx, y1 + 1, tx + 1, y1 + 6, kBlack);
    draw_text_centered(img, tx, y1 + 9, tick.label, 1, kBlack);
  }
  draw_text_centered(img, (x0 + x1) / 2, y1 + 30, "Frequency (MHz)", 1, kBlack);
  draw_text(img, 8, y0, "Time", 1, kBlack);
  draw_text(img, 8, y1 - kGlyphHeight, "now", 1, kBlack);

  // Colour bar, low values at the bottom.
  const auto stops = cmap.size();
  for (std::uint32_t y = 0; y < hh; ++y) {
    const double t = 1.0 - (static_cast<double>(y) + 0.5) / hh;
    const auto idx = std::min(stops - 1, static_cast<std::size_t>(t * static_cast<double>(stops)));
    for (std::uint32_t x = layout.bar_x0; x < layout.bar_x1; ++x) img.set(x, layout.heat_y0 + y, cmap.stop(idx));
  }
  const auto label_x = static_cast<int>(layout.bar_x1) + 4;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f", layout.scale.db_max);
  draw_text(img, label_x, y0, buf, 1, kBlack);
  std::snprintf(buf, sizeof buf, "%.0f", 0.5 * (layout.scale.db_min + layout.scale.db_max));
  draw_text(img, label_x, (y0 + y1) / 2 - kGlyphHeight / 2, buf, 1, kBlack);
  std::snprintf(buf, sizeof buf, "%.0f", layout.scale.db_min);
  draw_text(img, label_x, y1 - kGlyphHeight, buf, 1, kBlack);
  draw_text(img, static_cast<int>(layout.bar_x0), y0 - 16, "dB", 1, kBlack);

  draw_text_centered(img, static_cast<int>(w / 2), 8, layout.title, 2, kBlack);

  return {std::move(img), std::move(layout)};
}

std::vector<std::uint8_t> render_waterfall(std::span<const SpectrumFrame> rows, const RenderSpec& spec) {
  const auto rendered = rasterize_waterfall(rows, spec);
  return encode_png(rendered.image, {{"Title", rendered.layout.title}});
}

}  // namespace rfa
