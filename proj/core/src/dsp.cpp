#include "rfa/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rfa/error.hpp"

namespace rfa {

void validate(const PipelineConfig& cfg) {
  if (cfg.averaging_frames < 1) throw ConfigError("averaging_frames must be >= 1");
  if (!std::isfinite(cfg.threshold_db)) throw ConfigError("threshold_db must be finite");
  if (!std::isfinite(cfg.db_floor)) throw ConfigError("db_floor must be finite");
}

bool same_calibration(const SpectrumFrame& a, const SpectrumFrame& b) noexcept {
  return a.power_db.size() == b.power_db.size() && a.freq_start_hz == b.freq_start_hz &&
         a.freq_step_hz == b.freq_step_hz;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / nn));
  }
  return w;
}

IQBlock window_hann(const IQBlock& block) {
  const auto w = hann_window(block.samples.size());
  IQBlock out = block;
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.samples[i] = Sample(static_cast<float>(block.samples[i].real() * w[i]),
                            static_cast<float>(block.samples[i].imag() * w[i]));
  }
  return out;
}

SpectrumFrame compute_spectrum(const IQBlock& block, const PipelineConfig& cfg, WindowKind window,
                               SpectralTransform* transform) {
  const std::size_t n = block.samples.size();
  if (n != block.settings.fft_size) throw ConfigError("block length does not match fft_size");

  std::unique_ptr<SpectralTransform> owned;
  if (transform == nullptr || transform->size() != n) {
    owned = make_fft(n);
    transform = owned.get();
  }

  std::vector<std::complex<double>> in(n), out(n);
  if (window == WindowKind::hann) {
    const auto w = hann_window(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = std::complex<double>(block.samples[i]) * w[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) in[i] = std::complex<double>(block.samples[i]);
  }
  transform->forward(in, out);

  SpectrumFrame frame;
  frame.block_index = block.block_index;
  frame.freq_step_hz = block.settings.sample_rate_hz / static_cast<double>(n);
  frame.freq_start_hz = block.settings.center_freq_hz - block.settings.sample_rate_hz / 2.0;
  frame.power_db.resize(n);
  const double floor_power = std::pow(10.0, cfg.db_floor / 10.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = (k + n / 2) % n;  // centred: index 0 is fc - SR/2
    frame.power_db[k] = 10.0 * std::log10(std::max(std::norm(out[src]), floor_power));
  }
  return frame;
}

SpectrumFrame average_frames(std::span<const SpectrumFrame> frames, const PipelineConfig& cfg) {
  if (frames.empty()) throw PreconditionError("average_frames needs at least one frame");
  const auto& first = frames.front();
  std::vector<double> sum(first.power_db.size(), 0.0);
  for (const auto& f : frames) {
    if (!same_calibration(f, first)) {
      throw CalibrationMismatch("cannot average frames with different calibration");
    }
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += std::pow(10.0, f.power_db[k] / 10.0);
  }
  SpectrumFrame out;
  out.freq_start_hz = first.freq_start_hz;
  out.freq_step_hz = first.freq_step_hz;
  out.block_index = frames.back().block_index;
  out.power_db.resize(sum.size());
  const double count = static_cast<double>(frames.size());
  const double floor_power = std::pow(10.0, cfg.db_floor / 10.0);
  for (std::size_t k = 0; k < sum.size(); ++k) {
    out.power_db[k] = 10.0 * std::log10(std::max(sum[k] / count, floor_power));
  }
  return out;
}

void WaterfallBuffer::push(SpectrumFrame frame) {
  if (!rows_.empty() && !same_calibration(rows_.front(), frame)) {
    throw CalibrationMismatch("waterfall calibration changed; reset the buffer after a retune");
  }
  if (rows_.size() == kCapacity) rows_.pop_front();
  rows_.push_back(std::move(frame));
}

std::vector<Peak> detect_peaks(const SpectrumFrame& frame, const PipelineConfig& cfg) {
  std::vector<Peak> peaks;
  const auto& p = frame.power_db;
  std::size_t k = 0;
  while (k < p.size()) {
    if (!(p[k] > cfg.threshold_db)) {
      ++k;
      continue;
    }
    const std::size_t lo = k;
    while (k < p.size() && p[k] > cfg.threshold_db) ++k;
    const std::size_t hi = k - 1;

    // Weights relative to the run maximum keep the centroid independent of a
    // common dB offset.
    const double top = *std::max_element(p.begin() + static_cast<std::ptrdiff_t>(lo),
                                         p.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    double weight_sum = 0.0;
    double moment = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double w = std::pow(10.0, (p[i] - top) / 10.0);
      weight_sum += w;
      moment += w * static_cast<double>(i - lo);
    }
    Peak peak;
    peak.lo = lo;
    peak.hi = hi;
    peak.peak_db = top;
    peak.center_hz = frame.freq_start_hz + (static_cast<double>(lo) + moment / weight_sum) * frame.freq_step_hz;
    peak.bandwidth_hz = static_cast<double>(hi - lo + 1) * frame.freq_step_hz;
    peaks.push_back(peak);
  }
  return peaks;
}

SpectrumPipeline::SpectrumPipeline(const CaptureSettings& settings, PipelineConfig cfg)
    : settings_(settings), cfg_(cfg) {
  validate(settings_);
  validate(cfg_);
  fft_ = make_fft(settings_.fft_size);
}

void SpectrumPipeline::set_config(const PipelineConfig& cfg) {
  validate(cfg);
  if (cfg.averaging_frames != cfg_.averaging_frames || cfg.db_floor != cfg_.db_floor) {
    pending_.clear();
  }
  cfg_ = cfg;
}

bool SpectrumPipeline::process(const IQBlock& block) {
  if (block.settings != settings_) {
    throw CalibrationMismatch("block settings differ from the pipeline's capture settings");
  }
  pending_.push_back(compute_spectrum(block, cfg_, WindowKind::hann, fft_.get()));
  if (pending_.size() < cfg_.averaging_frames) return false;
  latest_ = average_frames(pending_, cfg_);
  pending_.clear();
  has_latest_ = true;
  ++produced_;
  waterfall_.push(latest_);
  return true;
}

}  // namespace rfa
