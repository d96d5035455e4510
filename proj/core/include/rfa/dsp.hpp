#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "rfa/source.hpp"
#include "rfa/transform.hpp"

namespace rfa {

struct PipelineConfig {
  std::uint32_t averaging_frames = 4;
  double threshold_db = -40.0;  // absolute peak-detection threshold
  double db_floor = -120.0;     // power is clamped to 10^(db_floor/10) before log

  bool operator==(const PipelineConfig&) const = default;
};

void validate(const PipelineConfig& cfg);

// One centred, dB-scaled power spectrum. Bin k sits at
// freq_start_hz + k * freq_step_hz.
struct SpectrumFrame {
  std::vector<double> power_db;
  double freq_start_hz = 0.0;
  double freq_step_hz = 1.0;
  std::uint64_t block_index = 0;

  double bin_frequency_hz(std::size_t k) const noexcept {
    return freq_start_hz + static_cast<double>(k) * freq_step_hz;
  }
};

bool same_calibration(const SpectrumFrame& a, const SpectrumFrame& b) noexcept;

enum class WindowKind { none, hann };

// Periodic Hann: w[n] = 0.5 * (1 - cos(2*pi*n/N)).
std::vector<double> hann_window(std::size_t n);

IQBlock window_hann(const IQBlock& block);

// Windows (Hann by default), transforms, converts to dB and centres the
// spectrum on fc. Uses `transform` when given, else a private FFT.
SpectrumFrame compute_spectrum(const IQBlock& block, const PipelineConfig& cfg,
                               WindowKind window = WindowKind::hann,
                               SpectralTransform* transform = nullptr);

// Linear-power mean of the frames, back in dB. Throws CalibrationMismatch.
SpectrumFrame average_frames(std::span<const SpectrumFrame> frames, const PipelineConfig& cfg);

// Rolling time/frequency matrix; rows are oldest first.
class WaterfallBuffer {
 public:
  static constexpr std::size_t kCapacity = 200;

  // Throws CalibrationMismatch if the frame's calibration differs from the
  // rows already held. reset() is required after a retune.
  void push(SpectrumFrame frame);
  void reset() noexcept { rows_.clear(); }

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  const SpectrumFrame& row(std::size_t i) const { return rows_.at(i); }
  const SpectrumFrame& newest() const { return rows_.back(); }

  // Full copy, oldest first.
  std::vector<SpectrumFrame> snapshot() const { return {rows_.begin(), rows_.end()}; }

 private:
  std::deque<SpectrumFrame> rows_;
};

struct Peak {
  double center_hz = 0.0;     // power-weighted centroid of the run
  double bandwidth_hz = 0.0;  // run length * bin width
  double peak_db = 0.0;
  std::size_t lo = 0;  // inclusive bin range
  std::size_t hi = 0;
};

// Maximal runs of bins strictly above cfg.threshold_db. For operator display
// only; never fed into model prompts.
std::vector<Peak> detect_peaks(const SpectrumFrame& frame, const PipelineConfig& cfg);

// Streaming stage chain: blocks in, averaged frames out to the waterfall.
class SpectrumPipeline {
 public:
  SpectrumPipeline(const CaptureSettings& settings, PipelineConfig cfg);

  // Returns true when a new averaged frame was produced (and pushed to the
  // waterfall).
  bool process(const IQBlock& block);

  const PipelineConfig& config() const noexcept { return cfg_; }
  // Averaging changes restart the current group; threshold changes apply to
  // the next detect_peaks call.
  void set_config(const PipelineConfig& cfg);

  const CaptureSettings& settings() const noexcept { return settings_; }
  const WaterfallBuffer& waterfall() const noexcept { return waterfall_; }
  const SpectrumFrame* latest() const noexcept { return has_latest_ ? &latest_ : nullptr; }
  std::uint64_t frames_produced() const noexcept { return produced_; }

 private:
  CaptureSettings settings_;
  PipelineConfig cfg_;
  std::unique_ptr<SpectralTransform> fft_;
  std::vector<SpectrumFrame> pending_;
  WaterfallBuffer waterfall_;
  SpectrumFrame latest_;
  bool has_latest_ = false;
  std::uint64_t produced_ = 0;
};

}  // namespace rfa
