#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/source.hpp"

namespace rfa {

enum class EmitterKind { fm_like, lte_like, pulsed_ook, wifi_burst, hop_burst };

std::string_view to_string(EmitterKind kind) noexcept;
EmitterKind emitter_kind_from_string(std::string_view name);

// True for kinds that must run with duty == 1.
bool is_continuous(EmitterKind kind) noexcept;

struct EmitterSpec {
  EmitterKind kind = EmitterKind::fm_like;
  double offset_hz = 0.0;
  double bandwidth_hz = 1.0;
  // Occupied bins sit this far above the floor in total (signal + noise)
  // power.
  double snr_db = 10.0;
  double duty = 1.0;
  std::uint32_t hop_channels = 1;
  std::uint64_t seed = 0;

  bool operator==(const EmitterSpec&) const = default;
};

struct SceneSpec {
  CaptureSettings settings;
  double noise_floor_db = -60.0;  // expected per-bin power of the windowed periodogram
  std::vector<EmitterSpec> emitters;
  std::uint64_t duration_blocks = 1;
  std::uint64_t noise_seed = 0;

  bool operator==(const SceneSpec&) const = default;
};

void validate(const EmitterSpec& emitter, const CaptureSettings& settings);
void validate(const SceneSpec& spec);

// Per-sample variance of the complex noise that lands at `noise_floor_db` in
// each bin of a Hann-windowed, unnormalized N-point periodogram.
double noise_sample_variance(double noise_floor_db, std::uint32_t fft_size) noexcept;

// Inclusive range of centred spectrum bins (index 0 = fc - SR/2).
struct BinRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t size() const noexcept { return hi - lo + 1; }
  bool contains(std::int64_t k) const noexcept { return k >= lo && k <= hi; }
};

// Bins nominally occupied by a band of `bandwidth_hz` centred `offset_hz` from
// the capture centre (at least one bin, clipped to the capture span).
BinRange occupied_bins(double offset_hz, double bandwidth_hz,
                       const CaptureSettings& settings);

// Frequencies (relative to the capture centre) of the hop channels an emitter
// can occupy. A single entry for non-hopping kinds.
std::vector<double> channel_offsets_hz(const EmitterSpec& emitter,
                                       const CaptureSettings& settings);

// Deterministic synthetic scene. Validates on construction.
class SceneSource final : public BlockSource {
 public:
  explicit SceneSource(SceneSpec spec);
  ~SceneSource() override;
  SceneSource(SceneSource&&) noexcept;
  SceneSource& operator=(SceneSource&&) noexcept;

  std::optional<IQBlock> next() override;
  const CaptureSettings& settings() const override { return spec_.settings; }
  const SceneSpec& spec() const noexcept { return spec_; }

  // Whether emitter `i` transmitted in the most recently produced block, and
  // on which channel offset.
  bool emitter_active(std::size_t i) const;
  double emitter_offset_hz(std::size_t i) const;

 private:
  struct Impl;
  SceneSpec spec_;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<SceneSource> generate_scene(const SceneSpec& spec);

// Convenience: drain the whole scene into memory.
std::vector<IQBlock> generate_all(const SceneSpec& spec);

void to_json(nlohmann::json& j, const CaptureSettings& s);
void from_json(const nlohmann::json& j, CaptureSettings& s);
void to_json(nlohmann::json& j, const EmitterSpec& e);
void from_json(const nlohmann::json& j, EmitterSpec& e);
void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

SceneSpec load_scene(const std::string& path);
void save_scene(const SceneSpec& spec, const std::string& path);

}  // namespace rfa
