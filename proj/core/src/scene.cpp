#include "rfa/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "rfa/error.hpp"
#include "rfa/transform.hpp"

namespace rfa {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Hann-windowed periodogram gains, relative to N^2 for a bin-centred line
// and to N for white noise.
constexpr double kHannToneGain = 0.25;         // (sum w / N)^2
constexpr double kHannLineSpreadGain = 0.375;  // 0.5^2 + 2 * 0.25^2
constexpr double kHannNoiseGain = 0.375;       // sum w^2 / N

enum Stream : std::uint32_t { kNoise = 0, kGate = 1, kSamples = 2, kHop = 3, kPhase = 4 };

std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

double wrap_cycles(double cycles) { return cycles - std::floor(cycles); }

// Per-bin signal power that puts occupied bins `snr_db` above the floor in
// total power.
double signal_bin_power(double noise_floor_db, double snr_db) {
  return std::max(0.0, db_to_power(noise_floor_db) * (db_to_power(snr_db) - 1.0));
}

bool is_band_kind(EmitterKind kind) {
  return kind == EmitterKind::lte_like || kind == EmitterKind::wifi_burst ||
         kind == EmitterKind::hop_burst;
}

}  // namespace

std::string_view to_string(EmitterKind kind) noexcept {
  switch (kind) {
    case EmitterKind::fm_like: return "fm_like";
    case EmitterKind::lte_like: return "lte_like";
    case EmitterKind::pulsed_ook: return "pulsed_ook";
    case EmitterKind::wifi_burst: return "wifi_burst";
    case EmitterKind::hop_burst: return "hop_burst";
  }
  return "unknown";
}

EmitterKind emitter_kind_from_string(std::string_view name) {
  for (auto kind : {EmitterKind::fm_like, EmitterKind::lte_like, EmitterKind::pulsed_ook,
                    EmitterKind::wifi_burst, EmitterKind::hop_burst}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown emitter kind '" + std::string(name) + "'");
}

bool is_continuous(EmitterKind kind) noexcept {
  return kind == EmitterKind::fm_like || kind == EmitterKind::lte_like;
}

void validate(const EmitterSpec& e, const CaptureSettings& settings) {
  const std::string who = "emitter " + std::string(to_string(e.kind)) + ": ";
  if (!std::isfinite(e.bandwidth_hz) || e.bandwidth_hz <= 0.0) {
    throw ConfigError(who + "bandwidth_hz must be > 0");
  }
  if (!std::isfinite(e.offset_hz)) throw ConfigError(who + "offset_hz must be finite");
  if (!std::isfinite(e.snr_db)) throw ConfigError(who + "snr_db must be finite");
  if (!(e.duty >= 0.0 && e.duty <= 1.0)) throw ConfigError(who + "duty must lie in [0, 1]");
  if (is_continuous(e.kind) && e.duty != 1.0) {
    throw ConfigError(who + "duty must be 1.0 for continuous kinds");
  }
  if (e.hop_channels < 1) throw ConfigError(who + "hop_channels must be >= 1");
  const double half_span = settings.sample_rate_hz / 2.0;
  if (std::abs(e.offset_hz) + e.bandwidth_hz / 2.0 > half_span * (1.0 + 1e-12)) {
    throw ConfigError(who + "|offset_hz| + bandwidth_hz/2 must not exceed sample_rate_hz/2");
  }
}

void validate(const SceneSpec& spec) {
  validate(spec.settings);
  if (!std::isfinite(spec.noise_floor_db)) throw ConfigError("noise_floor_db must be finite");
  if (spec.duration_blocks < 1) throw ConfigError("duration_blocks must be >= 1");
  for (const auto& e : spec.emitters) validate(e, spec.settings);
}

double noise_sample_variance(double noise_floor_db, std::uint32_t fft_size) noexcept {
  return db_to_power(noise_floor_db) / (kHannNoiseGain * static_cast<double>(fft_size));
}

BinRange occupied_bins(double offset_hz, double bandwidth_hz, const CaptureSettings& s) {
  const auto n = static_cast<std::int64_t>(s.fft_size);
  const double step = s.sample_rate_hz / static_cast<double>(s.fft_size);
  const auto count = std::clamp<std::int64_t>(std::llround(bandwidth_hz / step), 1, n);
  const std::int64_t centre = std::llround(offset_hz / step) + n / 2;
  std::int64_t lo = centre - count / 2;
  lo = std::clamp<std::int64_t>(lo, 0, n - count);
  return {lo, lo + count - 1};
}

std::vector<double> channel_offsets_hz(const EmitterSpec& e, const CaptureSettings& s) {
  if (e.kind != EmitterKind::hop_burst || e.hop_channels == 1) return {e.offset_hz};
  const double lo = -s.sample_rate_hz / 2.0 + e.bandwidth_hz / 2.0;
  const double hi = s.sample_rate_hz / 2.0 - e.bandwidth_hz / 2.0;
  std::vector<double> out(e.hop_channels);
  const double spacing = (hi - lo) / static_cast<double>(e.hop_channels - 1);
  for (std::uint32_t i = 0; i < e.hop_channels; ++i) out[i] = lo + spacing * i;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class EmitterState {
 public:
  EmitterState(const EmitterSpec& spec, const SceneSpec& scene)
      : spec_(spec),
        settings_(scene.settings),
        n_(scene.settings.fft_size),
        step_(scene.settings.sample_rate_hz / scene.settings.fft_size),
        bin_power_(signal_bin_power(scene.noise_floor_db, spec.snr_db)),
        gate_rng_(make_engine(spec.seed, kGate)),
        sample_rng_(make_engine(spec.seed, kSamples)),
        hop_rng_(make_engine(spec.seed, kHop)),
        channels_(channel_offsets_hz(spec, scene.settings)),
        current_offset_(spec.offset_hz) {
    auto phase_rng = make_engine(spec.seed, kPhase);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    gate_phase_ = unit(phase_rng);
    carrier_phase_ = kTwoPi * unit(phase_rng);
    mod_phase_ = kTwoPi * unit(phase_rng);

    const double nn = static_cast<double>(n_);
    if (is_band_kind(spec.kind)) {
      line_sigma_ = std::sqrt(bin_power_ / (kHannLineSpreadGain * nn * nn));
    } else if (is_pure_tone()) {
      amplitude_ = std::sqrt(bin_power_ / (kHannToneGain * nn * nn));
    } else {
      // Spread the energy evenly over the nominal band (Parseval on the
      // windowed block).
      const double bins = std::max(1.0, std::round(spec.bandwidth_hz / step_));
      amplitude_ = std::sqrt(bins * bin_power_ / (kHannNoiseGain * nn * nn));
      deviation_hz_ = 0.4 * spec.bandwidth_hz;
      mod_rate_hz_ = 0.025 * spec.bandwidth_hz;
    }
  }

  void add(std::uint64_t block_index, std::span<std::complex<double>> acc,
           SpectralTransform& fft) {
    active_ = gate(block_index);
    if (!active_) return;
    if (spec_.kind == EmitterKind::hop_burst) {
      std::uniform_int_distribution<std::size_t> pick(0, channels_.size() - 1);
      current_offset_ = channels_[pick(hop_rng_)];
    }
    if (is_band_kind(spec_.kind)) {
      add_band(acc, fft);
    } else {
      add_tone(block_index, acc);
    }
  }

  bool active() const noexcept { return active_; }
  double current_offset() const noexcept { return current_offset_; }

 private:
  bool is_pure_tone() const {
    return spec_.kind == EmitterKind::pulsed_ook || spec_.bandwidth_hz <= 2.0 * step_;
  }

  bool gate(std::uint64_t k) {
    if (spec_.duty >= 1.0) return true;
    if (spec_.duty <= 0.0) return false;
    if (spec_.kind == EmitterKind::pulsed_ook) {
      const double d = spec_.duty;
      const double kk = static_cast<double>(k);
      return std::floor((kk + 1.0) * d + gate_phase_) > std::floor(kk * d + gate_phase_);
    }
    std::bernoulli_distribution on(spec_.duty);
    return on(gate_rng_);
  }

  // Bin-centred complex Gaussian lines across the band, synthesized per block.
  void add_band(std::span<std::complex<double>> acc, SpectralTransform& fft) {
    const BinRange bins = occupied_bins(current_offset_, spec_.bandwidth_hz, settings_);
    const auto n = static_cast<std::int64_t>(n_);
    lines_.assign(n_, {0.0, 0.0});
    std::normal_distribution<double> normal(0.0, line_sigma_ / std::numbers::sqrt2);
    for (std::int64_t k = bins.lo; k <= bins.hi; ++k) {
      const std::int64_t m = ((k - n / 2) % n + n) % n;  // unshifted FFT index
      const double re = normal(sample_rng_);
      const double im = normal(sample_rng_);
      lines_[static_cast<std::size_t>(m)] = {re, im};
    }
    block_.resize(n_);
    fft.inverse(lines_, block_);
    for (std::size_t i = 0; i < n_; ++i) acc[i] += block_[i];
  }

  void add_tone(std::uint64_t block_index, std::span<std::complex<double>> acc) {
    const double sr = settings_.sample_rate_hz;
    const double beta = mod_rate_hz_ > 0.0 ? deviation_hz_ / mod_rate_hz_ : 0.0;
    const std::uint64_t first = block_index * n_;
    for (std::size_t i = 0; i < n_; ++i) {
      const double t_samples = static_cast<double>(first + i);
      double phase = carrier_phase_ + kTwoPi * wrap_cycles(spec_.offset_hz / sr * t_samples);
      if (beta > 0.0) {
        phase -= beta * std::cos(kTwoPi * wrap_cycles(mod_rate_hz_ / sr * t_samples) + mod_phase_);
      }
      acc[i] += std::polar(amplitude_, phase);
    }
  }

  EmitterSpec spec_;
  CaptureSettings settings_;
  std::size_t n_;
  double step_;
  double bin_power_;
  std::mt19937_64 gate_rng_;
  std::mt19937_64 sample_rng_;
  std::mt19937_64 hop_rng_;
  std::vector<double> channels_;
  double current_offset_;
  double gate_phase_ = 0.0;
  double carrier_phase_ = 0.0;
  double mod_phase_ = 0.0;
  double line_sigma_ = 0.0;
  double amplitude_ = 0.0;
  double deviation_hz_ = 0.0;
  double mod_rate_hz_ = 0.0;
  bool active_ = false;
  std::vector<std::complex<double>> lines_;
  std::vector<std::complex<double>> block_;
};

}  // namespace

struct SceneSource::Impl {
  explicit Impl(const SceneSpec& spec)
      : fft(make_fft(spec.settings.fft_size)),
        noise_rng(make_engine(spec.noise_seed, kNoise)),
        noise(0.0, std::sqrt(noise_sample_variance(spec.noise_floor_db, spec.settings.fft_size) / 2.0)) {
    emitters.reserve(spec.emitters.size());
    for (const auto& e : spec.emitters) emitters.emplace_back(e, spec);
    acc.resize(spec.settings.fft_size);
  }

  std::unique_ptr<SpectralTransform> fft;
  std::mt19937_64 noise_rng;
  std::normal_distribution<double> noise;
  std::vector<EmitterState> emitters;
  std::vector<std::complex<double>> acc;
  std::uint64_t next_index = 0;
};

SceneSource::SceneSource(SceneSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  impl_ = std::make_unique<Impl>(spec_);
}

SceneSource::~SceneSource() = default;
SceneSource::SceneSource(SceneSource&&) noexcept = default;
SceneSource& SceneSource::operator=(SceneSource&&) noexcept = default;

std::optional<IQBlock> SceneSource::next() {
  auto& s = *impl_;
  if (s.next_index >= spec_.duration_blocks) return std::nullopt;
  const std::uint64_t index = s.next_index++;

  for (auto& v : s.acc) v = {s.noise(s.noise_rng), s.noise(s.noise_rng)};
  for (auto& e : s.emitters) e.add(index, s.acc, *s.fft);

  IQBlock block;
  block.block_index = index;
  block.settings = spec_.settings;
  block.samples.resize(s.acc.size());
  std::transform(s.acc.begin(), s.acc.end(), block.samples.begin(),
                 [](std::complex<double> v) { return Sample(static_cast<float>(v.real()),
                                                            static_cast<float>(v.imag())); });
  return block;
}

bool SceneSource::emitter_active(std::size_t i) const { return impl_->emitters.at(i).active(); }

double SceneSource::emitter_offset_hz(std::size_t i) const {
  return impl_->emitters.at(i).current_offset();
}

std::unique_ptr<SceneSource> generate_scene(const SceneSpec& spec) {
  return std::make_unique<SceneSource>(spec);
}

std::vector<IQBlock> generate_all(const SceneSpec& spec) {
  SceneSource source(spec);
  std::vector<IQBlock> out;
  out.reserve(spec.duration_blocks);
  while (auto block = source.next()) out.push_back(std::move(*block));
  return out;
}

// --- serialization ---------------------------------------------------------

void to_json(nlohmann::json& j, const CaptureSettings& s) {
  j = {{"center_freq_hz", s.center_freq_hz},
       {"sample_rate_hz", s.sample_rate_hz},
       {"gain_db", s.gain_db},
       {"fft_size", s.fft_size}};
}

void from_json(const nlohmann::json& j, CaptureSettings& s) {
  s = CaptureSettings{};
  j.at("center_freq_hz").get_to(s.center_freq_hz);
  j.at("sample_rate_hz").get_to(s.sample_rate_hz);
  s.gain_db = j.value("gain_db", 0.0);
  s.fft_size = j.value("fft_size", kDefaultFftSize);
}

void to_json(nlohmann::json& j, const EmitterSpec& e) {
  j = {{"kind", to_string(e.kind)},     {"offset_hz", e.offset_hz}, {"bandwidth_hz", e.bandwidth_hz},
       {"snr_db", e.snr_db},            {"duty", e.duty},           {"hop_channels", e.hop_channels},
       {"seed", e.seed}};
}

void from_json(const nlohmann::json& j, EmitterSpec& e) {
  e = EmitterSpec{};
  e.kind = emitter_kind_from_string(j.at("kind").get<std::string>());
  e.offset_hz = j.value("offset_hz", 0.0);
  j.at("bandwidth_hz").get_to(e.bandwidth_hz);
  j.at("snr_db").get_to(e.snr_db);
  e.duty = j.value("duty", 1.0);
  e.hop_channels = j.value("hop_channels", 1u);
  e.seed = j.value("seed", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
  j = {{"settings", s.settings},
       {"noise_floor_db", s.noise_floor_db},
       {"emitters", s.emitters},
       {"duration_blocks", s.duration_blocks},
       {"noise_seed", s.noise_seed}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
  s = SceneSpec{};
  j.at("settings").get_to(s.settings);
  j.at("noise_floor_db").get_to(s.noise_floor_db);
  s.emitters = j.value("emitters", std::vector<EmitterSpec>{});
  j.at("duration_blocks").get_to(s.duration_blocks);
  s.noise_seed = j.value("noise_seed", std::uint64_t{0});
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene file '" + path + "'");
  try {
    return nlohmann::json::parse(in).get<SceneSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scene file '" + path + "': " + e.what());
  }
}

void save_scene(const SceneSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scene file '" + path + "'");
  out << nlohmann::json(spec).dump(2) << '\n';
}

}  // namespace rfa
