#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls into the code under test except to
// read its outputs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rfa/dsp.hpp"
#include "rfa/evaluation.hpp"
#include "rfa/scene.hpp"

namespace oracle {

// Textbook O(N^2) DFT of the periodic-Hann-windowed block, centred so index 0
// is the most negative frequency, in dB with the same power floor.
inline std::vector<double> naive_spectrum_db(const std::vector<std::complex<float>>& x, double db_floor) {
  const std::size_t n = x.size();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::complex<double>> xw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
    xw[i] = std::complex<double>(x[i]) * w;
  }
  const double floor_power = std::pow(10.0, db_floor / 10.0);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t bin = (k + n / 2) % n;
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Reduce the phase index modulo n so the angle stays small and exact.
      const std::size_t m = (bin * i) % n;
      const double angle = -two_pi * static_cast<double>(m) / static_cast<double>(n);
      acc += xw[i] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = 10.0 * std::log10(std::max(std::norm(acc), floor_power));
  }
  return out;
}

inline rfa::IQBlock random_block(std::mt19937_64& rng, std::uint32_t n, double scale = 1.0) {
  std::normal_distribution<float> normal(0.0f, static_cast<float>(scale));
  rfa::IQBlock b;
  b.settings = {100e6, 10e6, 0.0, n};
  b.samples.resize(n);
  for (auto& s : b.samples) s = {normal(rng), normal(rng)};
  return b;
}

// Linear-power mean over rows, per bin, in dB.
inline std::vector<double> mean_power_db(const std::vector<rfa::SpectrumFrame>& rows) {
  std::vector<double> acc(rows.front().power_db.size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::pow(10.0, r.power_db[k] / 10.0);
  }
  for (auto& v : acc) v = 10.0 * std::log10(v / static_cast<double>(rows.size()));
  return acc;
}

// Width in MHz of the widest contiguous run of bins above `threshold_db`.
inline double widest_run_mhz(const std::vector<double>& db, double bin_hz, double threshold_db) {
  std::size_t best = 0, run = 0;
  for (double v : db) {
    run = v > threshold_db ? run + 1 : 0;
    best = std::max(best, run);
  }
  return static_cast<double>(best) * bin_hz / 1e6;
}

// Drives a scene through a pipeline and returns the full waterfall.
inline std::vector<rfa::SpectrumFrame> waterfall_of(const rfa::SceneSpec& scene, std::uint32_t averaging = 4) {
  rfa::PipelineConfig cfg;
  cfg.averaging_frames = averaging;
  rfa::SpectrumPipeline chain(scene.settings, cfg);
  auto src = rfa::generate_scene(scene);
  while (auto b = src->next()) chain.process(*b);
  return chain.waterfall().snapshot();
}

// Measured occupancy class of a single-emitter scene: widest run of the
// time-averaged spectrum more than 6 dB above the configured noise floor.
inline double measured_bandwidth_mhz(const rfa::SceneSpec& scene) {
  const auto rows = waterfall_of(scene);
  const double bin_hz = scene.settings.sample_rate_hz / scene.settings.fft_size;
  return widest_run_mhz(mean_power_db(rows), bin_hz, scene.noise_floor_db + 6.0);
}

// Fraction of single-block frames whose power in the emitter's bins stands
// more than 10 dB above the floor.
inline double measured_duty(const rfa::SceneSpec& scene, std::size_t frames) {
  const auto& e = scene.emitters.front();
  const auto bins = rfa::occupied_bins(e.offset_hz, e.bandwidth_hz, scene.settings);
  rfa::PipelineConfig cfg;
  auto src = rfa::generate_scene(scene);
  std::size_t on = 0, seen = 0;
  while (seen < frames) {
    auto b = src->next();
    if (!b) break;
    const auto f = rfa::compute_spectrum(*b, cfg);
    double peak = -1e300;
    for (auto k = bins.lo; k <= bins.hi; ++k) peak = std::max(peak, f.power_db[static_cast<std::size_t>(k)]);
    on += peak > scene.noise_floor_db + 10.0 ? 1 : 0;
    ++seen;
  }
  return static_cast<double>(on) / static_cast<double>(seen);
}

inline rfa::SceneSpec single_emitter(double fc, double sr, rfa::EmitterKind kind, double bw, double snr,
                                     double duty, std::uint64_t blocks, std::uint64_t seed = 7) {
  rfa::SceneSpec s;
  s.settings = {fc, sr, 30.0, 2048};
  s.noise_floor_db = -70.0;
  s.duration_blocks = blocks;
  s.noise_seed = seed;
  rfa::EmitterSpec e;
  e.kind = kind;
  e.bandwidth_hz = bw;
  e.snr_db = snr;
  e.duty = duty;
  e.seed = seed + 1;
  s.emitters.push_back(e);
  return s;
}

// Records for one backend with `total` bandwidth-bearing responses at the
// capture sample rate, the first `leaked` of which cite the settings.
inline std::vector<rfa::TrialRecord> plr_fixture(const std::string& backend, int total, int leaked) {
  std::vector<rfa::TrialRecord> out;
  for (int i = 0; i < total; ++i) {
    rfa::TrialRecord r;
    r.scenario = "P" + std::to_string(i);
    r.backend = backend;
    r.trial = 1;
    r.settings = {806e6, 20e6, 0.0, 2048};
    r.extraction.bandwidth_mhz = 20.0;
    const bool leaks = i < leaked;
    r.extraction.references_settings = leaks;
    r.extraction.image_grounded_evidence = !leaks;
    r.score.leakage = leaks ? rfa::LeakageVerdict::leaked : rfa::LeakageVerdict::grounded;
    out.push_back(r);
  }
  return out;
}

// Two extractions agree when they would score identically against any
// ground truth: same five classes and the same no-signal claim.
inline bool extraction_agrees(const rfa::AttributeExtraction& a, const rfa::AttributeExtraction& b) {
  return a.values == b.values && a.claims_no_signal == b.claims_no_signal;
}

}  // namespace oracle
