#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "rfa/capture_file.hpp"
#include "rfa/error.hpp"
#include "rfa/hardware_source.hpp"
#include "rfa/scene.hpp"

namespace {

using namespace rfa;
namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rfa_tests";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Settings, Validation) {
  EXPECT_NO_THROW(validate(CaptureSettings{806e6, 20e6, 30.0, 2048}));
  EXPECT_THROW(validate(CaptureSettings{-1.0, 20e6, 0.0, 2048}), ConfigError);
  EXPECT_THROW(validate(CaptureSettings{806e6, 0.0, 0.0, 2048}), ConfigError);
  EXPECT_THROW(validate(CaptureSettings{806e6, 20e6, std::nan(""), 2048}), ConfigError);
  EXPECT_THROW(validate(CaptureSettings{806e6, 20e6, 0.0, 1000}), ConfigError);
  EXPECT_THROW(validate(CaptureSettings{806e6, 20e6, 0.0, 32}), ConfigError);
  EXPECT_TRUE(is_valid_fft_size(64));
  EXPECT_FALSE(is_valid_fft_size(96));
}

TEST(Scene, EmitterValidation) {
  auto s = oracle::single_emitter(98e6, 10e6, EmitterKind::fm_like, 0.2e6, 20, 1.0, 4);
  EXPECT_NO_THROW(validate(s));
  s.emitters[0].duty = 0.5;  // continuous kinds cannot be gated
  EXPECT_THROW(validate(s), ConfigError);
  s.emitters[0].duty = 1.0;
  s.emitters[0].offset_hz = 6e6;  // outside the captured span
  EXPECT_THROW(validate(s), ConfigError);
  s.emitters[0].offset_hz = 0.0;
  s.emitters[0].bandwidth_hz = 0.0;
  EXPECT_THROW(validate(s), ConfigError);
  s.emitters[0].bandwidth_hz = 0.2e6;
  s.duration_blocks = 0;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Scene, DeterministicForFixedSeeds) {
  const auto s = oracle::single_emitter(433.92e6, 5e6, EmitterKind::pulsed_ook, 0.1e6, 20, 0.3, 8);
  const auto a = generate_all(s);
  const auto b = generate_all(s);
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].samples, b[i].samples);
    EXPECT_EQ(a[i].block_index, i);
  }
  auto other = s;
  other.noise_seed += 1;
  EXPECT_NE(generate_all(other)[0].samples, a[0].samples);
}

TEST(Scene, NoiseFloorIsCalibrated) {
  SceneSpec s;
  s.settings = {98e6, 10e6, 0.0, 1024};
  s.noise_floor_db = -60.0;
  s.duration_blocks = 800;
  s.noise_seed = 3;
  const auto rows = oracle::waterfall_of(s);
  const auto mean = oracle::mean_power_db(rows);
  double acc = 0.0;
  for (double v : mean) acc += std::pow(10.0, v / 10.0);
  EXPECT_NEAR(10.0 * std::log10(acc / mean.size()), -60.0, 0.25);
}

TEST(Scene, EmitterSitsAtItsSnr) {
  const auto s = oracle::single_emitter(806e6, 20e6, EmitterKind::lte_like, 10e6, 15.0, 1.0, 800);
  const auto mean = oracle::mean_power_db(oracle::waterfall_of(s));
  const auto bins = occupied_bins(0.0, 10e6, s.settings);
  double in = 0.0;
  for (auto k = bins.lo; k <= bins.hi; ++k) in += std::pow(10.0, mean[static_cast<std::size_t>(k)] / 10.0);
  EXPECT_NEAR(10.0 * std::log10(in / static_cast<double>(bins.size())), -70.0 + 15.0, 0.5);
}

TEST(Scene, OccupancyClassesFromMeasuredWidth) {
  const auto lte = oracle::single_emitter(806e6, 20e6, EmitterKind::lte_like, 20e6, 15, 1.0, 400);
  EXPECT_EQ(classify_occupancy(oracle::measured_bandwidth_mhz(lte)), "wide");
  const auto fm = oracle::single_emitter(98e6, 10e6, EmitterKind::fm_like, 0.2e6, 30, 1.0, 400);
  const double fm_bw = oracle::measured_bandwidth_mhz(fm);
  EXPECT_GT(fm_bw, 0.0);
  EXPECT_EQ(classify_occupancy(fm_bw), "narrow");
}

TEST(Scene, PulsedDutyCycleMeasured) {
  const auto s = oracle::single_emitter(433.92e6, 5e6, EmitterKind::pulsed_ook, 0.1e6, 20, 0.3, 500);
  EXPECT_NEAR(oracle::measured_duty(s, 500), 0.3, 0.05);
}

TEST(Scene, HopperVisitsManyChannels) {
  auto s = oracle::single_emitter(2400e6, 40e6, EmitterKind::hop_burst, 1e6, 10, 1.0, 200);
  s.emitters[0].hop_channels = 79;
  const auto channels = channel_offsets_hz(s.emitters[0], s.settings);
  ASSERT_EQ(channels.size(), 79u);
  EXPECT_NEAR(channels.front(), -19.5e6, 1.0);
  EXPECT_NEAR(channels.back(), 19.5e6, 1.0);
  SceneSource src(s);
  std::set<double> seen;
  while (src.next()) {
    ASSERT_TRUE(src.emitter_active(0));
    seen.insert(src.emitter_offset_hz(0));
  }
  EXPECT_GT(seen.size(), 50u);
}

TEST(Scene, OccupiedBinsClipToSpan) {
  const CaptureSettings s{0.0, 1024.0, 0.0, 1024};
  auto r = occupied_bins(0.0, 10.0, s);
  EXPECT_EQ(r.size(), 10);
  EXPECT_TRUE(r.contains(512));
  r = occupied_bins(0.0, 5000.0, s);
  EXPECT_EQ(r.lo, 0);
  EXPECT_EQ(r.hi, 1023);
  r = occupied_bins(0.0, 0.1, s);
  EXPECT_EQ(r.size(), 1);
}

TEST(Scene, JsonRoundTrip) {
  auto s = oracle::single_emitter(2437e6, 40e6, EmitterKind::wifi_burst, 20e6, 8, 0.3, 12, 99);
  const auto path = temp_path("scene.json");
  save_scene(s, path.string());
  EXPECT_EQ(load_scene(path.string()), s);
  EXPECT_EQ(emitter_kind_from_string("hop_burst"), EmitterKind::hop_burst);
  EXPECT_THROW(emitter_kind_from_string("radar"), ConfigError);
}

TEST(Capture, RoundTripPreservesSamples) {
  const auto s = oracle::single_emitter(98e6, 10e6, EmitterKind::fm_like, 0.2e6, 30, 1.0, 5);
  const auto blocks = generate_all(s);
  const auto path = temp_path("roundtrip.rfa");
  write_capture(path, s.settings, blocks);
  EXPECT_EQ(fs::file_size(path), kCaptureHeaderSize + 5 * 2048 * 8);
  const auto cap = read_capture(path);
  EXPECT_EQ(cap.settings, s.settings);
  const auto back = capture_blocks(cap);
  ASSERT_EQ(back.size(), blocks.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].samples, blocks[i].samples);

  CaptureReplaySource replay(cap);
  int n = 0;
  while (auto b = replay.next()) {
    EXPECT_EQ(b->block_index, static_cast<std::uint64_t>(n));
    ++n;
  }
  EXPECT_EQ(n, 5);
}

TEST(Capture, RejectsCorruptFiles) {
  const auto bad_magic = temp_path("bad_magic.rfa");
  std::ofstream(bad_magic, std::ios::binary) << "NOPE and some more bytes to fill the header";
  EXPECT_THROW(read_capture(bad_magic), FormatError);
  EXPECT_THROW(read_capture(temp_path("missing.rfa")), FormatError);

  const auto s = oracle::single_emitter(98e6, 10e6, EmitterKind::fm_like, 0.2e6, 30, 1.0, 1);
  const auto path = temp_path("truncated.rfa");
  write_capture(path, s.settings, generate_all(s));
  fs::resize_file(path, fs::file_size(path) - 8);
  EXPECT_THROW(read_capture(path), FormatError);
}

class FakeAdapter : public HardwareAdapter {
 public:
  std::unique_ptr<BlockSource> open(const CaptureSettings& settings) override {
    auto scene = oracle::single_emitter(settings.center_freq_hz, settings.sample_rate_hz, EmitterKind::fm_like,
                                        0.1e6, 20, 1.0, 2);
    scene.settings = settings;
    return generate_scene(scene);
  }
};

TEST(Hardware, UnavailableWithoutAdapter) {
  register_hardware_adapter(nullptr);
  EXPECT_FALSE(hardware_adapter_registered());
  EXPECT_THROW(open_hardware_source({98e6, 10e6, 0.0, 2048}), UnsupportedSourceError);
  EXPECT_THROW(open_hardware_source({98e6, -1.0, 0.0, 2048}), ConfigError);
}

TEST(Hardware, RegisteredAdapterIsUsed) {
  register_hardware_adapter(std::make_shared<FakeAdapter>());
  auto src = open_hardware_source({98e6, 10e6, 0.0, 1024});
  ASSERT_TRUE(src);
  EXPECT_EQ(src->settings().fft_size, 1024u);
  EXPECT_TRUE(src->next().has_value());
  register_hardware_adapter(nullptr);
}

}  // namespace
