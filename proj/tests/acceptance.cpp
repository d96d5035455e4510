// Acceptance runner: one PASS/FAIL line per primary criterion. Exits nonzero
// when any criterion fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "oracles.hpp"
#include "rfa/backend.hpp"
#include "rfa/error.hpp"
#include "rfa/extract.hpp"
#include "rfa/image.hpp"
#include "rfa/prompt.hpp"
#include "rfa/render.hpp"
#include "rfa/report.hpp"
#include "rfa/suite.hpp"
#include "rfa/util.hpp"

namespace {

using namespace rfa;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const std::string kData = RFA_DATA_DIR;
const std::string kFixtures = RFA_FIXTURE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Outcome dft_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  const PipelineConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto block = oracle::random_block(rng, 512, 0.01 + 0.1 * i);
    const auto got = compute_spectrum(block, cfg).power_db;
    const auto want = oracle::naive_spectrum_db(block.samples, cfg.db_floor);
    for (std::size_t k = 0; k < want.size(); ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-6 && elapsed < 10.0,
          fmt("max |error| %.3g dB over 100 blocks of 512", worst) + fmt(", %.2f s", elapsed)};
}

Outcome hann_checks() {
  bool ok = true;
  double worst_gain = 0.0;
  for (std::size_t n : {64u, 512u, 1024u, 2048u, 8192u}) {
    const auto w = hann_window(n);
    const double gain = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
    worst_gain = std::max(worst_gain, std::abs(gain - 0.5));
    ok = ok && std::abs(gain - 0.5) <= 1e-9 && w[0] == 0.0 && std::abs(w[n / 2] - 1.0) <= 1e-15;
  }
  return {ok, fmt("max |sum(w)/N - 0.5| = %.2g; w[0] = 0 and w[N/2] = 1 for N in {64..8192}", worst_gain)};
}

Outcome waterfall_invariants() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(0, 500), coin(0, 15);
  std::size_t rejected = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    WaterfallBuffer buf;
    std::deque<std::uint64_t> model;
    std::uint64_t id = 0;
    const int pushes = len(rng);
    for (int i = 0; i < pushes; ++i) {
      SpectrumFrame f;
      f.power_db = {0.0, 0.0, 0.0};
      if (coin(rng) == 0 && !model.empty()) {
        f.freq_step_hz = 2.0;
        try {
          buf.push(f);
          return {false, "frame with a different calibration was accepted"};
        } catch (const CalibrationMismatch&) {
          ++rejected;
        }
        continue;
      }
      f.block_index = id;
      buf.push(f);
      model.push_back(id++);
      if (model.size() > WaterfallBuffer::kCapacity) model.pop_front();
      if (buf.size() > WaterfallBuffer::kCapacity) return {false, "length exceeded 200"};
    }
    if (buf.size() != model.size()) return {false, "length differs from FIFO model"};
    for (std::size_t i = 0; i < model.size(); ++i) {
      if (buf.row(i).block_index != model[i]) return {false, "row order differs from FIFO model"};
    }
  }
  return {true, "10000 sequences, FIFO order exact, " + std::to_string(rejected) + " mismatched frames rejected"};
}

Outcome simulator_calibration() {
  const auto lte = oracle::single_emitter(806e6, 20e6, EmitterKind::lte_like, 20e6, 15, 1.0, 400);
  const auto fm = oracle::single_emitter(98e6, 10e6, EmitterKind::fm_like, 0.2e6, 30, 1.0, 400);
  const auto ook = oracle::single_emitter(433.92e6, 5e6, EmitterKind::pulsed_ook, 0.1e6, 20, 0.3, 500);
  const double lte_bw = oracle::measured_bandwidth_mhz(lte);
  const double fm_bw = oracle::measured_bandwidth_mhz(fm);
  const double duty = oracle::measured_duty(ook, 500);
  const bool ok = classify_occupancy(lte_bw) == "wide" && fm_bw > 0.0 && classify_occupancy(fm_bw) == "narrow" &&
                  std::abs(duty - 0.3) <= 0.05;
  return {ok, fmt("lte %.2f MHz -> ", lte_bw) + std::string(classify_occupancy(lte_bw)) +
                  fmt(", fm %.3f MHz -> ", fm_bw) + std::string(fm_bw > 0 ? classify_occupancy(fm_bw) : "none") +
                  fmt(", pulsed duty %.3f", duty)};
}

Outcome prompt_and_hygiene() {
  const auto p = build_prompt({806e6, 20e6, 30.0, 2048});
  const bool golden = p.system_text == read_text_file(kFixtures + "/prompt_system.txt") &&
                      p.user_text == read_text_file(kFixtures + "/prompt_user_806_20.txt");
  if (!golden) return {false, "prompt differs from golden files"};

  const auto suite = load_suite(kData + "/default_suite.json");
  std::size_t bodies = 0;
  for (const auto& sc : suite.scenarios) {
    for (int t = 1; t <= sc.trials; ++t) {
      const auto in = prepare_trial(sc, t, PipelineConfig{}, RenderSpec{});
      const auto rules = trial_hygiene_rules(suite, in);
      // Every ground-truth label must be something the rules would catch.
      for (const auto& set : sc.ground_truth.sets) {
        for (const auto& label : set) {
          if (hygiene_violations(label, rules).empty()) return {false, "rules miss label '" + label + "'"};
        }
      }
      const AnalysisRequest req{in.png, in.settings, in.system_text, in.user_text};
      for (auto flavor : {ApiFlavor::openai_chat_image, ApiFlavor::ollama_generate_image}) {
        BackendProfile bp;
        bp.name = "probe";
        bp.endpoint_url = "http://127.0.0.1:9";
        bp.api_flavor = flavor;
        VlmClient client(bp, rules);
        auto body = client.wire_body(req, {}, nullptr);
        if (flavor == ApiFlavor::openai_chat_image) {
          body["messages"][1]["content"][0]["image_url"]["url"] = "";
        } else {
          body["images"] = nlohmann::json::array();
        }
        const auto bad = hygiene_violations(body.dump(), rules);
        if (!bad.empty()) return {false, sc.id + " request contains '" + bad.front() + "'"};
        ++bodies;
      }
    }
  }
  // Random tunings across the spectrum.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> fc(1e6, 6e9), sr(0.1e6, 60e6);
  for (int i = 0; i < 5000; ++i) {
    const auto q = build_prompt({std::round(fc(rng) / 1e4) * 1e4, std::round(sr(rng) / 1e4) * 1e4, 0.0, 2048});
    if (!hygiene_violations(q.system_text + "\n" + q.user_text, default_hygiene_rules()).empty()) {
      return {false, "fuzzed tuning produced a vocabulary word"};
    }
  }
  return {true, "golden prompt byte-equal; " + std::to_string(bodies) +
                    " request bodies over 6 scenarios and 5000 fuzzed tunings free of scoring vocabulary"};
}

Outcome reference_fixtures() {
  const auto suite = load_suite(kData + "/default_suite.json");
  const auto adj = Adjudications::load(kData + "/reference_adjudications.json");
  const auto replies = ReplayFixture::load(kData + "/reference_responses.json");
  const std::map<std::string, std::array<int, 6>> printed = {
      {"rf-gpt", {4, 5, 5, 5, 5, 2}}, {"qwen-base", {0, 0, 4, 4, 0, 0}}, {"llama-3.2v", {2, 4, 2, 3, 4, 0}}};
  int exact = 0, agree = 0;
  std::string misses;
  for (const auto& [backend, want] : printed) {
    for (std::size_t i = 0; i < suite.scenarios.size(); ++i) {
      const auto& sc = suite.scenarios[i];
      const auto x = adj.find(sc.id, backend, 1);
      if (x && score_paes(*x, sc.ground_truth).paes == want[i]) ++exact;
      const auto text = replies.find({sc.id, backend, 1});
      if (x && text && oracle::extraction_agrees(extract_attributes(*text), *x)) {
        ++agree;
      } else {
        misses += (misses.empty() ? "" : ", ") + backend + "/" + sc.id;
      }
    }
  }
  const bool ok = exact == 18 && agree >= 15;
  return {ok, "adjudicated PAES exact on " + std::to_string(exact) + "/18; extractor agrees on " +
                  std::to_string(agree) + "/18 (need 15)" + (misses.empty() ? "" : "; differs on " + misses)};
}

Outcome plr_and_identity(const fs::path& archive) {
  std::string detail;
  bool ok = true;
  for (const auto& [leaked, want] : std::vector<std::pair<int, double>>{{3, 0.15}, {11, 0.55}, {14, 0.70}}) {
    const auto rep = aggregate(oracle::plr_fixture("m", 20, leaked));
    const auto plr = rep.backend("m").plr;
    ok = ok && plr && std::abs(*plr - want) < 1e-12;
    detail += fmt("%.0f%% ", plr ? *plr * 100.0 : -1.0);
  }
  const auto rep = reaggregate(archive);
  for (const auto& b : rep.per_backend) {
    ok = ok && b.total_hallucinations == b.false_negative_count + b.tech_label_count;
    detail += "; " + b.backend + " " + std::to_string(b.false_negative_count) + "+" +
              std::to_string(b.tech_label_count) + "=" + std::to_string(b.total_hallucinations);
  }
  return {ok, "PLR fixtures " + detail};
}

Outcome leakage_rule() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> bw(0.001, 120.0), sr(0.2, 60.0), near(-3.0, 3.0);
  std::bernoulli_distribution coin(0.5);
  GroundTruth gt;
  for (auto a : kAttributes) gt[a] = {std::string(attribute_classes(a).front())};
  std::size_t outside = 0;
  for (int i = 0; i < 200000; ++i) {
    AttributeExtraction x;
    const double s = sr(rng);
    x.bandwidth_mhz = coin(rng) ? bw(rng) : s + near(rng);
    if (*x.bandwidth_mhz <= 0.0) continue;
    x.references_settings = coin(rng);
    x.image_grounded_evidence = coin(rng);
    if (std::abs(*x.bandwidth_mhz - s) > 1.0) {
      ++outside;
      if (detect_leakage(x, {1e9, s * 1e6, 0.0, 2048}, gt) == LeakageVerdict::leaked) {
        return {false, "leaked verdict outside the tolerance"};
      }
    }
  }
  AttributeExtraction full;
  full.bandwidth_mhz = 20.0;
  full.image_grounded_evidence = true;
  gt.full_span_occupied = true;
  const bool exception_ok = detect_leakage(full, {806e6, 20e6, 30.0, 2048}, gt) == LeakageVerdict::grounded;
  return {exception_ok, std::to_string(outside) + " random estimates outside +/-1 MHz never leaked; full-span case " +
                            (exception_ok ? "grounded" : "not grounded")};
}

std::string file_or_empty(const fs::path& p) { return fs::exists(p) ? read_text_file(p.string()) : std::string(); }

Outcome end_to_end(const fs::path& root) {
  std::array<fs::path, 2> dirs = {root / "run_a", root / "run_b"};
  std::array<double, 2> secs{};
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    fs::remove_all(dirs[i]);
    std::ostringstream out, err;
    const auto t0 = Clock::now();
    const int code = cli::dispatch({"evaluate", "--suite", kData + "/default_suite.json", "--backends",
                                    "rf-gpt,qwen-base,llama-3.2v", "--adjudications",
                                    kData + "/reference_adjudications.json", "--out", dirs[i].string()},
                                   out, err);
    secs[i] = seconds_since(t0);
    if (code != 0) return {false, "evaluate exited " + std::to_string(code) + ": " + err.str()};
  }
  bool same = true;
  for (const char* f : {kTranscriptFile, kPaesCsvFile, kMetricsCsvFile, kReportFile}) {
    const auto a = file_or_empty(dirs[0] / f);
    if (a.empty() || a != file_or_empty(dirs[1] / f)) same = false;
  }
  // The archive must reproduce the printed table through the shipped data.
  const auto rep = reaggregate(dirs[0]);
  const std::map<std::string, std::array<int, 6>> printed = {
      {"rf-gpt", {4, 5, 5, 5, 5, 2}}, {"qwen-base", {0, 0, 4, 4, 0, 0}}, {"llama-3.2v", {2, 4, 2, 3, 4, 0}}};
  bool table = true;
  for (const auto& [backend, want] : printed) {
    for (std::size_t i = 0; i < rep.scenarios.size(); ++i) {
      table = table && rep.cell(rep.scenarios[i], backend).mean_paes == want[i];
    }
  }
  const double worst = std::max(secs[0], secs[1]);
  return {same && table && worst < 60.0,
          std::string(same ? "archives byte-identical" : "archives differ") + (table ? ", means match table" : ", means differ") +
              fmt(", slowest run %.1f s", worst)};
}

Outcome renderer() {
  const auto suite = load_suite(kData + "/default_suite.json");
  const auto& s1 = *suite.find("S1");
  const auto rows = oracle::waterfall_of(trial_scene(s1, 1));
  const RenderSpec spec;
  const auto a = render_waterfall(rows, spec);
  const auto b = render_waterfall(oracle::waterfall_of(trial_scene(s1, 1)), spec);
  if (a != b) return {false, "identical snapshots rendered differently"};

  const auto rendered = rasterize_waterfall(rows, spec);
  const auto& L = rendered.layout;
  const auto image = decode_png(a);
  const auto& cmap = Colormap::get(spec.colormap);
  const double lo = L.scale.db_min, hi = L.scale.db_max;
  const double stop_db = (hi - lo) / static_cast<double>(cmap.size());
  const auto& cal = rows.front();
  double worst = 0.0;
  for (std::uint32_t y = 0; y < L.heat_height(); ++y) {
    const std::size_t r = std::size_t{y} * rows.size() / L.heat_height();
    for (std::uint32_t x = 0; x < L.heat_width(); ++x) {
      const double f = L.freq_lo_hz + (x + 0.5) * (L.freq_hi_hz - L.freq_lo_hz) / L.heat_width();
      const auto k = std::clamp<long long>(std::llround((f - cal.freq_start_hz) / cal.freq_step_hz), 0,
                                           static_cast<long long>(cal.power_db.size()) - 1);
      const double truth = std::clamp(rows[r].power_db[static_cast<std::size_t>(k)], lo, hi);
      const auto idx = cmap.lookup(image.at(L.heat_x0 + x, L.heat_y0 + y));
      if (!idx) return {false, "heatmap pixel is not a colormap stop"};
      worst = std::max(worst, std::abs(lo + (*idx + 0.5) * stop_db - truth));
    }
  }
  const auto title = read_png_text(a).at("Title");
  const bool titled = title.find("806") != std::string::npos && title.find("20") != std::string::npos;
  return {worst <= stop_db && titled, fmt("byte-identical; worst decode error %.3f dB", worst) +
                                          fmt(" (one stop = %.3f dB); title \"", stop_db) + title + "\""};
}

}  // namespace

int main() {
  const auto root = fs::temp_directory_path() / "rfa_acceptance";
  fs::create_directories(root);

  // Criterion 7 audits the archive written by criterion 9, so 9 runs first.
  std::map<int, Outcome> results;
  const std::vector<std::pair<int, std::function<Outcome()>>> order = {
      {9, [&] { return end_to_end(root); }},
      {1, dft_oracle},
      {2, hann_checks},
      {3, waterfall_invariants},
      {4, simulator_calibration},
      {5, prompt_and_hygiene},
      {6, reference_fixtures},
      {7, [&] { return plr_and_identity(root / "run_a"); }},
      {8, leakage_rule},
      {10, renderer},
  };
  for (const auto& [id, fn] : order) {
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("exception: ") + e.what()};
    }
  }

  const std::map<int, const char*> names = {
      {1, "DFT oracle equivalence"},  {2, "Hann analytic checks"},       {3, "Waterfall invariants"},
      {4, "Simulator calibration"},   {5, "Prompt golden + hygiene"},    {6, "Reference fixture suite"},
      {7, "PLR/hallucination arithmetic"}, {8, "Leakage rule"},          {9, "End-to-end offline evaluate"},
      {10, "Renderer determinism + calibration"}};
  int failed = 0;
  for (const auto& [id, r] : results) {
    std::printf("[%s] %2d %s: %s\n", r.pass ? "PASS" : "FAIL", id, names.at(id), r.detail.c_str());
    failed += r.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
