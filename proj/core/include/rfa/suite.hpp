#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/backend.hpp"
#include "rfa/dsp.hpp"
#include "rfa/evaluation.hpp"
#include "rfa/extract.hpp"
#include "rfa/render.hpp"
#include "rfa/scene.hpp"

namespace rfa {

struct ScenarioSpec {
  std::string id;
  CaptureSettings settings;
  std::string environment;
  SceneSpec scene;  // simulation stand-in; scene.settings == settings
  int trials = 3;
  bool ood = false;
  GroundTruth ground_truth;
};

struct Suite {
  std::vector<ScenarioSpec> scenarios;
  const ScenarioSpec* find(std::string_view id) const;
};

// Unique ids, trials >= 1, valid scenes and ground truth.
void validate(const Suite& suite);

// Scenario "scene" blocks omit "settings"; they inherit the scenario's.
void to_json(nlohmann::json& j, const ScenarioSpec& s);
void from_json(const nlohmann::json& j, ScenarioSpec& s);
void to_json(nlohmann::json& j, const Suite& s);
void from_json(const nlohmann::json& j, Suite& s);
Suite load_suite(const std::string& path);

// The scene actually simulated for trial `trial` (1-based): every seed is
// offset so repeated captures differ.
SceneSpec trial_scene(const ScenarioSpec& scenario, int trial);

// Human-scored extractions that override the lexicon extractor. An entry
// without "trial" applies to every trial of its (scenario, backend).
class Adjudications {
 public:
  static Adjudications load(const std::string& path);
  static Adjudications from_json(const nlohmann::json& j);

  void add(const std::string& scenario, const std::string& backend, std::optional<int> trial,
           AttributeExtraction x);
  std::optional<AttributeExtraction> find(const std::string& scenario, const std::string& backend,
                                          int trial) const;
  std::size_t size() const noexcept { return exact_.size() + any_trial_.size(); }

 private:
  std::map<std::tuple<std::string, std::string, int>, AttributeExtraction> exact_;
  std::map<std::pair<std::string, std::string>, AttributeExtraction> any_trial_;
};

// The image and prompt shown to every backend for one trial.
struct TrialInput {
  std::string scenario;
  int trial = 1;
  CaptureSettings settings;
  std::vector<std::uint8_t> png;
  std::string image_sha256;
  std::string system_text;
  std::string user_text;
  std::vector<Peak> peaks;  // detector output on the newest row; kept out of the prompt
};

// Simulate, run the pipeline until the waterfall is full (or the scene ends),
// render and build the prompt.
TrialInput prepare_trial(const ScenarioSpec& scenario, int trial, const PipelineConfig& pipeline,
                         const RenderSpec& render);

// Default hygiene rules plus the detector's peak numerals ("%.3f" MHz),
// except spellings that coincide with the settings quoted in the prompt.
HygieneRules detector_hygiene_rules(const CaptureSettings& settings, std::span<const Peak> peaks);

// detector_hygiene_rules() plus the suite's scenario ids.
HygieneRules trial_hygiene_rules(const Suite& suite, const TrialInput& input);

struct TimingRecord {
  std::string trial_id;
  std::string backend;
  double latency_s = 0.0;
  std::chrono::system_clock::time_point timestamp;
};

struct RunOptions {
  PipelineConfig pipeline;
  RenderSpec render;
  const Lexicon* lexicon = nullptr;              // defaults when null
  const BandPlan* band_plan = nullptr;           // defaults when null
  const Adjudications* adjudications = nullptr;  // optional
  bool parallel_backends = true;
};

struct SuiteRun {
  std::vector<TrialRecord> records;  // scenario, trial, backend order
  std::vector<TimingRecord> timings;
  EvalReport report;
};

// Backend failures become failed trials scored 0/5 with no bandwidth.
SuiteRun run_suite(const Suite& suite, const std::vector<std::shared_ptr<VlmClient>>& backends,
                   const RunOptions& options = {});

}  // namespace rfa
