#include "rfa/suite.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <set>

#include "rfa/error.hpp"
#include "rfa/prompt.hpp"
#include "rfa/util.hpp"

namespace rfa {

const ScenarioSpec* Suite::find(std::string_view id) const {
  for (const auto& s : scenarios) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

void validate(const Suite& suite) {
  std::set<std::string> ids;
  for (const auto& s : suite.scenarios) {
    if (s.id.empty()) throw ConfigError("scenario without an id");
    if (!ids.insert(s.id).second) throw ConfigError("duplicate scenario id '" + s.id + "'");
    if (s.trials < 1) throw ConfigError("scenario '" + s.id + "': trials must be >= 1");
    if (!(s.scene.settings == s.settings)) throw ConfigError("scenario '" + s.id + "': scene settings differ");
    validate(s.settings);
    validate(s.scene);
    validate(s.ground_truth);
  }
}

void to_json(nlohmann::json& j, const ScenarioSpec& s) {
  nlohmann::json scene = s.scene;
  scene.erase("settings");
  j = {{"id", s.id},         {"settings", s.settings}, {"environment", s.environment}, {"trials", s.trials},
       {"ood", s.ood},       {"scene", scene},         {"ground_truth", s.ground_truth}};
}

void from_json(const nlohmann::json& j, ScenarioSpec& s) {
  s = ScenarioSpec{};
  j.at("id").get_to(s.id);
  j.at("settings").get_to(s.settings);
  s.environment = j.value("environment", "");
  s.trials = j.value("trials", 3);
  s.ood = j.value("ood", false);
  auto scene = j.at("scene");
  scene["settings"] = s.settings;
  scene.get_to(s.scene);
  j.at("ground_truth").get_to(s.ground_truth);
}

void to_json(nlohmann::json& j, const Suite& s) { j = {{"scenarios", s.scenarios}}; }

void from_json(const nlohmann::json& j, Suite& s) { j.at("scenarios").get_to(s.scenarios); }

Suite load_suite(const std::string& path) {
  Suite suite;
  try {
    suite = nlohmann::json::parse(read_text_file(path)).get<Suite>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("suite '" + path + "': " + e.what());
  }
  validate(suite);
  return suite;
}

SceneSpec trial_scene(const ScenarioSpec& scenario, int trial) {
  SceneSpec scene = scenario.scene;
  const auto offset = static_cast<std::uint64_t>(trial - 1);
  scene.noise_seed += offset;
  for (auto& e : scene.emitters) e.seed += offset;
  return scene;
}

// --- adjudications -----------------------------------------------------------

void Adjudications::add(const std::string& scenario, const std::string& backend, std::optional<int> trial,
                        AttributeExtraction x) {
  validate(x);
  if (trial) {
    exact_[{scenario, backend, *trial}] = std::move(x);
  } else {
    any_trial_[{scenario, backend}] = std::move(x);
  }
}

Adjudications Adjudications::from_json(const nlohmann::json& j) {
  Adjudications a;
  for (const auto& e : j.at("adjudications")) {
    std::optional<int> trial;
    if (e.contains("trial")) trial = e["trial"].get<int>();
    a.add(e.at("scenario").get<std::string>(), e.at("backend").get<std::string>(), trial,
          e.at("extraction").get<AttributeExtraction>());
  }
  return a;
}

Adjudications Adjudications::load(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("adjudications '" + path + "': " + e.what());
  }
}

std::optional<AttributeExtraction> Adjudications::find(const std::string& scenario, const std::string& backend,
                                                       int trial) const {
  if (auto it = exact_.find({scenario, backend, trial}); it != exact_.end()) return it->second;
  if (auto it = any_trial_.find({scenario, backend}); it != any_trial_.end()) return it->second;
  return std::nullopt;
}

// --- running -------------------------------------------------------------------

TrialInput prepare_trial(const ScenarioSpec& scenario, int trial, const PipelineConfig& pipeline,
                         const RenderSpec& render) {
  auto source = generate_scene(trial_scene(scenario, trial));
  SpectrumPipeline chain(scenario.settings, pipeline);
  // Run until the waterfall holds a full screen of fresh rows.
  std::uint64_t fresh = 0;
  while (fresh < WaterfallBuffer::kCapacity) {
    auto block = source->next();
    if (!block) break;
    fresh += chain.process(*block) ? 1 : 0;
  }
  if (chain.waterfall().empty()) {
    throw PreconditionError("scenario '" + scenario.id + "' produced no waterfall rows");
  }
  const auto rows = chain.waterfall().snapshot();

  TrialInput in;
  in.scenario = scenario.id;
  in.trial = trial;
  in.settings = scenario.settings;
  in.png = render_waterfall(rows, render);
  in.image_sha256 = sha256_hex(in.png);
  const auto prompt = build_prompt(scenario.settings);
  in.system_text = prompt.system_text;
  in.user_text = prompt.user_text;
  in.peaks = detect_peaks(rows.back(), pipeline);
  return in;
}

HygieneRules detector_hygiene_rules(const CaptureSettings& settings, std::span<const Peak> peaks) {
  auto rules = default_hygiene_rules();
  const std::set<std::string> allowed = {format_mhz(settings.center_freq_hz), format_mhz(settings.sample_rate_hz)};
  char buf[64];
  for (const auto& p : peaks) {
    for (double mhz : {p.center_hz / 1e6, p.bandwidth_hz / 1e6}) {
      std::snprintf(buf, sizeof buf, "%.3f", mhz);
      if (!allowed.count(buf)) rules.tokens.emplace_back(buf);
    }
  }
  return rules;
}

HygieneRules trial_hygiene_rules(const Suite& suite, const TrialInput& input) {
  auto rules = detector_hygiene_rules(input.settings, input.peaks);
  for (const auto& s : suite.scenarios) {
    if (std::find(rules.tokens.begin(), rules.tokens.end(), s.id) == rules.tokens.end()) {
      rules.tokens.push_back(s.id);
    }
  }
  return rules;
}

namespace {

struct BackendOutcome {
  std::vector<TrialRecord> records;
  std::vector<TimingRecord> timings;
};

BackendOutcome run_backend(VlmClient& client, const Suite& suite, const std::vector<TrialInput>& inputs,
                           const RunOptions& opt, const Lexicon& lexicon, const BandPlan& plan) {
  BackendOutcome out;
  const auto& name = client.profile().name;
  for (const auto& in : inputs) {
    const auto* scenario = suite.find(in.scenario);
    TrialRecord r;
    r.scenario = in.scenario;
    r.backend = name;
    r.trial = in.trial;
    r.trial_id = in.scenario + "/" + name + "/" + std::to_string(in.trial);
    r.settings = in.settings;
    r.image_sha256 = in.image_sha256;
    r.system_text = in.system_text;
    r.user_text = in.user_text;

    AnalysisRequest req{in.png, in.settings, in.system_text, in.user_text};
    TrialContext ctx{r.trial_id, ReplayKey{in.scenario, name, in.trial}};
    try {
      client.set_hygiene_rules(trial_hygiene_rules(suite, in));
      auto resp = client.analyze(req, ctx);
      r.response = resp.text;
      out.timings.push_back({r.trial_id, name, resp.latency_s, resp.timestamp});
    } catch (const TransportError& e) {
      r.failed = true;
      r.error = e.what();
    }

    if (!r.failed) {
      auto adjudicated = opt.adjudications ? opt.adjudications->find(r.scenario, name, r.trial) : std::nullopt;
      r.adjudicated = adjudicated.has_value();
      r.extraction = adjudicated ? *adjudicated : extract_attributes(r.response, lexicon);
    }
    r.score = score_trial(r.extraction, scenario->ground_truth, r.settings, plan);
    if (r.failed) r.score = TrialScore{};
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace

SuiteRun run_suite(const Suite& suite, const std::vector<std::shared_ptr<VlmClient>>& backends,
                   const RunOptions& options) {
  validate(suite);
  if (backends.empty()) throw PreconditionError("run_suite needs at least one backend");
  const auto& lexicon = options.lexicon ? *options.lexicon : Lexicon::defaults();
  const auto& plan = options.band_plan ? *options.band_plan : BandPlan::defaults();

  std::vector<TrialInput> inputs;
  for (const auto& s : suite.scenarios) {
    for (int t = 1; t <= s.trials; ++t) inputs.push_back(prepare_trial(s, t, options.pipeline, options.render));
  }

  std::vector<BackendOutcome> outcomes(backends.size());
  if (options.parallel_backends && backends.size() > 1) {
    std::vector<std::future<BackendOutcome>> futures;
    for (const auto& b : backends) {
      futures.push_back(std::async(std::launch::async, [&, b] {
        return run_backend(*b, suite, inputs, options, lexicon, plan);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < backends.size(); ++i) {
      outcomes[i] = run_backend(*backends[i], suite, inputs, options, lexicon, plan);
    }
  }

  SuiteRun run;
  // Interleave as scenario, trial, backend so archives do not depend on
  // which backend finished first.
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (auto& o : outcomes) {
      run.records.push_back(std::move(o.records[k]));
    }
  }
  for (auto& o : outcomes) {
    run.timings.insert(run.timings.end(), o.timings.begin(), o.timings.end());
  }

  std::vector<std::string> scenario_order;
  for (const auto& s : suite.scenarios) scenario_order.push_back(s.id);
  std::vector<std::string> backend_order;
  for (const auto& b : backends) backend_order.push_back(b->profile().name);
  run.report = aggregate(run.records, scenario_order, backend_order);
  return run;
}

}  // namespace rfa
