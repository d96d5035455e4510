#include <gtest/gtest.h>

#include <filesystem>

#include "rfa/error.hpp"
#include "rfa/report.hpp"
#include "rfa/suite.hpp"
#include "rfa/util.hpp"

namespace {

using namespace rfa;
namespace fs = std::filesystem;

const std::string kData = RFA_DATA_DIR;

Suite one_trial_suite() {
  auto suite = load_suite(kData + "/default_suite.json");
  for (auto& s : suite.scenarios) s.trials = 1;
  return suite;
}

std::vector<std::shared_ptr<VlmClient>> mock_clients() {
  std::vector<std::shared_ptr<VlmClient>> out;
  for (const auto& p : load_profiles(kData + "/backends.json")) out.push_back(std::make_shared<VlmClient>(p));
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rfa_tests" / name;
  fs::remove_all(dir);
  return dir;
}

TEST(SuiteFile, DefaultSuiteShape) {
  const auto suite = load_suite(kData + "/default_suite.json");
  ASSERT_EQ(suite.scenarios.size(), 6u);
  const std::vector<std::pair<std::string, std::pair<double, double>>> tuning = {
      {"S1", {806e6, 20e6}}, {"S2", {98e6, 10e6}},   {"S3", {433.92e6, 5e6}},
      {"S4", {2437e6, 40e6}}, {"S5", {950e6, 20e6}}, {"KT", {2400e6, 40e6}}};
  for (std::size_t i = 0; i < tuning.size(); ++i) {
    const auto& s = suite.scenarios[i];
    EXPECT_EQ(s.id, tuning[i].first);
    EXPECT_EQ(s.settings.center_freq_hz, tuning[i].second.first) << s.id;
    EXPECT_EQ(s.settings.sample_rate_hz, tuning[i].second.second) << s.id;
    EXPECT_EQ(s.trials, 3);
  }
  EXPECT_TRUE(suite.find("KT")->ood);
  EXPECT_TRUE(suite.find("S1")->ground_truth.full_span_occupied);
}

TEST(SuiteFile, ValidationRejectsDuplicates) {
  auto suite = load_suite(kData + "/default_suite.json");
  suite.scenarios[1].id = "S1";
  EXPECT_THROW(validate(suite), ConfigError);
  suite = load_suite(kData + "/default_suite.json");
  suite.scenarios[0].trials = 0;
  EXPECT_THROW(validate(suite), ConfigError);
}

TEST(SuiteFile, JsonRoundTrip) {
  const auto suite = load_suite(kData + "/default_suite.json");
  const nlohmann::json j = suite;
  EXPECT_FALSE(j["scenarios"][0]["scene"].contains("settings"));
  const auto back = j.get<Suite>();
  ASSERT_EQ(back.scenarios.size(), suite.scenarios.size());
  for (std::size_t i = 0; i < back.scenarios.size(); ++i) {
    EXPECT_EQ(back.scenarios[i].scene, suite.scenarios[i].scene);
    EXPECT_EQ(back.scenarios[i].ground_truth, suite.scenarios[i].ground_truth);
  }
}

TEST(Trials, SeedsDifferPerTrialAndImagesAreShared) {
  const auto suite = load_suite(kData + "/default_suite.json");
  const auto& s3 = *suite.find("S3");
  EXPECT_NE(trial_scene(s3, 1).noise_seed, trial_scene(s3, 2).noise_seed);
  EXPECT_EQ(trial_scene(s3, 1), s3.scene);
  const auto a = prepare_trial(s3, 1, PipelineConfig{}, RenderSpec{});
  const auto b = prepare_trial(s3, 1, PipelineConfig{}, RenderSpec{});
  EXPECT_EQ(a.png, b.png);
  EXPECT_NE(a.image_sha256, prepare_trial(s3, 2, PipelineConfig{}, RenderSpec{}).image_sha256);
}

TEST(Trials, DetectorNumeralsAreBarredButSettingsAllowed) {
  std::vector<Peak> peaks(1);
  peaks[0].center_hz = 433.92e6;
  peaks[0].bandwidth_hz = 0.125e6;
  const auto rules = detector_hygiene_rules({433.92e6, 5e6, 0.0, 2048}, peaks);
  EXPECT_NE(std::find(rules.tokens.begin(), rules.tokens.end(), "433.920"), rules.tokens.end());
  EXPECT_NE(std::find(rules.tokens.begin(), rules.tokens.end(), "0.125"), rules.tokens.end());
  EXPECT_EQ(std::find(rules.tokens.begin(), rules.tokens.end(), "433.92"), rules.tokens.end());
}

TEST(Adjudication, ExactTrialBeatsAnyTrial) {
  Adjudications a;
  AttributeExtraction one, two;
  one[Attribute::snr] = "low";
  two[Attribute::snr] = "high";
  a.add("S1", "m", std::nullopt, one);
  a.add("S1", "m", 2, two);
  EXPECT_EQ(a.find("S1", "m", 1), one);
  EXPECT_EQ(a.find("S1", "m", 2), two);
  EXPECT_EQ(a.find("S1", "x", 1), std::nullopt);
  AttributeExtraction bad;
  bad[Attribute::snr] = "loud";
  EXPECT_THROW(a.add("S1", "m", 1, bad), ConfigError);
  EXPECT_EQ(Adjudications::load(kData + "/reference_adjudications.json").size(), 18u);
}

TEST(RunSuite, DeterministicArchivesAndReaggregation) {
  const auto suite = one_trial_suite();
  const auto adj = Adjudications::load(kData + "/reference_adjudications.json");
  RunOptions opt;
  opt.adjudications = &adj;
  const auto a = run_suite(suite, mock_clients(), opt);
  opt.parallel_backends = false;
  const auto b = run_suite(suite, mock_clients(), opt);
  EXPECT_EQ(format_transcripts(a.records), format_transcripts(b.records));
  ASSERT_EQ(a.records.size(), 18u);
  EXPECT_EQ(a.records[0].scenario, "S1");
  EXPECT_EQ(a.records[0].backend, "rf-gpt");
  EXPECT_EQ(a.records[1].backend, "qwen-base");
  EXPECT_EQ(a.timings.size(), 18u);

  // Every backend saw the same image and prompt in a given trial.
  for (std::size_t i = 0; i < a.records.size(); i += 3) {
    EXPECT_EQ(a.records[i].image_sha256, a.records[i + 1].image_sha256);
    EXPECT_EQ(a.records[i].user_text, a.records[i + 2].user_text);
    EXPECT_TRUE(a.records[i].adjudicated);
  }

  const auto dir = fresh_dir("run");
  write_run(dir, a);
  for (const char* f : {kTranscriptFile, kTimingFile, kReportFile, kPaesCsvFile, kMetricsCsvFile}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto parsed = parse_transcripts(read_text_file((dir / kTranscriptFile).string()));
  EXPECT_EQ(parsed, a.records);
  const auto again = reaggregate(dir);
  EXPECT_EQ(format_paes_csv(again), format_paes_csv(a.report));
  EXPECT_EQ(format_metrics_csv(again), format_metrics_csv(a.report));

  const auto paes = read_text_file((dir / kPaesCsvFile).string());
  EXPECT_EQ(paes.substr(0, paes.find('\n')), "scenario,backend,trials,mean_paes");
  EXPECT_NE(paes.find("S1,rf-gpt,1,4"), std::string::npos);
}

TEST(RunSuite, ReportTotalsAreAuditable) {
  const auto suite = one_trial_suite();
  const auto run = run_suite(suite, mock_clients());
  for (const auto& b : run.report.per_backend) {
    int fn = 0, tech = 0, leaked = 0;
    for (const auto& r : run.records) {
      if (r.backend != b.backend) continue;
      for (const auto& h : r.score.hallucinations) (h.kind == HallucinationKind::false_negative ? fn : tech)++;
      leaked += r.score.leakage == LeakageVerdict::leaked;
    }
    EXPECT_EQ(b.false_negative_count, fn);
    EXPECT_EQ(b.tech_label_count, tech);
    EXPECT_EQ(b.total_hallucinations, fn + tech);
    EXPECT_EQ(b.leaked, leaked);
    if (b.plr) {
      EXPECT_GE(*b.plr, 0.0);
      EXPECT_LE(*b.plr, 1.0);
    }
  }
}

TEST(RunSuite, FailingBackendScoresZero) {
  auto suite = one_trial_suite();
  suite.scenarios.resize(2);
  BackendProfile dead;
  dead.name = "dead";
  dead.api_flavor = ApiFlavor::openai_chat_image;
  dead.endpoint_url = "http://127.0.0.1:1";
  dead.timeout_s = 1.0;
  const auto run = run_suite(suite, {std::make_shared<VlmClient>(dead)});
  ASSERT_EQ(run.records.size(), 2u);
  for (const auto& r : run.records) {
    EXPECT_TRUE(r.failed);
    EXPECT_FALSE(r.error.empty());
    EXPECT_EQ(r.score.paes, 0);
    EXPECT_EQ(r.score.leakage, LeakageVerdict::no_bandwidth_estimate);
  }
  EXPECT_FALSE(run.report.backend("dead").plr.has_value());
  EXPECT_DOUBLE_EQ(run.report.cell("S1", "dead").mean_paes, 0.0);
}

TEST(Transcripts, MalformedLinesAreFormatErrors) {
  EXPECT_THROW(parse_transcripts("{not json}\n"), FormatError);
  EXPECT_TRUE(parse_transcripts("").empty());
}

}  // namespace
