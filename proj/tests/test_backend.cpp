#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fake_server.hpp"
#include "rfa/backend.hpp"
#include "rfa/error.hpp"
#include "rfa/prompt.hpp"
#include "rfa/suite.hpp"
#include "rfa/util.hpp"

namespace {

using namespace rfa;
namespace fs = std::filesystem;

const std::string kData = RFA_DATA_DIR;
const std::string kFixtures = RFA_FIXTURE_DIR;

AnalysisRequest sample_request(const CaptureSettings& s = {806e6, 20e6, 30.0, 2048}) {
  const auto p = build_prompt(s);
  return {{0x89, 'P', 'N', 'G', 1, 2, 3}, s, p.system_text, p.user_text};
}

BackendProfile http_profile(const std::string& url, ApiFlavor flavor, double timeout_s = 5.0) {
  BackendProfile p;
  p.name = "remote";
  p.endpoint_url = url;
  p.model_id = "test-model";
  p.api_flavor = flavor;
  p.timeout_s = timeout_s;
  p.max_tokens = 256;
  return p;
}

TEST(Prompt, MatchesGoldenFiles) {
  const auto p = build_prompt({806e6, 20e6, 30.0, 2048});
  EXPECT_EQ(p.system_text, read_text_file(kFixtures + "/prompt_system.txt"));
  EXPECT_EQ(p.user_text, read_text_file(kFixtures + "/prompt_user_806_20.txt"));
}

TEST(Prompt, OnlyTuningIsSubstituted) {
  const auto a = build_prompt({433.92e6, 5e6, 0.0, 2048});
  const auto b = build_prompt({433.92e6, 5e6, 55.0, 8192});
  EXPECT_EQ(a.user_text, b.user_text);
  EXPECT_NE(a.user_text.find("Center frequency: 433.92 MHz"), std::string::npos);
  EXPECT_NE(a.user_text.find("Sample rate: 5 MHz"), std::string::npos);
}

TEST(Hygiene, WholeTokensOnly) {
  const auto rules = default_hygiene_rules();
  EXPECT_TRUE(hygiene_violations("Please follow the lowest highway", rules).empty());
  EXPECT_EQ(hygiene_violations("a Wide band near S1", rules), (std::vector<std::string>{"Wide", "S1"}));
  EXPECT_TRUE(hygiene_violations("s1 is lower case", rules).empty());
  auto with_numbers = rules;
  with_numbers.tokens.push_back("433.920");
  EXPECT_EQ(hygiene_violations("peak at 433.920 MHz", with_numbers), (std::vector<std::string>{"433.920"}));
  EXPECT_TRUE(hygiene_violations("peak at 433.92 MHz", with_numbers).empty());
}

TEST(Hygiene, FuzzedPromptsNeverLeakGroundTruth) {
  const auto suite = load_suite(kData + "/default_suite.json");
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> fc(1e6, 6e9), sr(0.2e6, 56e6);
  for (int i = 0; i < 2000; ++i) {
    const CaptureSettings s{std::round(fc(rng) / 1e3) * 1e3, std::round(sr(rng) / 1e3) * 1e3, 0.0, 2048};
    const auto req = sample_request(s);
    EXPECT_NO_THROW(check_hygiene(req, default_hygiene_rules())) << s.center_freq_hz << " " << s.sample_rate_hz;
  }
  // Every vocabulary word is caught wherever it is spliced in.
  const auto rules = default_hygiene_rules();
  std::uniform_int_distribution<std::size_t> pos(0, 200);
  for (const auto& w : rules.words) {
    auto req = sample_request();
    req.user_text.insert(std::min(pos(rng), req.user_text.size()), std::string(" ") + w + " ");
    EXPECT_THROW(check_hygiene(req, rules), HygieneError) << w;
  }
  // Each scenario's dispatched body is clean of its own scoring metadata.
  for (const auto& sc : suite.scenarios) {
    const auto in = prepare_trial(sc, 1, PipelineConfig{}, RenderSpec{});
    const auto trial_rules = trial_hygiene_rules(suite, in);
    VlmClient client(http_profile("http://127.0.0.1:9", ApiFlavor::openai_chat_image), trial_rules);
    AnalysisRequest req{in.png, in.settings, in.system_text, in.user_text};
    auto body = client.wire_body(req, {}, nullptr);
    body["messages"][1]["content"][0]["image_url"]["url"] = "";
    EXPECT_TRUE(hygiene_violations(body.dump(), trial_rules).empty()) << sc.id;
    for (const auto& v : sc.ground_truth.sets) {
      for (const auto& label : v) EXPECT_FALSE(hygiene_violations(label, trial_rules).empty()) << label;
    }
  }
}

TEST(Hygiene, AnalyzeRefusesLeakyRequests) {
  BackendProfile p;
  p.name = "rf-gpt";
  p.endpoint_url = kData + "/reference_responses.json";
  VlmClient client(p);
  auto req = sample_request();
  req.user_text += "\nHint: this is scenario S4.";
  EXPECT_THROW(client.analyze(req, {"t", ReplayKey{"S4", "rf-gpt", 1}}), HygieneError);
}

TEST(Profiles, LoadAndValidate) {
  const auto profiles = load_profiles(kData + "/backends.json");
  ASSERT_EQ(profiles.size(), 3u);
  EXPECT_EQ(profiles[0].name, "rf-gpt");
  EXPECT_EQ(profiles[0].api_flavor, ApiFlavor::mock_replay);
  EXPECT_TRUE(fs::path(profiles[0].endpoint_url).is_absolute());
  EXPECT_TRUE(fs::exists(profiles[0].endpoint_url));

  BackendProfile bad = http_profile("ftp://x", ApiFlavor::openai_chat_image);
  EXPECT_THROW(validate(bad), ConfigError);
  bad = http_profile("http://x", ApiFlavor::openai_chat_image, 0.0);
  EXPECT_THROW(validate(bad), ConfigError);
  EXPECT_THROW(api_flavor_from_string("grpc"), ConfigError);
}

TEST(Profiles, JsonOmitsSecrets) {
  auto p = http_profile("http://x", ApiFlavor::openai_chat_image);
  p.api_key = "sk-secret";
  const nlohmann::json j = p;
  EXPECT_FALSE(j.contains("api_key"));
  EXPECT_EQ(j.dump().find("sk-secret"), std::string::npos);
  const auto back = nlohmann::json::object({{"name", "n"}, {"api_flavor", "ollama_generate_image"},
                                            {"endpoint_url", "http://h"}, {"api_key", "k"}})
                        .get<BackendProfile>();
  EXPECT_EQ(back.api_key, "k");
  EXPECT_EQ(back.timeout_s, 120.0);
}

TEST(Replay, ExactKeyThenFallback) {
  const auto f = ReplayFixture::from_json(nlohmann::json::parse(R"({"responses": [
      {"scenario": "S1", "backend": "a", "trial": 2, "text": "two"},
      {"scenario": "S1", "backend": "a", "text": "one"},
      {"scenario": "*", "backend": "a", "text": "any"}]})"));
  EXPECT_EQ(f.find({"S1", "a", 2}), "two");
  EXPECT_EQ(f.find({"S1", "a", 1}), "one");
  EXPECT_EQ(f.find({"S9", "a", 1}), "any");
  EXPECT_EQ(f.find({"S1", "b", 1}), std::nullopt);
}

TEST(Mock, ReplaysFixtureTextAndChats) {
  const auto profiles = load_profiles(kData + "/backends.json");
  VlmClient client(profiles[1]);
  const auto fixture = ReplayFixture::load(kData + "/reference_responses.json");
  const auto r = client.analyze(sample_request(), {"S1/qwen-base/1", ReplayKey{"S1", profiles[1].name, 1}});
  EXPECT_EQ(r.text, fixture.find({"S1", profiles[1].name, 1}).value());
  EXPECT_EQ(r.backend_name, profiles[1].name);
  EXPECT_EQ(r.trial_id, "S1/qwen-base/1");

  ChatSession session{sample_request(), {}};
  EXPECT_THROW(client.chat_continue(session, "What else?"), PreconditionError);
  session.turns.push_back({Role::assistant, r.text});
  const auto f1 = client.chat_continue(session, "Is it one emitter?");
  ASSERT_EQ(session.turns.size(), 3u);
  EXPECT_EQ(session.turns[1].role, Role::user);
  EXPECT_EQ(session.turns[2].text, f1.text);
  EXPECT_NE(f1.text.find("turns: 2"), std::string::npos);
}

TEST(Mock, MissingFixtureIsATransportFailure) {
  const auto profiles = load_profiles(kData + "/backends.json");
  VlmClient client(profiles[0]);
  EXPECT_THROW(client.analyze(sample_request(), {"x", ReplayKey{"S9", "nobody", 1}}), TransportError);
}

TEST(Wire, OpenAiBodyShape) {
  VlmClient client(http_profile("http://h", ApiFlavor::openai_chat_image));
  const auto req = sample_request();
  const std::vector<ChatTurn> history = {{Role::assistant, "first"}};
  const std::string q = "why?";
  const auto body = client.wire_body(req, history, &q);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["max_tokens"], 256);
  const auto& m = body["messages"];
  ASSERT_EQ(m.size(), 4u);
  EXPECT_EQ(m[0]["role"], "system");
  EXPECT_EQ(m[0]["content"], req.system_text);
  EXPECT_EQ(m[1]["content"][0]["image_url"]["url"], "data:image/png;base64," + base64_encode(req.image));
  EXPECT_EQ(m[1]["content"][1]["text"], req.user_text);
  EXPECT_EQ(m[2]["role"], "assistant");
  EXPECT_EQ(m[3]["content"], "why?");
}

TEST(Wire, OllamaBodyShape) {
  VlmClient client(http_profile("http://h", ApiFlavor::ollama_generate_image));
  const auto req = sample_request();
  const auto body = client.wire_body(req, {}, nullptr);
  EXPECT_EQ(body["system"], req.system_text);
  EXPECT_EQ(body["prompt"], req.user_text);
  EXPECT_EQ(body["images"][0], base64_encode(req.image));
  EXPECT_EQ(body["stream"], false);
  EXPECT_EQ(body["options"]["num_predict"], 256);
}

TEST(Http, OpenAiRoundTripSendsExactBody) {
  FakeVlmServer server;
  auto profile = http_profile(server.url() + "/", ApiFlavor::openai_chat_image);
  profile.api_key = "sk-test";
  VlmClient client(profile);
  const auto req = sample_request();
  const auto r = client.analyze(req);
  EXPECT_EQ(r.text, server.reply_text);
  EXPECT_GE(r.latency_s, 0.0);
  ASSERT_EQ(server.bodies().size(), 1u);
  EXPECT_EQ(nlohmann::json::parse(server.bodies()[0]), client.wire_body(req, {}, nullptr));
  EXPECT_EQ(server.auth_headers()[0], "Bearer sk-test");
}

TEST(Http, OllamaRoundTrip) {
  FakeVlmServer server;
  server.reply_text = "narrowband carrier";
  VlmClient client(http_profile(server.url(), ApiFlavor::ollama_generate_image));
  EXPECT_EQ(client.analyze(sample_request()).text, "narrowband carrier");
  EXPECT_TRUE(server.auth_headers()[0].empty());
}

TEST(Http, ServerErrorIsTransportError) {
  FakeVlmServer server;
  server.status = 500;
  VlmClient client(http_profile(server.url(), ApiFlavor::openai_chat_image));
  try {
    client.analyze(sample_request());
    FAIL() << "expected TransportError";
  } catch (const TimeoutError&) {
    FAIL() << "not a timeout";
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("HTTP 500"), std::string::npos);
  }
}

TEST(Http, UnreachableEndpoint) {
  VlmClient client(http_profile("http://127.0.0.1:1", ApiFlavor::openai_chat_image, 2.0));
  EXPECT_THROW(client.analyze(sample_request()), TransportError);
}

TEST(Http, SlowServerTimesOut) {
  FakeVlmServer server;
  server.delay = std::chrono::milliseconds(1500);
  VlmClient client(http_profile(server.url(), ApiFlavor::openai_chat_image, 0.3));
  try {
    client.analyze(sample_request());
    FAIL() << "expected TimeoutError";
  } catch (const TimeoutError& e) {
    EXPECT_GE(e.elapsed_s(), 0.25);
  }
}

}  // namespace
