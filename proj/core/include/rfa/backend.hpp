#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/source.hpp"

namespace rfa {

enum class ApiFlavor { openai_chat_image, ollama_generate_image, mock_replay };

std::string_view to_string(ApiFlavor flavor) noexcept;
ApiFlavor api_flavor_from_string(std::string_view name);

struct BackendProfile {
  std::string name;
  // Base URL for HTTP flavors; fixture file path for mock_replay.
  std::string endpoint_url;
  std::string model_id;
  ApiFlavor api_flavor = ApiFlavor::mock_replay;
  double timeout_s = 120.0;
  std::uint32_t max_tokens = 512;
  std::string api_key;  // sent as a bearer token; never listed
};

void validate(const BackendProfile& profile);

void to_json(nlohmann::json& j, const BackendProfile& p);  // omits api_key
void from_json(const nlohmann::json& j, BackendProfile& p);

// {"backends": [...]}; relative mock fixture paths resolve against the file's
// directory.
std::vector<BackendProfile> load_profiles(const std::string& path);

struct AnalysisRequest {
  std::vector<std::uint8_t> image;  // PNG
  CaptureSettings settings;
  std::string system_text;
  std::string user_text;
};

struct ModelResponse {
  std::string backend_name;
  std::string text;  // may be empty
  double latency_s = 0.0;
  std::chrono::system_clock::time_point timestamp;
  std::string trial_id;
};

enum class Role { user, assistant };

struct ChatTurn {
  Role role = Role::user;
  std::string text;
};

// turns alternate assistant, user, assistant, ... starting with the first
// analysis.
struct ChatSession {
  AnalysisRequest base_request;
  std::vector<ChatTurn> turns;
};

// ---------------------------------------------------------------------------
// Request hygiene

// Text that must never reach a model in the analysis request.
struct HygieneRules {
  std::vector<std::string> words;   // case-insensitive, whole words
  std::vector<std::string> tokens;  // case-sensitive, whole tokens (scenario IDs, numerals)
};

// Ground-truth label vocabulary plus the default scenario identifiers.
HygieneRules default_hygiene_rules();

std::vector<std::string> hygiene_violations(std::string_view text, const HygieneRules& rules);

// Throws HygieneError listing every offending term.
void check_hygiene(const AnalysisRequest& request, const HygieneRules& rules);

// ---------------------------------------------------------------------------
// Offline replay fixtures

// Lookup key for canned responses. It travels beside a request, never inside
// it.
struct ReplayKey {
  std::string scenario;
  std::string backend;
  int trial = 1;
};

struct TrialContext {
  std::string trial_id;
  std::optional<ReplayKey> replay;
};

// {"responses": [{"scenario", "backend", "trial", "text"}]}. A "*" scenario
// entry answers any key for that backend that has no exact match.
class ReplayFixture {
 public:
  static ReplayFixture load(const std::string& path);
  static ReplayFixture from_json(const nlohmann::json& j);

  std::optional<std::string> find(const ReplayKey& key) const;
  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::map<std::tuple<std::string, std::string, int>, std::string> responses_;
  std::map<std::string, std::string> fallback_;  // backend -> text
};

// ---------------------------------------------------------------------------

// One backend endpoint. Calls are serialized per client so measured latency
// reflects one query at a time. Failures throw TimeoutError / TransportError;
// nothing is retried.
class VlmClient {
 public:
  explicit VlmClient(BackendProfile profile, HygieneRules rules = default_hygiene_rules());

  const BackendProfile& profile() const noexcept { return profile_; }
  void set_hygiene_rules(HygieneRules rules) { rules_ = std::move(rules); }
  const HygieneRules& hygiene_rules() const noexcept { return rules_; }

  ModelResponse analyze(const AnalysisRequest& request, const TrialContext& ctx = {});

  // Sends the base image, full transcript and `question`; on success appends
  // the question and the answer to the session. Throws PreconditionError if
  // the session has no assistant turn yet.
  ModelResponse chat_continue(ChatSession& session, const std::string& question,
                              const TrialContext& ctx = {});

  // Exact JSON body that would be posted for this exchange (HTTP flavors).
  nlohmann::json wire_body(const AnalysisRequest& request, std::span<const ChatTurn> history,
                           const std::string* question) const;

 private:
  std::string post(const std::string& path, const nlohmann::json& body, double& elapsed_s);
  std::string mock_text(const AnalysisRequest& request, std::span<const ChatTurn> history,
                        const std::string* question, const TrialContext& ctx);
  ModelResponse dispatch(const AnalysisRequest& request, std::span<const ChatTurn> history,
                         const std::string* question, const TrialContext& ctx);

  BackendProfile profile_;
  HygieneRules rules_;
  std::mutex call_mutex_;
  std::once_flag fixture_once_;
  std::shared_ptr<const ReplayFixture> fixture_;
};

}  // namespace rfa
