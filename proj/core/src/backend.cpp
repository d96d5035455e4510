#include "rfa/backend.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

#include <httplib.h>

#include "rfa/error.hpp"
#include "rfa/util.hpp"

namespace rfa {
namespace {

using Clock = std::chrono::steady_clock;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Alphanumeric runs; a '.' between digits stays inside the token (433.92).
std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    const bool decimal_point = c == '.' && !cur.empty() && std::isdigit(static_cast<unsigned char>(cur.back())) &&
                               i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (std::isalnum(c) || decimal_point) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.base_path = url.substr(path_start);
  while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
  return out;
}

std::string data_uri(const std::vector<std::uint8_t>& png) {
  return "data:image/png;base64," + base64_encode(png);
}

}  // namespace

std::string_view to_string(ApiFlavor flavor) noexcept {
  switch (flavor) {
    case ApiFlavor::openai_chat_image: return "openai_chat_image";
    case ApiFlavor::ollama_generate_image: return "ollama_generate_image";
    case ApiFlavor::mock_replay: return "mock_replay";
  }
  return "unknown";
}

ApiFlavor api_flavor_from_string(std::string_view name) {
  for (auto f : {ApiFlavor::openai_chat_image, ApiFlavor::ollama_generate_image, ApiFlavor::mock_replay}) {
    if (to_string(f) == name) return f;
  }
  throw ConfigError("unknown api_flavor '" + std::string(name) + "'");
}

void validate(const BackendProfile& p) {
  if (p.name.empty()) throw ConfigError("backend profile needs a name");
  if (!(p.timeout_s > 0.0)) throw ConfigError("backend '" + p.name + "': timeout_s must be > 0");
  if (p.max_tokens < 1) throw ConfigError("backend '" + p.name + "': max_tokens must be >= 1");
  if (p.api_flavor == ApiFlavor::mock_replay) return;
  const bool http = p.endpoint_url.rfind("http://", 0) == 0 || p.endpoint_url.rfind("https://", 0) == 0;
  if (!http || p.endpoint_url.size() <= p.endpoint_url.find("://") + 3) {
    throw ConfigError("backend '" + p.name + "': endpoint_url must be an http(s) URL");
  }
}

void to_json(nlohmann::json& j, const BackendProfile& p) {
  j = {{"name", p.name},           {"endpoint_url", p.endpoint_url},
       {"model_id", p.model_id},   {"api_flavor", to_string(p.api_flavor)},
       {"timeout_s", p.timeout_s}, {"max_tokens", p.max_tokens}};
}

void from_json(const nlohmann::json& j, BackendProfile& p) {
  p = BackendProfile{};
  j.at("name").get_to(p.name);
  p.endpoint_url = j.value("endpoint_url", "");
  p.model_id = j.value("model_id", "");
  p.api_flavor = api_flavor_from_string(j.at("api_flavor").get<std::string>());
  p.timeout_s = j.value("timeout_s", 120.0);
  p.max_tokens = j.value("max_tokens", 512u);
  p.api_key = j.value("api_key", "");
}

std::vector<BackendProfile> load_profiles(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("profiles '" + path + "': " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<BackendProfile> out;
  for (const auto& entry : j.at("backends")) {
    auto p = entry.get<BackendProfile>();
    if (p.api_flavor == ApiFlavor::mock_replay && !p.endpoint_url.empty() &&
        std::filesystem::path(p.endpoint_url).is_relative()) {
      p.endpoint_url = (base / p.endpoint_url).lexically_normal().string();
    }
    validate(p);
    out.push_back(std::move(p));
  }
  return out;
}

// --- hygiene ---------------------------------------------------------------

HygieneRules default_hygiene_rules() {
  HygieneRules r;
  r.words = {"continuous", "pulsed",   "burst",    "narrow",      "medium",   "wide",
             "low",        "high",     "isolated", "overlapping", "cellular", "ism",
             "broadcast",  "radar",    "narrowband", "wideband",  "lte",      "gsm",
             "wifi",       "bluetooth", "fm"};
  r.tokens = {"S1", "S2", "S3", "S4", "S5", "KT"};
  return r;
}

std::vector<std::string> hygiene_violations(std::string_view text, const HygieneRules& rules) {
  std::vector<std::string> found;
  for (const auto& tok : tokenize(text)) {
    const auto low = lower(tok);
    const bool bad_word = std::find(rules.words.begin(), rules.words.end(), low) != rules.words.end();
    const bool bad_token = std::find(rules.tokens.begin(), rules.tokens.end(), tok) != rules.tokens.end();
    if ((bad_word || bad_token) && std::find(found.begin(), found.end(), tok) == found.end()) {
      found.push_back(tok);
    }
  }
  return found;
}

void check_hygiene(const AnalysisRequest& request, const HygieneRules& rules) {
  auto bad = hygiene_violations(request.system_text, rules);
  for (auto& t : hygiene_violations(request.user_text, rules)) {
    if (std::find(bad.begin(), bad.end(), t) == bad.end()) bad.push_back(std::move(t));
  }
  if (bad.empty()) return;
  std::string msg = "request text leaks evaluation metadata:";
  for (const auto& t : bad) msg += " '" + t + "'";
  throw HygieneError(msg);
}

// --- replay fixtures -------------------------------------------------------

ReplayFixture ReplayFixture::from_json(const nlohmann::json& j) {
  ReplayFixture f;
  for (const auto& r : j.at("responses")) {
    const auto scenario = r.at("scenario").get<std::string>();
    const auto backend = r.at("backend").get<std::string>();
    const auto text = r.at("text").get<std::string>();
    if (scenario == "*") {
      f.fallback_[backend] = text;
    } else {
      f.responses_[{scenario, backend, r.value("trial", 1)}] = text;
    }
  }
  return f;
}

ReplayFixture ReplayFixture::load(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("replay fixture '" + path + "': " + e.what());
  }
}

std::optional<std::string> ReplayFixture::find(const ReplayKey& key) const {
  if (auto it = responses_.find({key.scenario, key.backend, key.trial}); it != responses_.end()) {
    return it->second;
  }
  if (auto it = fallback_.find(key.backend); it != fallback_.end()) return it->second;
  return std::nullopt;
}

// --- client ----------------------------------------------------------------

VlmClient::VlmClient(BackendProfile profile, HygieneRules rules)
    : profile_(std::move(profile)), rules_(std::move(rules)) {
  validate(profile_);
}

nlohmann::json VlmClient::wire_body(const AnalysisRequest& request, std::span<const ChatTurn> history,
                                    const std::string* question) const {
  using nlohmann::json;
  if (profile_.api_flavor == ApiFlavor::ollama_generate_image) {
    std::string prompt = request.user_text;
    for (const auto& turn : history) {
      prompt += (turn.role == Role::assistant ? "\n\nAssistant: " : "\n\nUser: ") + turn.text;
    }
    if (question != nullptr) prompt += "\n\nUser: " + *question;
    return {{"model", profile_.model_id},
            {"system", request.system_text},
            {"prompt", prompt},
            {"images", json::array({base64_encode(request.image)})},
            {"stream", false},
            {"options", {{"num_predict", profile_.max_tokens}}}};
  }

  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_text}});
  messages.push_back(
      {{"role", "user"},
       {"content", json::array({{{"type", "image_url"}, {"image_url", {{"url", data_uri(request.image)}}}},
                                {{"type", "text"}, {"text", request.user_text}}})}});
  for (const auto& turn : history) {
    messages.push_back({{"role", turn.role == Role::assistant ? "assistant" : "user"}, {"content", turn.text}});
  }
  if (question != nullptr) messages.push_back({{"role", "user"}, {"content", *question}});
  return {{"model", profile_.model_id}, {"max_tokens", profile_.max_tokens}, {"messages", messages}};
}

std::string VlmClient::post(const std::string& path, const nlohmann::json& body, double& elapsed_s) {
  const auto url = split_url(profile_.endpoint_url);
  httplib::Client client(url.origin);
  const auto whole = std::chrono::duration<double>(profile_.timeout_s);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(whole);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(whole - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!profile_.api_key.empty()) headers.emplace("Authorization", "Bearer " + profile_.api_key);

  const auto start = Clock::now();
  auto res = client.Post(url.base_path + path, headers, body.dump(), "application/json");
  elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();

  if (!res) {
    const auto err = res.error();
    const std::string what = "backend '" + profile_.name + "': " + httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed_s >= profile_.timeout_s * 0.95)) {
      throw TimeoutError(what + " after " + std::to_string(elapsed_s) + " s", elapsed_s);
    }
    throw TransportError(what);
  }
  if (res->status != 200) {
    throw TransportError("backend '" + profile_.name + "': HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
  }
  return res->body;
}

std::string VlmClient::mock_text(const AnalysisRequest&, std::span<const ChatTurn> history,
                                 const std::string* question, const TrialContext& ctx) {
  std::call_once(fixture_once_, [this] {
    fixture_ = std::make_shared<const ReplayFixture>(ReplayFixture::load(profile_.endpoint_url));
  });
  if (question != nullptr) {
    // Follow-ups echo the transcript length so callers can check what was sent.
    return "Follow-up answer (transcript turns: " + std::to_string(history.size() + 1) + ")";
  }
  ReplayKey key = ctx.replay.value_or(ReplayKey{"*", profile_.name, 1});
  if (key.backend.empty()) key.backend = profile_.name;
  auto text = fixture_->find(key);
  if (!text) {
    throw TransportError("backend '" + profile_.name + "': no replay fixture for (" + key.scenario + ", " +
                         key.backend + ", " + std::to_string(key.trial) + ")");
  }
  return *text;
}

ModelResponse VlmClient::dispatch(const AnalysisRequest& request, std::span<const ChatTurn> history,
                                  const std::string* question, const TrialContext& ctx) {
  std::lock_guard lock(call_mutex_);
  ModelResponse out;
  out.backend_name = profile_.name;
  out.trial_id = ctx.trial_id;
  out.timestamp = std::chrono::system_clock::now();

  if (profile_.api_flavor == ApiFlavor::mock_replay) {
    const auto start = Clock::now();
    out.text = mock_text(request, history, question, ctx);
    out.latency_s = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
  }

  const auto body = wire_body(request, history, question);
  double elapsed = 0.0;
  nlohmann::json reply;
  try {
    if (profile_.api_flavor == ApiFlavor::openai_chat_image) {
      reply = nlohmann::json::parse(post("/v1/chat/completions", body, elapsed));
      const auto& content = reply.at("choices").at(0).at("message").at("content");
      out.text = content.is_null() ? "" : content.get<std::string>();
    } else {
      reply = nlohmann::json::parse(post("/api/generate", body, elapsed));
      out.text = reply.value("response", "");
    }
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("backend '" + profile_.name + "': malformed response: " + e.what());
  }
  out.latency_s = elapsed;
  return out;
}

ModelResponse VlmClient::analyze(const AnalysisRequest& request, const TrialContext& ctx) {
  check_hygiene(request, rules_);
  return dispatch(request, {}, nullptr, ctx);
}

ModelResponse VlmClient::chat_continue(ChatSession& session, const std::string& question,
                                       const TrialContext& ctx) {
  const bool answered = std::any_of(session.turns.begin(), session.turns.end(),
                                    [](const ChatTurn& t) { return t.role == Role::assistant; });
  if (!answered) throw PreconditionError("chat needs a completed first analysis");
  check_hygiene(session.base_request, rules_);
  auto response = dispatch(session.base_request, session.turns, &question, ctx);
  session.turns.push_back({Role::user, question});
  session.turns.push_back({Role::assistant, response.text});
  return response;
}

}  // namespace rfa
