#include "rfa/service.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <random>
#include <thread>

#include <httplib.h>

#include "rfa/error.hpp"
#include "rfa/hardware_source.hpp"
#include "rfa/prompt.hpp"
#include "rfa/scene.hpp"
#include "rfa/util.hpp"

namespace rfa {

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = {
      {"FM 98 MHz", {98e6, 10e6, 25.0, 2048}},
      {"ISM 433.92 MHz", {433.92e6, 5e6, 35.0, 2048}},
      {"LTE 806 MHz", {806e6, 20e6, 30.0, 2048}},
      {"GSM 950 MHz", {950e6, 20e6, 30.0, 2048}},
      {"Wi-Fi 2437 MHz", {2437e6, 40e6, 20.0, 2048}},
      {"BT 2400 MHz", {2400e6, 40e6, 20.0, 2048}},
  };
  return list;
}

const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::pair<std::string, int> parse_bind(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind address must look like HOST:PORT");
  std::string host = addr.substr(0, colon);
  if (host.empty()) host = "0.0.0.0";
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) throw ConfigError("bad port in bind address '" + addr + "'");
  return {host, port};
}

ServiceConfig load_service_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("service config '" + path + "': " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    return std::filesystem::path(p).is_relative() ? (base / p).string() : p;
  };
  ServiceConfig c;
  if (j.contains("bind")) std::tie(c.bind_host, c.port) = parse_bind(j["bind"].get<std::string>());
  const auto source = j.value("source", "simulator");
  if (source == "simulator") {
    c.source = SourceKind::simulator;
  } else if (source == "hardware") {
    c.source = SourceKind::hardware;
  } else {
    throw ConfigError("service config: unknown source '" + source + "'");
  }
  c.default_preset = j.value("default_preset", c.default_preset);
  if (!find_preset(c.default_preset)) throw ConfigError("unknown default_preset '" + c.default_preset + "'");
  c.fps = j.value("fps", c.fps);
  c.blocks_per_second = j.value("blocks_per_second", c.blocks_per_second);
  if (!(c.fps > 0.0) || !(c.blocks_per_second > 0.0)) {
    throw ConfigError("service config: fps and blocks_per_second must be > 0");
  }
  if (j.contains("backends")) c.backends = load_profiles(resolve(j["backends"].get<std::string>()));
  if (j.contains("suite")) c.scenes = load_suite(resolve(j["suite"].get<std::string>()));
  return c;
}

SceneSpec live_scene(const CaptureSettings& settings, const std::optional<Suite>& suite) {
  SceneSpec scene;
  if (suite) {
    for (const auto& s : suite->scenarios) {
      if (s.settings.center_freq_hz == settings.center_freq_hz &&
          s.settings.sample_rate_hz == settings.sample_rate_hz) {
        scene = s.scene;
        break;
      }
    }
  }
  if (scene.emitters.empty()) {
    scene.noise_floor_db = -70.0;
    scene.emitters.push_back({EmitterKind::fm_like, settings.sample_rate_hz / 8.0, settings.sample_rate_hz / 1000.0,
                              30.0, 1.0, 1, 7});
  }
  scene.settings = settings;
  scene.duration_blocks = std::numeric_limits<std::uint64_t>::max();
  return scene;
}

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

struct Snapshot {
  std::uint64_t generation = 0;  // bumps on every retune
  std::uint64_t seq = 0;         // frames published since start
  bool live = false;
  CaptureSettings settings;
  PipelineConfig pipeline;
  std::vector<std::shared_ptr<const SpectrumFrame>> rows;  // oldest first
  std::vector<Peak> peaks;                                 // of the newest row
};

struct Session {
  std::mutex mutex;
  std::string backend;
  ChatSession chat;
  std::vector<std::uint8_t> png;
  Clock::time_point last_used;
};

// Field-level validation failures, reported as {"error", "fields"} with 400.
struct FieldErrors {
  json fields = json::object();
  void add(const std::string& field, const std::string& msg) { fields[field] = msg; }
  bool empty() const { return fields.empty(); }
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg, const json& fields = nullptr) {
  json body = {{"error", msg}};
  if (!fields.is_null()) body["fields"] = fields;
  send_json(res, status, body);
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    auto j = json::parse(req.body.empty() ? "{}" : req.body);
    if (!j.is_object()) {
      send_error(res, 400, "request body must be a JSON object");
      return std::nullopt;
    }
    return j;
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
    return std::nullopt;
  }
}

json peaks_json(const std::vector<Peak>& peaks) {
  json out = json::array();
  for (const auto& p : peaks) {
    out.push_back({{"center_hz", p.center_hz}, {"bandwidth_hz", p.bandwidth_hz}, {"peak_db", p.peak_db}});
  }
  return out;
}

std::string new_session_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  httplib::Server server;
  std::map<std::string, std::shared_ptr<VlmClient>> clients;

  std::atomic<bool> stopping{false};
  std::atomic<double> fps;
  std::thread acquisition;
  std::thread serving;
  int bound_port = -1;

  // Published state.
  mutable std::mutex snap_mutex;
  std::condition_variable snap_cv;
  std::shared_ptr<const Snapshot> snap;

  // Commands for the acquisition thread.
  std::mutex cmd_mutex;
  std::condition_variable cmd_cv;
  std::deque<std::packaged_task<void()>> commands;

  // Owned by the acquisition thread.
  std::unique_ptr<BlockSource> source;
  std::unique_ptr<SpectrumPipeline> pipeline;
  std::deque<std::shared_ptr<const SpectrumFrame>> ring;
  CaptureSettings settings;
  PipelineConfig pipeline_cfg;
  std::uint64_t generation = 0;
  std::uint64_t seq = 0;
  std::vector<Peak> latest_peaks;

  std::mutex session_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  explicit Impl(ServiceConfig c) : config(std::move(c)), fps(config.fps) {
    validate(config.pipeline);
    for (const auto& p : config.backends) clients[p.name] = std::make_shared<VlmClient>(p);
    const auto* preset = find_preset(config.default_preset);
    if (!preset) throw ConfigError("unknown default_preset '" + config.default_preset + "'");
    settings = preset->settings;
    pipeline_cfg = config.pipeline;
    open_source(settings);  // a missing hardware adapter leaves the service sourceless
    publish();
    routes();
    acquisition = std::thread([this] { acquire(); });
  }

  ~Impl() {
    stop();
    if (acquisition.joinable()) acquisition.join();
    if (serving.joinable()) serving.join();
  }

  void stop() {
    stopping = true;
    cmd_cv.notify_all();
    snap_cv.notify_all();
    server.stop();
  }

  // --- acquisition thread ----------------------------------------------------

  // Returns false (and leaves no source) when the source cannot be opened.
  bool open_source(const CaptureSettings& s) {
    source.reset();
    pipeline.reset();
    ring.clear();
    latest_peaks.clear();
    settings = s;
    ++generation;
    try {
      if (config.source == SourceKind::simulator) {
        source = generate_scene(live_scene(s, config.scenes));
      } else {
        source = open_hardware_source(s);
      }
    } catch (const UnsupportedSourceError&) {
      return false;
    }
    pipeline = std::make_unique<SpectrumPipeline>(s, pipeline_cfg);
    return true;
  }

  void publish() {
    auto next = std::make_shared<Snapshot>();
    next->generation = generation;
    next->seq = seq;
    next->live = source != nullptr;
    next->settings = settings;
    next->pipeline = pipeline_cfg;
    next->rows.assign(ring.begin(), ring.end());
    next->peaks = latest_peaks;
    {
      std::lock_guard lock(snap_mutex);
      snap = std::move(next);
    }
    snap_cv.notify_all();
  }

  void acquire() {
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / config.blocks_per_second));
    auto next_tick = Clock::now();
    while (!stopping) {
      std::deque<std::packaged_task<void()>> todo;
      {
        std::unique_lock lock(cmd_mutex);
        if (!source) {
          cmd_cv.wait(lock, [&] { return stopping || !commands.empty(); });
        } else if (config.source == SourceKind::simulator) {
          cmd_cv.wait_until(lock, next_tick, [&] { return stopping || !commands.empty(); });
        }
        todo.swap(commands);
      }
      if (stopping) break;
      for (auto& task : todo) task();
      if (!todo.empty()) {
        next_tick = Clock::now();
        continue;
      }
      if (!source || Clock::now() < next_tick) continue;
      next_tick += period;
      // Never try to catch up on a backlog after a stall.
      if (next_tick < Clock::now() - 10 * period) next_tick = Clock::now();

      auto block = source->next();
      if (!block) {
        source.reset();
        publish();
        continue;
      }
      if (pipeline->process(*block)) {
        ring.push_back(std::make_shared<const SpectrumFrame>(*pipeline->latest()));
        while (ring.size() > WaterfallBuffer::kCapacity) ring.pop_front();
        latest_peaks = detect_peaks(*ring.back(), pipeline_cfg);
        ++seq;
        publish();
      }
    }
    // Waiters on unexecuted commands see a broken promise instead of hanging.
    std::lock_guard lock(cmd_mutex);
    commands.clear();
  }

  // Runs `fn` on the acquisition thread and waits for it.
  template <typename Fn>
  auto run_on_acquisition(Fn fn) -> decltype(fn()) {
    using R = decltype(fn());
    auto result = std::make_shared<std::optional<std::conditional_t<std::is_void_v<R>, int, R>>>();
    std::packaged_task<void()> task([fn = std::move(fn), result]() mutable {
      if constexpr (std::is_void_v<R>) {
        fn();
      } else {
        *result = fn();
      }
    });
    auto done = task.get_future();
    {
      std::lock_guard lock(cmd_mutex);
      if (stopping) throw TransportError("service is stopping");
      commands.push_back(std::move(task));
    }
    cmd_cv.notify_all();
    done.get();
    if constexpr (!std::is_void_v<R>) return std::move(**result);
  }

  std::shared_ptr<const Snapshot> current() const {
    std::lock_guard lock(snap_mutex);
    return snap;
  }

  // --- sessions ----------------------------------------------------------------

  void evict_idle() {
    const auto cutoff = Clock::now() - config.session_idle;
    for (auto it = sessions.begin(); it != sessions.end();) {
      it = it->second->last_used < cutoff ? sessions.erase(it) : std::next(it);
    }
  }

  std::shared_ptr<Session> find_session(const std::string& id) {
    std::lock_guard lock(session_mutex);
    evict_idle();
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  // --- HTTP ----------------------------------------------------------------------

  json config_json(const Snapshot& s) const {
    json list = json::array();
    for (const auto& p : presets()) list.push_back({{"name", p.name}, {"settings", p.settings}});
    return {{"settings", s.settings},
            {"pipeline",
             {{"averaging_frames", s.pipeline.averaging_frames},
              {"threshold_db", s.pipeline.threshold_db},
              {"db_floor", s.pipeline.db_floor},
              {"fps", fps.load()}}},
            {"source", {{"kind", config.source == SourceKind::simulator ? "simulator" : "hardware"}, {"live", s.live}}},
            {"waterfall_rows", s.rows.size()},
            {"presets", list}};
  }

  std::vector<SpectrumFrame> rows_of(const Snapshot& s) const {
    std::vector<SpectrumFrame> rows;
    rows.reserve(s.rows.size());
    for (const auto& r : s.rows) rows.push_back(*r);
    return rows;
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });

    server.Get("/api/config", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, config_json(*current()));
    });

    server.Get("/api/presets", [](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& p : presets()) list.push_back({{"name", p.name}, {"settings", p.settings}});
      send_json(res, 200, list);
    });

    server.Get("/api/backends", [this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& p : config.backends) list.push_back(p);
      send_json(res, 200, list);
    });

    server.Post("/api/tune", [this](const httplib::Request& req, httplib::Response& res) { tune(req, res); });
    server.Post("/api/pipeline",
                [this](const httplib::Request& req, httplib::Response& res) { set_pipeline(req, res); });
    server.Get("/api/stream", [this](const httplib::Request& req, httplib::Response& res) { stream(req, res); });
    server.Get("/api/waterfall.png",
               [this](const httplib::Request& req, httplib::Response& res) { waterfall_png(req, res); });
    server.Post("/api/analyze", [this](const httplib::Request& req, httplib::Response& res) { analyze(req, res); });
    server.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) { chat(req, res); });
  }

  void tune(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    FieldErrors errs;
    CaptureSettings s;
    auto number = [&](const char* key, bool required, double& out, auto ok, const char* rule) {
      if (!body->contains(key)) {
        if (required) errs.add(key, "required");
        return;
      }
      const auto& v = (*body)[key];
      if (!v.is_number()) {
        errs.add(key, "must be a number");
      } else if (!ok(v.get<double>())) {
        errs.add(key, rule);
      } else {
        out = v.get<double>();
      }
    };
    auto finite = [](double v) { return std::isfinite(v); };
    number("center_freq_hz", true, s.center_freq_hz, [](double v) { return std::isfinite(v) && v > 0.0; },
           "must be > 0");
    number("sample_rate_hz", true, s.sample_rate_hz, [](double v) { return std::isfinite(v) && v > 0.0; },
           "must be > 0");
    s.gain_db = current()->settings.gain_db;
    number("gain_db", false, s.gain_db, finite, "must be finite");
    s.fft_size = current()->settings.fft_size;
    if (body->contains("fft_size")) {
      const auto& v = (*body)["fft_size"];
      if (!v.is_number_unsigned() || !is_valid_fft_size(v.get<std::uint64_t>())) {
        errs.add("fft_size", "must be a power of two >= 64");
      } else {
        s.fft_size = v.get<std::uint32_t>();
      }
    }
    if (!errs.empty()) return send_error(res, 400, "invalid tune request", errs.fields);
    try {
      validate(s);
    } catch (const ConfigError& e) {
      return send_error(res, 400, "invalid tune request", json{{"settings", e.what()}});
    }

    const bool live = run_on_acquisition([&] {
      const bool ok = open_source(s);
      publish();
      return ok;
    });
    if (!live) return send_error(res, 409, "capture source not available for these settings");
    send_json(res, 200, config_json(*current()));
  }

  void set_pipeline(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    FieldErrors errs;
    PipelineConfig cfg = current()->pipeline;
    double new_fps = fps.load();
    if (body->contains("averaging_frames")) {
      const auto& v = (*body)["averaging_frames"];
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1 || v.get<std::uint64_t>() > 1024) {
        errs.add("averaging_frames", "must be an integer in [1, 1024]");
      } else {
        cfg.averaging_frames = v.get<std::uint32_t>();
      }
    }
    if (body->contains("threshold_db")) {
      const auto& v = (*body)["threshold_db"];
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        errs.add("threshold_db", "must be a finite number");
      } else {
        cfg.threshold_db = v.get<double>();
      }
    }
    if (body->contains("fps")) {
      const auto& v = (*body)["fps"];
      if (!v.is_number() || !(v.get<double>() > 0.0) || v.get<double>() > 120.0) {
        errs.add("fps", "must be in (0, 120]");
      } else {
        new_fps = v.get<double>();
      }
    }
    if (!errs.empty()) return send_error(res, 400, "invalid pipeline request", errs.fields);
    try {
      validate(cfg);
    } catch (const ConfigError& e) {
      return send_error(res, 400, "invalid pipeline request", json{{"pipeline", e.what()}});
    }
    fps = new_fps;
    run_on_acquisition([&] {
      pipeline_cfg = cfg;
      if (pipeline) pipeline->set_config(cfg);
      publish();
    });
    send_json(res, 200, config_json(*current()));
  }

  void stream(const httplib::Request& req, httplib::Response& res) {
    if (!current()->live) return send_error(res, 409, "no live capture source");
    long max_events = -1;
    if (req.has_param("max_events")) {
      try {
        max_events = std::stol(req.get_param_value("max_events"));
      } catch (const std::exception&) {
        max_events = 0;
      }
      if (max_events < 1) {
        return send_error(res, 400, "invalid stream request", json{{"max_events", "must be a positive integer"}});
      }
    }
    auto sent = std::make_shared<long>(0);
    auto last_seq = std::make_shared<std::uint64_t>(0);
    auto last_emit = std::make_shared<Clock::time_point>(Clock::time_point{});
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "application/x-ndjson", [this, max_events, sent, last_seq, last_emit](std::size_t, httplib::DataSink& sink) {
          // Display-rate cap.
          const auto gap = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / fps.load()));
          const auto earliest = *last_emit + gap;
          if (Clock::now() < earliest) std::this_thread::sleep_until(earliest);

          std::shared_ptr<const Snapshot> s;
          {
            std::unique_lock lock(snap_mutex);
            snap_cv.wait_for(lock, std::chrono::seconds(1), [&] {
              return stopping.load() || (snap->seq > *last_seq && !snap->rows.empty());
            });
            s = snap;
          }
          if (stopping) {
            sink.done();
            return false;
          }
          if (!sink.is_writable()) return false;
          if (s->seq <= *last_seq || s->rows.empty()) return true;  // nothing new yet

          const auto& row = *s->rows.back();
          json event = {{"seq", s->seq},
                        {"generation", s->generation},
                        {"calibration",
                         {{"center_freq_hz", s->settings.center_freq_hz},
                          {"sample_rate_hz", s->settings.sample_rate_hz},
                          {"fft_size", s->settings.fft_size},
                          {"freq_start_hz", row.freq_start_hz},
                          {"freq_step_hz", row.freq_step_hz}}},
                        {"spectrum", row.power_db},
                        {"peaks", peaks_json(s->peaks)}};
          const auto line = event.dump() + "\n";
          if (!sink.write(line.data(), line.size())) return false;
          *last_seq = s->seq;
          *last_emit = Clock::now();
          if (max_events > 0 && ++*sent >= max_events) sink.done();
          return true;
        });
  }

  void waterfall_png(const httplib::Request& req, httplib::Response& res) {
    if (req.has_param("session")) {
      auto session = find_session(req.get_param_value("session"));
      if (!session) return send_error(res, 404, "unknown session");
      std::lock_guard lock(session->mutex);
      res.set_content(std::string(session->png.begin(), session->png.end()), "image/png");
      return;
    }
    auto s = current();
    if (!s->live && s->rows.empty()) return send_error(res, 409, "no live capture source");
    if (s->rows.empty()) return send_error(res, 409, "waterfall is empty");
    const auto png = render_waterfall(rows_of(*s), config.render);
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  // Runs a backend call away from the HTTP worker pool bookkeeping so a slow
  // model never holds the acquisition or stream paths.
  template <typename Fn>
  static auto on_backend_io(Fn fn) {
    return std::async(std::launch::async, std::move(fn)).get();
  }

  void analyze(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    if (!body->contains("backend") || !(*body)["backend"].is_string()) {
      return send_error(res, 400, "invalid analyze request", json{{"backend", "required string"}});
    }
    const auto name = (*body)["backend"].get<std::string>();
    auto client_it = clients.find(name);
    if (client_it == clients.end()) {
      return send_error(res, 400, "invalid analyze request", json{{"backend", "unknown backend '" + name + "'"}});
    }
    auto s = current();
    if (!s->live) return send_error(res, 409, "no live capture source");
    if (s->rows.empty()) return send_error(res, 409, "waterfall is empty");

    const auto png = render_waterfall(rows_of(*s), config.render);
    const auto prompt = build_prompt(s->settings);
    AnalysisRequest request{png, s->settings, prompt.system_text, prompt.user_text};
    check_hygiene(request, detector_hygiene_rules(s->settings, s->peaks));

    auto session = std::make_shared<Session>();
    session->backend = name;
    session->png = png;
    session->chat.base_request = request;
    const auto id = new_session_id();

    ModelResponse response;
    try {
      auto client = client_it->second;
      response = on_backend_io([client, &request, &id] { return client->analyze(request, TrialContext{id, {}}); });
    } catch (const TransportError& e) {
      return send_error(res, 502, e.what());
    }
    session->chat.turns.push_back({Role::assistant, response.text});
    session->last_used = Clock::now();
    {
      std::lock_guard lock(session_mutex);
      evict_idle();
      sessions[id] = session;
    }
    send_json(res, 200,
              {{"session_id", id},
               {"backend", name},
               {"response", response.text},
               {"latency_s", response.latency_s},
               {"settings", s->settings},
               {"image_sha256", sha256_hex(png)},
               {"prompt", {{"system", request.system_text}, {"user", request.user_text}}}});
  }

  void chat(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    FieldErrors errs;
    if (!body->contains("session_id") || !(*body)["session_id"].is_string()) errs.add("session_id", "required string");
    if (!body->contains("question") || !(*body)["question"].is_string() ||
        (*body)["question"].get<std::string>().empty()) {
      errs.add("question", "required non-empty string");
    }
    if (!errs.empty()) return send_error(res, 400, "invalid chat request", errs.fields);
    auto session = find_session((*body)["session_id"].get<std::string>());
    if (!session) return send_error(res, 404, "unknown session");

    std::lock_guard lock(session->mutex);
    auto client_it = clients.find(session->backend);
    if (client_it == clients.end()) return send_error(res, 502, "backend no longer registered");
    const auto question = (*body)["question"].get<std::string>();
    ModelResponse response;
    try {
      auto client = client_it->second;
      auto& chat_session = session->chat;
      response = on_backend_io([client, &chat_session, &question] {
        return client->chat_continue(chat_session, question, TrialContext{});
      });
    } catch (const TransportError& e) {
      return send_error(res, 502, e.what());
    }
    session->last_used = Clock::now();
    send_json(res, 200,
              {{"session_id", (*body)["session_id"]},
               {"response", response.text},
               {"latency_s", response.latency_s},
               {"turns", session->chat.turns.size()}});
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() = default;

int Service::bind() {
  auto& s = impl_->server;
  if (impl_->config.port == 0) {
    impl_->bound_port = s.bind_to_any_port(impl_->config.bind_host);
  } else if (s.bind_to_port(impl_->config.bind_host, impl_->config.port)) {
    impl_->bound_port = impl_->config.port;
  }
  if (impl_->bound_port <= 0) {
    throw TransportError("cannot bind " + impl_->config.bind_host + ":" + std::to_string(impl_->config.port));
  }
  return impl_->bound_port;
}

void Service::serve() { impl_->server.listen_after_bind(); }

int Service::start_background() {
  const int port = bind();
  impl_->serving = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() { impl_->stop(); }

std::size_t Service::waterfall_rows() const { return impl_->current()->rows.size(); }

}  // namespace rfa
