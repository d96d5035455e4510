#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/backend.hpp"
#include "rfa/dsp.hpp"
#include "rfa/render.hpp"
#include "rfa/suite.hpp"

namespace rfa {

struct Preset {
  std::string name;
  CaptureSettings settings;
};

// Quick-access bands offered by the operator console.
const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view name);

enum class SourceKind { simulator, hardware };

struct ServiceConfig {
  std::string bind_host = "127.0.0.1";
  int port = 8080;
  SourceKind source = SourceKind::simulator;
  std::string default_preset = "LTE 806 MHz";
  PipelineConfig pipeline;
  double fps = 10.0;                  // stream event cap
  double blocks_per_second = 200.0;   // simulator pacing
  std::vector<BackendProfile> backends;
  std::optional<Suite> scenes;        // simulator scenes keyed by (fc, SR)
  RenderSpec render;
  std::chrono::seconds session_idle{30 * 60};
};

// {"bind": "HOST:PORT", "source", "default_preset", "fps", "blocks_per_second",
//  "backends": FILE, "suite": FILE}. Relative paths resolve against the file.
ServiceConfig load_service_config(const std::string& path);

// Parses "HOST:PORT" or ":PORT". Throws ConfigError.
std::pair<std::string, int> parse_bind(const std::string& addr);

// The scene the simulator plays for `settings`: the suite scenario with the
// same centre frequency and sample rate, else noise plus one tone.
SceneSpec live_scene(const CaptureSettings& settings, const std::optional<Suite>& suite);

// HTTP service: one acquisition thread owns source and pipeline; handlers
// talk to it by message and read immutable snapshots.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds config.bind_host:config.port (port 0 picks a free one) and returns
  // the bound port. Throws TransportError when binding fails.
  int bind();
  // Blocks until stop().
  void serve();
  // bind() + serve() on a background thread; returns the bound port.
  int start_background();
  void stop();

  // Rows in the current waterfall snapshot.
  std::size_t waterfall_rows() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rfa
