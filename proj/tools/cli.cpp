#include "cli.hpp"

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rfa/backend.hpp"
#include "rfa/capture_file.hpp"
#include "rfa/dsp.hpp"
#include "rfa/error.hpp"
#include "rfa/image.hpp"
#include "rfa/prompt.hpp"
#include "rfa/render.hpp"
#include "rfa/report.hpp"
#include "rfa/scene.hpp"
#include "rfa/service.hpp"
#include "rfa/suite.hpp"
#include "rfa/util.hpp"

namespace rfa::cli {
namespace {

namespace fs = std::filesystem;

std::string data_file(const std::string& name) { return (fs::path(data_dir()) / name).string(); }

std::vector<std::string> split_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

BackendProfile pick_profile(const std::vector<BackendProfile>& profiles, const std::string& name) {
  for (const auto& p : profiles) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : profiles) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown backend '" + name + "' (known: " + known + ")");
}

struct SimulateArgs {
  std::string scene, out;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto spec = load_scene(a.scene);
  const auto blocks = generate_all(spec);
  write_capture(a.out, spec.settings, blocks);
  out << "wrote " << blocks.size() << " blocks (" << spec.settings.fft_size << " samples each) to " << a.out << "\n";
  return kExitOk;
}

struct RenderArgs {
  std::string capture, out;
  std::size_t rows = WaterfallBuffer::kCapacity;
  std::uint32_t averaging = PipelineConfig{}.averaging_frames;
};

int run_render(const RenderArgs& a, std::ostream& out) {
  CaptureReplaySource source(read_capture(a.capture));
  PipelineConfig cfg;
  cfg.averaging_frames = a.averaging;
  SpectrumPipeline chain(source.settings(), cfg);
  while (auto block = source.next()) chain.process(*block);
  if (chain.waterfall().empty()) throw PreconditionError("capture too short for one averaged frame");
  auto rows = chain.waterfall().snapshot();
  if (rows.size() > a.rows) rows.erase(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(a.rows));
  const RenderSpec spec;
  const auto png = render_waterfall(rows, spec);
  write_binary_file(a.out, png);
  out << "wrote " << a.out << " (" << rows.size() << " rows, "
      << format_title(spec.title_template, source.settings().center_freq_hz, source.settings().sample_rate_hz)
      << ")\n";
  return kExitOk;
}

struct AnalyzeArgs {
  std::string image, backend, profiles, replay_scenario;
  double fc_mhz = 0.0, sr_mhz = 0.0;
  int replay_trial = 1;
};

int run_analyze(const AnalyzeArgs& a, std::ostream& out) {
  CaptureSettings settings;
  settings.center_freq_hz = a.fc_mhz * 1e6;
  settings.sample_rate_hz = a.sr_mhz * 1e6;
  validate(settings);
  const auto prompt = build_prompt(settings);
  AnalysisRequest req{read_binary_file(a.image), settings, prompt.system_text, prompt.user_text};
  decode_png(req.image);  // reject non-PNG input before anything is sent

  VlmClient client(pick_profile(load_profiles(a.profiles), a.backend));
  TrialContext ctx;
  if (!a.replay_scenario.empty()) ctx.replay = ReplayKey{a.replay_scenario, a.backend, a.replay_trial};
  const auto resp = client.analyze(req, ctx);
  out << resp.text << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string suite, backends, profiles, adjudications, out;
  bool sequential = false;
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto suite = load_suite(a.suite);
  const auto profiles = load_profiles(a.profiles);
  std::vector<std::shared_ptr<VlmClient>> clients;
  for (const auto& name : split_list(a.backends)) {
    clients.push_back(std::make_shared<VlmClient>(pick_profile(profiles, name)));
  }
  if (clients.empty()) throw ConfigError("--backends names no backend");

  std::optional<Adjudications> adjudications;
  if (!a.adjudications.empty()) adjudications = Adjudications::load(a.adjudications);
  RunOptions opt;
  opt.adjudications = adjudications ? &*adjudications : nullptr;
  opt.parallel_backends = !a.sequential;

  const auto run = run_suite(suite, clients, opt);
  write_run(a.out, run);
  out << format_report_text(run.report);
  const auto failed = std::count_if(run.records.begin(), run.records.end(), [](const TrialRecord& r) { return r.failed; });
  out << "\n" << run.records.size() << " trials (" << failed << " failed); archive in " << a.out << "\n";
  return kExitOk;
}

struct ReportArgs {
  std::string transcripts;
};

int run_report(const ReportArgs& a, std::ostream& out) {
  const auto report = reaggregate(a.transcripts);
  write_report_files(a.transcripts, report);
  out << format_report_text(report);
  return kExitOk;
}

struct ServeArgs {
  std::string bind, config, profiles, suite, source;
};

int run_serve(const ServeArgs& a, std::ostream& out) {
  ServiceConfig cfg;
  if (!a.config.empty()) cfg = load_service_config(a.config);
  if (!a.bind.empty()) std::tie(cfg.bind_host, cfg.port) = parse_bind(a.bind);
  if (!a.profiles.empty()) {
    cfg.backends = load_profiles(a.profiles);
  } else if (cfg.backends.empty()) {
    cfg.backends = load_profiles(data_file("backends.json"));
  }
  if (!a.suite.empty()) {
    cfg.scenes = load_suite(a.suite);
  } else if (!cfg.scenes) {
    cfg.scenes = load_suite(data_file("default_suite.json"));
  }
  if (a.source == "hardware") cfg.source = SourceKind::hardware;
  if (a.source == "simulator") cfg.source = SourceKind::simulator;

  // Route SIGINT/SIGTERM to a waiter thread so shutdown runs outside a signal
  // handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(cfg);
  const int port = service.bind();
  out << "serving on http://" << cfg.bind_host << ":" << port << "\n" << std::flush;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.serve();
  service.stop();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

}  // namespace

std::string data_dir() {
  if (const char* env = std::getenv("RFA_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return RFA_DEFAULT_DATA_DIR;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RF spectrum analyzer with vision-language model analysis", "rfa"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rfa 0.1.0");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a scene and write a capture file");
  simulate->add_option("--scene", sim.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output capture file")->required();

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Render a capture file to a waterfall PNG");
  render->add_option("--capture", ren.capture, "Capture file")->required()->check(CLI::ExistingFile);
  render->add_option("--out", ren.out, "Output PNG")->required();
  render->add_option("--rows", ren.rows, "Newest rows to draw")
      ->check(CLI::Range(std::size_t{1}, WaterfallBuffer::kCapacity));
  render->add_option("--averaging", ren.averaging, "Blocks averaged per row")->check(CLI::Range(1u, 1024u));

  AnalyzeArgs ana;
  ana.profiles = data_file("backends.json");
  auto* analyze = app.add_subcommand("analyze", "Send one waterfall image to a backend");
  analyze->add_option("--image", ana.image, "Waterfall PNG")->required()->check(CLI::ExistingFile);
  analyze->add_option("--fc", ana.fc_mhz, "Centre frequency in MHz")->required();
  analyze->add_option("--sr", ana.sr_mhz, "Sample rate in MHz")->required();
  analyze->add_option("--backend", ana.backend, "Backend profile name")->required();
  analyze->add_option("--profiles", ana.profiles, "Backend profiles JSON")->capture_default_str();
  analyze->add_option("--replay-scenario", ana.replay_scenario, "Replay fixture key for mock backends");
  analyze->add_option("--replay-trial", ana.replay_trial, "Replay fixture trial")->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  ev.profiles = data_file("backends.json");
  auto* evaluate = app.add_subcommand("evaluate", "Run a scenario suite against backends");
  evaluate->add_option("--suite", ev.suite, "Suite JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--backends", ev.backends, "Comma-separated backend names")->required();
  evaluate->add_option("--profiles", ev.profiles, "Backend profiles JSON")->capture_default_str();
  evaluate->add_option("--adjudications", ev.adjudications, "Adjudication overrides")->check(CLI::ExistingFile);
  evaluate->add_option("--out", ev.out, "Output directory")->required();
  evaluate->add_flag("--sequential", ev.sequential, "Query backends one after another");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Re-aggregate an evaluation archive");
  report->add_option("--transcripts", rep.transcripts, "Archive directory")->required()->check(CLI::ExistingDirectory);

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--bind", srv.bind, "HOST:PORT (default 127.0.0.1:8080)");
  serve->add_option("--config", srv.config, "Service config JSON")->check(CLI::ExistingFile);
  serve->add_option("--profiles", srv.profiles, "Backend profiles JSON")->check(CLI::ExistingFile);
  serve->add_option("--suite", srv.suite, "Suite with simulator scenes")->check(CLI::ExistingFile);
  serve->add_option("--source", srv.source, "simulator or hardware")->check(CLI::IsMember({"simulator", "hardware"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "rfa 0.1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "rfa: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim, out);
    if (*render) return run_render(ren, out);
    if (*analyze) return run_analyze(ana, out);
    if (*evaluate) return run_evaluate(ev, out);
    if (*report) return run_report(rep, out);
    if (*serve) return run_serve(srv, out);
  } catch (const std::exception& e) {
    err << "rfa: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rfa::cli
