#include "rfa/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "rfa/error.hpp"
#include "rfa/util.hpp"

namespace rfa {
namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

// Minimal CSV quoting: backend names may contain commas.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  write_binary_file(p.string(), bytes);
}

}  // namespace

std::string format_report_text(const EvalReport& r) {
  std::size_t col = 12;
  for (const auto& b : r.backends) col = std::max(col, b.size() + 2);
  std::size_t first = 24;

  std::ostringstream out;
  out << "Mean PAES (0-5) per scenario\n";
  out << pad("scenario", first, false);
  for (const auto& b : r.backends) out << pad(b, col, true);
  out << '\n';
  for (const auto& s : r.scenarios) {
    out << pad(s + " (n=" + std::to_string(r.cell(s, r.backends.front()).trials) + ")", first, false);
    for (const auto& b : r.backends) out << pad(fmt("%.2f", r.cell(s, b).mean_paes), col, true);
    out << '\n';
  }

  out << "\nLeakage and hallucinations per backend\n";
  out << pad("metric", first, false);
  for (const auto& b : r.backends) out << pad(b, col, true);
  out << '\n';
  auto row = [&](const std::string& label, auto value_of) {
    out << pad(label, first, false);
    for (const auto& b : r.per_backend) out << pad(value_of(b), col, true);
    out << '\n';
  };
  row("PLR (%)", [](const BackendSummary& b) { return b.plr ? fmt("%.1f", *b.plr * 100.0) : std::string("n/a"); });
  row("bandwidth estimates", [](const BackendSummary& b) { return std::to_string(b.leaked + b.grounded); });
  row("false-negative halluc.", [](const BackendSummary& b) { return std::to_string(b.false_negative_count); });
  row("tech-label halluc.", [](const BackendSummary& b) { return std::to_string(b.tech_label_count); });
  row("total halluc.", [](const BackendSummary& b) { return std::to_string(b.total_hallucinations); });
  return out.str();
}

std::string format_paes_csv(const EvalReport& r) {
  std::string out = "scenario,backend,trials,mean_paes\n";
  for (const auto& c : r.cells) {
    out += csv_field(c.scenario) + "," + csv_field(c.backend) + "," + std::to_string(c.trials) + "," +
           fmt("%.4f", c.mean_paes) + "\n";
  }
  return out;
}

std::string format_metrics_csv(const EvalReport& r) {
  std::string out =
      "backend,responses,bandwidth_estimates,leaked,plr,false_negative,tech_label,total_hallucinations\n";
  for (const auto& b : r.per_backend) {
    out += csv_field(b.backend) + "," + std::to_string(b.responses) + "," + std::to_string(b.leaked + b.grounded) +
           "," + std::to_string(b.leaked) + "," + (b.plr ? fmt("%.4f", *b.plr) : std::string("n/a")) + "," +
           std::to_string(b.false_negative_count) + "," + std::to_string(b.tech_label_count) + "," +
           std::to_string(b.total_hallucinations) + "\n";
  }
  return out;
}

std::string format_transcripts(const std::vector<TrialRecord>& records) {
  std::string out;
  for (const auto& r : records) out += nlohmann::json(r).dump() + "\n";
  return out;
}

std::string format_timings(const std::vector<TimingRecord>& timings) {
  std::string out;
  for (const auto& t : timings) {
    out += nlohmann::json{{"trial_id", t.trial_id},
                          {"backend", t.backend},
                          {"latency_s", t.latency_s},
                          {"timestamp", iso8601_utc(t.timestamp)}}
               .dump() +
           "\n";
  }
  return out;
}

std::vector<TrialRecord> parse_transcripts(const std::string& jsonl) {
  std::vector<TrialRecord> out;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<TrialRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("transcript line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw FormatError("transcript line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_report_files(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  write_text(dir / kReportFile, format_report_text(report));
  write_text(dir / kPaesCsvFile, format_paes_csv(report));
  write_text(dir / kMetricsCsvFile, format_metrics_csv(report));
}

void write_run(const std::filesystem::path& dir, const SuiteRun& run) {
  write_report_files(dir, run.report);
  write_text(dir / kTranscriptFile, format_transcripts(run.records));
  write_text(dir / kTimingFile, format_timings(run.timings));
}

EvalReport reaggregate(const std::filesystem::path& dir) {
  const auto path = dir / kTranscriptFile;
  if (!std::filesystem::exists(path)) throw ConfigError("no " + std::string(kTranscriptFile) + " in " + dir.string());
  const auto records = parse_transcripts(read_text_file(path.string()));
  if (records.empty()) throw FormatError(path.string() + " holds no trials");
  return aggregate(records);
}

}  // namespace rfa
