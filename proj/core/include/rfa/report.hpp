#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rfa/evaluation.hpp"
#include "rfa/suite.hpp"

namespace rfa {

// Aligned text: mean PAES per scenario and backend, then PLR and
// hallucination counts per backend.
std::string format_report_text(const EvalReport& report);

// scenario,backend,trials,mean_paes
std::string format_paes_csv(const EvalReport& report);

// backend,responses,bandwidth_estimates,leaked,plr,false_negative,tech_label,total_hallucinations
std::string format_metrics_csv(const EvalReport& report);

// One JSON object per line. Timing is kept out so archives of identical runs
// compare equal byte for byte.
std::string format_transcripts(const std::vector<TrialRecord>& records);
std::string format_timings(const std::vector<TimingRecord>& timings);

std::vector<TrialRecord> parse_transcripts(const std::string& jsonl);

inline constexpr const char* kTranscriptFile = "transcripts.jsonl";
inline constexpr const char* kTimingFile = "timings.jsonl";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kPaesCsvFile = "paes.csv";
inline constexpr const char* kMetricsCsvFile = "metrics.csv";

// Writes report.txt, paes.csv, metrics.csv, transcripts.jsonl and
// timings.jsonl into `dir` (created if missing).
void write_run(const std::filesystem::path& dir, const SuiteRun& run);

// Re-aggregates an archive directory without querying anything.
EvalReport reaggregate(const std::filesystem::path& dir);

// Writes the three report files for an existing report.
void write_report_files(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace rfa
