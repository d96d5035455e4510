#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfa/source.hpp"

namespace rfa {

// The five scored attributes, in a1..a5 order.
enum class Attribute : std::size_t { temporal, occupancy, snr, isolation, tech_family };
inline constexpr std::size_t kAttributeCount = 5;
inline constexpr std::array<Attribute, kAttributeCount> kAttributes = {
    Attribute::temporal, Attribute::occupancy, Attribute::snr, Attribute::isolation,
    Attribute::tech_family};

std::string_view attribute_name(Attribute a) noexcept;
// Closed vocabulary for one attribute, e.g. {"narrow", "medium", "wide"}.
std::span<const std::string_view> attribute_classes(Attribute a) noexcept;
bool is_attribute_class(Attribute a, std::string_view value) noexcept;

// Sets rather than single values so straddling labels ("low-to-medium") can
// be expressed. Every set must be non-empty.
struct GroundTruth {
  std::array<std::vector<std::string>, kAttributeCount> sets;
  bool full_span_occupied = false;
  bool signal_present = true;

  const std::vector<std::string>& operator[](Attribute a) const {
    return sets[static_cast<std::size_t>(a)];
  }
  std::vector<std::string>& operator[](Attribute a) { return sets[static_cast<std::size_t>(a)]; }
  bool contains(Attribute a, std::string_view value) const;
  bool operator==(const GroundTruth&) const = default;
};

void validate(const GroundTruth& gt);

// nullopt in `values` means the response left that attribute unstated.
struct AttributeExtraction {
  std::array<std::optional<std::string>, kAttributeCount> values;
  std::optional<double> bandwidth_mhz;
  bool references_settings = false;
  bool image_grounded_evidence = false;
  bool claims_no_signal = false;
  std::optional<std::string> raw_tech_label;

  const std::optional<std::string>& operator[](Attribute a) const {
    return values[static_cast<std::size_t>(a)];
  }
  std::optional<std::string>& operator[](Attribute a) { return values[static_cast<std::size_t>(a)]; }
  bool operator==(const AttributeExtraction&) const = default;
};

// Rejects out-of-vocabulary classes and a no-signal claim that still states
// attributes.
void validate(const AttributeExtraction& x);

// <5 narrow, [5, 15] medium, >15 wide. Throws ConfigError unless bw > 0.
std::string_view classify_occupancy(double bandwidth_mhz);

enum class LeakageVerdict { leaked, grounded, no_bandwidth_estimate };
std::string_view to_string(LeakageVerdict v) noexcept;
LeakageVerdict leakage_verdict_from_string(std::string_view s);

enum class HallucinationKind { false_negative, tech_label };
std::string_view to_string(HallucinationKind k) noexcept;
HallucinationKind hallucination_kind_from_string(std::string_view s);

struct Hallucination {
  HallucinationKind kind = HallucinationKind::false_negative;
  std::string note;
  bool operator==(const Hallucination&) const = default;
};

struct TrialScore {
  std::array<int, kAttributeCount> bits{};
  int paes = 0;  // always the bit sum
  LeakageVerdict leakage = LeakageVerdict::no_bandwidth_estimate;
  std::vector<Hallucination> hallucinations;
  bool operator==(const TrialScore&) const = default;
};

// Fills bits and paes only.
TrialScore score_paes(const AttributeExtraction& x, const GroundTruth& gt);

inline constexpr double kLeakageToleranceMhz = 1.0;

LeakageVerdict detect_leakage(const AttributeExtraction& x, const CaptureSettings& settings,
                              const GroundTruth& gt);

// Frequency range -> technology labels that can plausibly appear there.
struct BandPlanEntry {
  std::string name;
  double lo_mhz = 0.0;
  double hi_mhz = 0.0;
  std::vector<std::string> labels;
  bool operator==(const BandPlanEntry&) const = default;
};

class BandPlan {
 public:
  BandPlan() = default;
  explicit BandPlan(std::vector<BandPlanEntry> entries);

  static const BandPlan& defaults();
  static BandPlan load(const std::string& path);

  const std::vector<BandPlanEntry>& entries() const noexcept { return entries_; }

  // True when any allocation overlapping the captured span lists the label
  // (case-insensitive).
  bool label_plausible(std::string_view label, const CaptureSettings& settings) const;

  bool operator==(const BandPlan&) const = default;

 private:
  std::vector<BandPlanEntry> entries_;
};

void to_json(nlohmann::json& j, const BandPlanEntry& e);
void from_json(const nlohmann::json& j, BandPlanEntry& e);
void to_json(nlohmann::json& j, const BandPlan& p);
void from_json(const nlohmann::json& j, BandPlan& p);

// At most one record of each kind.
std::vector<Hallucination> count_hallucinations(const AttributeExtraction& x, const GroundTruth& gt,
                                                const CaptureSettings& settings,
                                                const BandPlan& plan = BandPlan::defaults());

// score_paes + detect_leakage + count_hallucinations.
TrialScore score_trial(const AttributeExtraction& x, const GroundTruth& gt,
                       const CaptureSettings& settings, const BandPlan& plan = BandPlan::defaults());

// One scored (scenario, backend, trial) exchange. `failed` trials carry an
// empty response and an all-unstated extraction.
struct TrialRecord {
  std::string scenario;
  std::string backend;
  int trial = 1;
  std::string trial_id;
  CaptureSettings settings;
  std::string image_sha256;
  std::string system_text;
  std::string user_text;
  std::string response;
  bool failed = false;
  std::string error;
  bool adjudicated = false;
  AttributeExtraction extraction;
  TrialScore score;
  bool operator==(const TrialRecord&) const = default;
};

struct CellSummary {
  std::string scenario;
  std::string backend;
  int trials = 0;
  double mean_paes = 0.0;
};

struct BackendSummary {
  std::string backend;
  int responses = 0;
  int leaked = 0;
  int grounded = 0;
  std::optional<double> plr;  // leaked / (leaked + grounded)
  int false_negative_count = 0;
  int tech_label_count = 0;
  int total_hallucinations = 0;
};

struct EvalReport {
  std::vector<std::string> scenarios;  // row order
  std::vector<std::string> backends;   // column order
  std::vector<CellSummary> cells;      // scenario-major
  std::vector<BackendSummary> per_backend;

  const CellSummary& cell(std::string_view scenario, std::string_view backend) const;
  const BackendSummary& backend(std::string_view name) const;
};

// Orders follow first appearance in `records` unless given. Throws
// PreconditionError when some (scenario, backend) pair has no trial.
EvalReport aggregate(std::span<const TrialRecord> records,
                     std::vector<std::string> scenario_order = {},
                     std::vector<std::string> backend_order = {});

void to_json(nlohmann::json& j, const GroundTruth& gt);
void from_json(const nlohmann::json& j, GroundTruth& gt);
void to_json(nlohmann::json& j, const AttributeExtraction& x);
void from_json(const nlohmann::json& j, AttributeExtraction& x);
void to_json(nlohmann::json& j, const TrialScore& s);
void from_json(const nlohmann::json& j, TrialScore& s);
void to_json(nlohmann::json& j, const TrialRecord& r);
void from_json(const nlohmann::json& j, TrialRecord& r);

}  // namespace rfa
