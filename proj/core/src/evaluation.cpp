#include "rfa/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "rfa/error.hpp"
#include "rfa/scene.hpp"
#include "rfa/util.hpp"

namespace rfa {
namespace {

constexpr std::array<std::string_view, 3> kTemporal = {"continuous", "pulsed", "burst"};
constexpr std::array<std::string_view, 3> kOccupancy = {"narrow", "medium", "wide"};
constexpr std::array<std::string_view, 3> kSnr = {"low", "medium", "high"};
constexpr std::array<std::string_view, 2> kIsolation = {"isolated", "overlapping"};
constexpr std::array<std::string_view, 4> kFamily = {"cellular", "ism", "broadcast", "radar"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename Enum, std::size_t N>
Enum enum_from(std::string_view s, const std::array<Enum, N>& all, const char* what) {
  for (auto e : all) {
    if (to_string(e) == s) return e;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view attribute_name(Attribute a) noexcept {
  switch (a) {
    case Attribute::temporal: return "temporal";
    case Attribute::occupancy: return "occupancy";
    case Attribute::snr: return "snr";
    case Attribute::isolation: return "isolation";
    case Attribute::tech_family: return "tech_family";
  }
  return "unknown";
}

std::span<const std::string_view> attribute_classes(Attribute a) noexcept {
  switch (a) {
    case Attribute::temporal: return kTemporal;
    case Attribute::occupancy: return kOccupancy;
    case Attribute::snr: return kSnr;
    case Attribute::isolation: return kIsolation;
    case Attribute::tech_family: return kFamily;
  }
  return {};
}

bool is_attribute_class(Attribute a, std::string_view value) noexcept {
  const auto classes = attribute_classes(a);
  return std::find(classes.begin(), classes.end(), value) != classes.end();
}

bool GroundTruth::contains(Attribute a, std::string_view value) const {
  const auto& s = (*this)[a];
  return std::find(s.begin(), s.end(), value) != s.end();
}

void validate(const GroundTruth& gt) {
  for (auto a : kAttributes) {
    if (gt[a].empty()) throw ConfigError("ground truth: " + std::string(attribute_name(a)) + " set is empty");
    for (const auto& v : gt[a]) {
      if (!is_attribute_class(a, v)) {
        throw ConfigError("ground truth: '" + v + "' is not a " + std::string(attribute_name(a)) + " class");
      }
    }
  }
}

void validate(const AttributeExtraction& x) {
  for (auto a : kAttributes) {
    if (x[a] && !is_attribute_class(a, *x[a])) {
      throw ConfigError("extraction: '" + *x[a] + "' is not a " + std::string(attribute_name(a)) + " class");
    }
    if (x.claims_no_signal && x[a]) {
      throw ConfigError("extraction: a no-signal claim cannot state " + std::string(attribute_name(a)));
    }
  }
  if (x.bandwidth_mhz && !(*x.bandwidth_mhz > 0.0)) throw ConfigError("extraction: bandwidth_mhz must be > 0");
}

std::string_view classify_occupancy(double bandwidth_mhz) {
  if (!(bandwidth_mhz > 0.0) || !std::isfinite(bandwidth_mhz)) {
    throw ConfigError("classify_occupancy: bandwidth must be a positive number");
  }
  if (bandwidth_mhz < 5.0) return "narrow";
  if (bandwidth_mhz <= 15.0) return "medium";
  return "wide";
}

std::string_view to_string(LeakageVerdict v) noexcept {
  switch (v) {
    case LeakageVerdict::leaked: return "leaked";
    case LeakageVerdict::grounded: return "grounded";
    case LeakageVerdict::no_bandwidth_estimate: return "no_bandwidth_estimate";
  }
  return "unknown";
}

LeakageVerdict leakage_verdict_from_string(std::string_view s) {
  constexpr std::array all = {LeakageVerdict::leaked, LeakageVerdict::grounded,
                              LeakageVerdict::no_bandwidth_estimate};
  return enum_from(s, all, "leakage verdict");
}

std::string_view to_string(HallucinationKind k) noexcept {
  return k == HallucinationKind::false_negative ? "false_negative" : "tech_label";
}

HallucinationKind hallucination_kind_from_string(std::string_view s) {
  constexpr std::array all = {HallucinationKind::false_negative, HallucinationKind::tech_label};
  return enum_from(s, all, "hallucination kind");
}

TrialScore score_paes(const AttributeExtraction& x, const GroundTruth& gt) {
  TrialScore s;
  if (x.claims_no_signal && gt.signal_present) return s;
  for (auto a : kAttributes) {
    const auto i = static_cast<std::size_t>(a);
    s.bits[i] = x[a] && gt.contains(a, *x[a]) ? 1 : 0;
    s.paes += s.bits[i];
  }
  return s;
}

LeakageVerdict detect_leakage(const AttributeExtraction& x, const CaptureSettings& settings,
                              const GroundTruth& /*gt*/) {
  if (!x.bandwidth_mhz) return LeakageVerdict::no_bandwidth_estimate;
  const double sr_mhz = settings.sample_rate_hz / 1e6;
  const bool near_sr = std::abs(*x.bandwidth_mhz - sr_mhz) <= kLeakageToleranceMhz;
  return near_sr && (x.references_settings || !x.image_grounded_evidence) ? LeakageVerdict::leaked
                                                                          : LeakageVerdict::grounded;
}

// --- band plan -------------------------------------------------------------

BandPlan::BandPlan(std::vector<BandPlanEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (!(e.hi_mhz > e.lo_mhz)) throw ConfigError("band plan entry '" + e.name + "': hi_mhz must exceed lo_mhz");
  }
}

const BandPlan& BandPlan::defaults() {
  static const BandPlan plan({
      {"FM broadcast", 87.5, 108.0, {"FM", "RDS"}},
      {"VHF DAB", 174.0, 240.0, {"DAB", "DVB-T"}},
      {"ISM 433", 433.05, 434.79, {"OOK", "FSK", "LoRa"}},
      {"UHF TV", 470.0, 790.0, {"DVB-T"}},
      {"LTE band 20 downlink", 791.0, 821.0, {"LTE", "5G NR"}},
      {"LTE band 20 uplink", 832.0, 862.0, {"LTE", "5G NR"}},
      {"SRD 868", 863.0, 870.0, {"LoRa", "OOK", "FSK"}},
      {"GSM/LTE 900", 880.0, 960.0, {"GSM", "LTE", "UMTS", "5G NR"}},
      {"GSM/LTE 1800", 1710.0, 1880.0, {"GSM", "LTE", "5G NR"}},
      {"UMTS/LTE 2100", 1920.0, 2170.0, {"UMTS", "LTE", "5G NR"}},
      {"ISM 2.4 GHz", 2400.0, 2483.5, {"Wi-Fi", "Bluetooth", "BLE", "Zigbee", "OOK", "FSK"}},
      {"LTE 2600", 2500.0, 2690.0, {"LTE", "5G NR"}},
      {"S-band radar", 2700.0, 2900.0, {"Radar"}},
      {"NR n78", 3300.0, 3800.0, {"5G NR"}},
      {"5 GHz WLAN", 5150.0, 5850.0, {"Wi-Fi", "Radar"}},
      {"Ku-band satellite", 10700.0, 12750.0, {"DVB-S2", "DVB-S"}},
  });
  return plan;
}

BandPlan BandPlan::load(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path)).get<BandPlan>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("band plan '" + path + "': " + e.what());
  }
}

bool BandPlan::label_plausible(std::string_view label, const CaptureSettings& settings) const {
  const double lo = (settings.center_freq_hz - settings.sample_rate_hz / 2.0) / 1e6;
  const double hi = (settings.center_freq_hz + settings.sample_rate_hz / 2.0) / 1e6;
  return std::any_of(entries_.begin(), entries_.end(), [&](const BandPlanEntry& e) {
    const bool overlaps = e.lo_mhz < hi && e.hi_mhz > lo;
    return overlaps && std::any_of(e.labels.begin(), e.labels.end(),
                                   [&](const std::string& l) { return iequals(l, label); });
  });
}

void to_json(nlohmann::json& j, const BandPlanEntry& e) {
  j = {{"name", e.name}, {"lo_mhz", e.lo_mhz}, {"hi_mhz", e.hi_mhz}, {"labels", e.labels}};
}

void from_json(const nlohmann::json& j, BandPlanEntry& e) {
  j.at("name").get_to(e.name);
  j.at("lo_mhz").get_to(e.lo_mhz);
  j.at("hi_mhz").get_to(e.hi_mhz);
  j.at("labels").get_to(e.labels);
}

void to_json(nlohmann::json& j, const BandPlan& p) { j = {{"allocations", p.entries()}}; }

void from_json(const nlohmann::json& j, BandPlan& p) {
  p = BandPlan(j.at("allocations").get<std::vector<BandPlanEntry>>());
}

std::vector<Hallucination> count_hallucinations(const AttributeExtraction& x, const GroundTruth& gt,
                                                const CaptureSettings& settings, const BandPlan& plan) {
  std::vector<Hallucination> out;
  if (x.claims_no_signal && gt.signal_present) {
    out.push_back({HallucinationKind::false_negative, "reported no signal while one is present"});
  }
  if (x.raw_tech_label && !plan.label_plausible(*x.raw_tech_label, settings)) {
    out.push_back({HallucinationKind::tech_label, "'" + *x.raw_tech_label + "' is implausible at " +
                                                      format_mhz(settings.center_freq_hz) + " MHz"});
  }
  return out;
}

TrialScore score_trial(const AttributeExtraction& x, const GroundTruth& gt, const CaptureSettings& settings,
                       const BandPlan& plan) {
  auto s = score_paes(x, gt);
  s.leakage = detect_leakage(x, settings, gt);
  s.hallucinations = count_hallucinations(x, gt, settings, plan);
  return s;
}

// --- aggregation -----------------------------------------------------------

const CellSummary& EvalReport::cell(std::string_view scenario, std::string_view backend) const {
  for (const auto& c : cells) {
    if (c.scenario == scenario && c.backend == backend) return c;
  }
  throw PreconditionError("report has no cell (" + std::string(scenario) + ", " + std::string(backend) + ")");
}

const BackendSummary& EvalReport::backend(std::string_view name) const {
  for (const auto& b : per_backend) {
    if (b.backend == name) return b;
  }
  throw PreconditionError("report has no backend '" + std::string(name) + "'");
}

EvalReport aggregate(std::span<const TrialRecord> records, std::vector<std::string> scenario_order,
                     std::vector<std::string> backend_order) {
  auto note = [](std::vector<std::string>& order, const std::string& v) {
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
  };
  for (const auto& r : records) {
    note(scenario_order, r.scenario);
    note(backend_order, r.backend);
  }

  EvalReport report;
  report.scenarios = scenario_order;
  report.backends = backend_order;

  std::map<std::pair<std::string, std::string>, std::pair<int, long>> sums;  // trials, paes sum
  std::map<std::string, BackendSummary> per;
  for (const auto& r : records) {
    auto& cell = sums[{r.scenario, r.backend}];
    cell.first += 1;
    cell.second += r.score.paes;

    auto& b = per[r.backend];
    b.responses += 1;
    b.leaked += r.score.leakage == LeakageVerdict::leaked;
    b.grounded += r.score.leakage == LeakageVerdict::grounded;
    for (const auto& h : r.score.hallucinations) {
      (h.kind == HallucinationKind::false_negative ? b.false_negative_count : b.tech_label_count) += 1;
    }
  }

  for (const auto& s : scenario_order) {
    for (const auto& b : backend_order) {
      auto it = sums.find({s, b});
      if (it == sums.end()) throw PreconditionError("no trials for (" + s + ", " + b + ")");
      report.cells.push_back({s, b, it->second.first,
                              static_cast<double>(it->second.second) / it->second.first});
    }
  }
  for (const auto& name : backend_order) {
    auto b = per[name];
    b.backend = name;
    const int denom = b.leaked + b.grounded;
    if (denom > 0) b.plr = static_cast<double>(b.leaked) / denom;
    b.total_hallucinations = b.false_negative_count + b.tech_label_count;
    report.per_backend.push_back(std::move(b));
  }
  return report;
}

// --- JSON --------------------------------------------------------------------

void to_json(nlohmann::json& j, const GroundTruth& gt) {
  j = nlohmann::json::object();
  for (auto a : kAttributes) j[std::string(attribute_name(a))] = gt[a];
  j["full_span_occupied"] = gt.full_span_occupied;
  j["signal_present"] = gt.signal_present;
}

void from_json(const nlohmann::json& j, GroundTruth& gt) {
  gt = GroundTruth{};
  for (auto a : kAttributes) j.at(std::string(attribute_name(a))).get_to(gt[a]);
  gt.full_span_occupied = j.value("full_span_occupied", false);
  gt.signal_present = j.value("signal_present", true);
  validate(gt);
}

void to_json(nlohmann::json& j, const AttributeExtraction& x) {
  j = nlohmann::json::object();
  for (auto a : kAttributes) {
    j[std::string(attribute_name(a))] = x[a] ? nlohmann::json(*x[a]) : nlohmann::json("unstated");
  }
  j["bandwidth_mhz"] = x.bandwidth_mhz ? nlohmann::json(*x.bandwidth_mhz) : nlohmann::json(nullptr);
  j["references_settings"] = x.references_settings;
  j["image_grounded_evidence"] = x.image_grounded_evidence;
  j["claims_no_signal"] = x.claims_no_signal;
  j["raw_tech_label"] = x.raw_tech_label ? nlohmann::json(*x.raw_tech_label) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, AttributeExtraction& x) {
  x = AttributeExtraction{};
  for (auto a : kAttributes) {
    const auto key = std::string(attribute_name(a));
    if (j.contains(key) && !j[key].is_null() && j[key].get<std::string>() != "unstated") {
      x[a] = j[key].get<std::string>();
    }
  }
  if (j.contains("bandwidth_mhz") && !j["bandwidth_mhz"].is_null()) x.bandwidth_mhz = j["bandwidth_mhz"].get<double>();
  x.references_settings = j.value("references_settings", false);
  x.image_grounded_evidence = j.value("image_grounded_evidence", false);
  x.claims_no_signal = j.value("claims_no_signal", false);
  if (j.contains("raw_tech_label") && !j["raw_tech_label"].is_null()) {
    x.raw_tech_label = j["raw_tech_label"].get<std::string>();
  }
  validate(x);
}

void to_json(nlohmann::json& j, const TrialScore& s) {
  auto halluc = nlohmann::json::array();
  for (const auto& h : s.hallucinations) halluc.push_back({{"kind", to_string(h.kind)}, {"note", h.note}});
  j = {{"bits", s.bits}, {"paes", s.paes}, {"leakage", to_string(s.leakage)}, {"hallucinations", halluc}};
}

void from_json(const nlohmann::json& j, TrialScore& s) {
  s = TrialScore{};
  j.at("bits").get_to(s.bits);
  j.at("paes").get_to(s.paes);
  s.leakage = leakage_verdict_from_string(j.at("leakage").get<std::string>());
  for (const auto& h : j.at("hallucinations")) {
    s.hallucinations.push_back(
        {hallucination_kind_from_string(h.at("kind").get<std::string>()), h.value("note", "")});
  }
  int sum = 0;
  for (int b : s.bits) {
    if (b != 0 && b != 1) throw FormatError("trial score bits must be 0 or 1");
    sum += b;
  }
  if (sum != s.paes) throw FormatError("trial score paes does not equal its bit sum");
}

void to_json(nlohmann::json& j, const TrialRecord& r) {
  j = {{"scenario", r.scenario},
       {"backend", r.backend},
       {"trial", r.trial},
       {"trial_id", r.trial_id},
       {"settings", r.settings},
       {"image_sha256", r.image_sha256},
       {"prompt", {{"system", r.system_text}, {"user", r.user_text}}},
       {"response", r.response},
       {"failed", r.failed},
       {"error", r.error},
       {"adjudicated", r.adjudicated},
       {"extraction", r.extraction},
       {"score", r.score}};
}

void from_json(const nlohmann::json& j, TrialRecord& r) {
  r = TrialRecord{};
  j.at("scenario").get_to(r.scenario);
  j.at("backend").get_to(r.backend);
  j.at("trial").get_to(r.trial);
  r.trial_id = j.value("trial_id", "");
  j.at("settings").get_to(r.settings);
  r.image_sha256 = j.value("image_sha256", "");
  if (j.contains("prompt")) {
    r.system_text = j["prompt"].value("system", "");
    r.user_text = j["prompt"].value("user", "");
  }
  r.response = j.value("response", "");
  r.failed = j.value("failed", false);
  r.error = j.value("error", "");
  r.adjudicated = j.value("adjudicated", false);
  j.at("extraction").get_to(r.extraction);
  j.at("score").get_to(r.score);
}

}  // namespace rfa
