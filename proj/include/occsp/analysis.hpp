#pragma once

// Experiment harness: per-instance policy evaluation with t-based
// confidence intervals, the avoided-capacity economics calculator, the
// regional calibration constants, and closed-form evaluators for the
// sample-complexity comparisons between policy variants.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occsp/core.hpp"

namespace occsp::analysis {

struct NamedPolicy {
  std::string name;
  std::function<Schedule(const Instance&)> run;
};

struct Record {
  std::string policy;
  std::size_t instance = 0;  // index into the evaluated instance list
  std::uint64_t seed = 0;
  int max_min = 0;
  double rmse = 0.0;
  int peak = 0;
  double runtime_s = 0.0;
  bool failed = false;
  std::string error;
};

struct Aggregate {
  std::string policy;
  std::string metric;  // max_min | rmse | peak | runtime_s
  std::size_t count = 0;
  std::size_t failed = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (K - 1)
  double ci_half_width = 0.0;
  bool degenerate = false;  // K <= 1: half-width reported as 0
};

struct EvalReport {
  std::vector<Record> records;
  std::vector<Aggregate> aggregates;
  std::size_t instance_count = 0;

  const Aggregate& find(const std::string& policy, const std::string& metric) const;
};

inline const std::vector<std::string> kMetrics{"max_min", "rmse", "peak", "runtime_s"};

/// Two-sided 95% Student-t quantile t_{0.975, dof}.
double t975(double dof);

/// Runs every policy on every instance (instance-major). A policy that
/// throws or returns an infeasible schedule yields a failed record.
EvalReport evaluate(const std::vector<NamedPolicy>& policies, const std::vector<Instance>& instances);

/// Aggregates are a pure function of the records; policy order follows
/// first appearance.
std::vector<Aggregate> aggregate(const std::vector<Record>& records);

std::string records_csv(const EvalReport& report);
nlohmann::json to_json(const Aggregate& a);
nlohmann::json to_json(const EvalReport& report);  // aggregates and counts

// ---------------------------------------------------------------- economics

struct EconParams {
  double u_kw = 7.0;
  double rate = 164.0;  // CAD per kW-year
  double feeders = 700.0;
  std::string baseline_policy = "plugin";

  void validate() const;
};

struct Economics {
  std::string policy;
  double baseline_peak = 0.0;
  double policy_peak = 0.0;
  double peak_reduction = 0.0;  // EVs
  double peak_kw = 0.0;
  double per_feeder = 0.0;  // CAD per feeder-year
  double regional = 0.0;    // CAD per year
};

Economics avoided_value_from_peaks(double baseline_peak, double policy_peak, const EconParams& params);

/// Uses the mean per-instance peaks of the baseline and the policy.
Economics avoided_value(const EvalReport& report, const std::string& policy, const EconParams& params);

nlohmann::json to_json(const Economics& e);

/// Rounds half away from zero to `digits` decimals.
double round_to(double x, int digits);

// -------------------------------------------------------------- calibration

struct GmaCalibration {
  std::vector<std::pair<std::string, int>> ev_counts;
  int ev_total = 0;
  int ev_rounded = 0;
  int substations_island = 0, feeders_per_island = 0;
  int substations_other = 0, feeders_per_other = 0;
  int feeders = 0;
  int substations_pending = 0;
  double in_service_factor = 0.0;
  double in_service_feeders = 0.0;
  int in_service_rounded = 0;
  int feeders_used = 0;
  double home_work_share = 0.0;
  double sessions_per_feeder = 0.0;
  int sessions_used = 0;
};

GmaCalibration gma_calibration();
nlohmann::json to_json(const GmaCalibration& g);

// ------------------------------------------------------------------- theory

/// Weights only: d*m + (layers - 1)*m^2 + m*actions.
long mlp_param_count(long d, long m, long layers, long actions);

/// Sufficient ratio bound d_M/d_S < H / (1 + ln M / (ln n + ln S)).
double theorem_threshold(double n, double S, double M, double H);

/// Bound obtained by solving G2 < G1 directly (confidence terms dropped):
/// H (ln n + ln S) / (ln n + ln H + ln M). Used for the dependent-data case
/// with n, H replaced by their effective values.
double exact_threshold(double n, double S, double M, double H);

double g1(double d_S, double n, double S, double delta);
double g2(double d_M, double n, double H, double M, double delta);

struct NatarajanCheck {
  double ratio = 0.0;
  double threshold = 0.0;        // sufficient-condition form
  double exact_threshold = 0.0;  // direct form
  bool condition = false;        // ratio < threshold
  double g1 = 0.0, g2 = 0.0;
  bool g2_below_g1 = false;
};

NatarajanCheck natarajan_check(double d_M, double d_S, double n, double S, double M, double H, double delta = 0.05);

/// Crude head-only ratio of movement to schedule complexity: M / S.
double head_ratio(double M, double S);

nlohmann::json to_json(const NatarajanCheck& c);

}  // namespace occsp::analysis
