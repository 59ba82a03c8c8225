#include "occsp/analysis.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace occsp::analysis {

const Aggregate& EvalReport::find(const std::string& policy, const std::string& metric) const {
  for (const auto& a : aggregates)
    if (a.policy == policy && a.metric == metric) return a;
  throw Error("no aggregate for policy '" + policy + "' metric '" + metric + "'");
}

double t975(double dof) {
  if (dof < 1) throw Error("t975: degrees of freedom must be >= 1");
  return boost::math::quantile(boost::math::students_t(dof), 0.975);
}

EvalReport evaluate(const std::vector<NamedPolicy>& policies, const std::vector<Instance>& instances) {
  EvalReport rep;
  rep.instance_count = instances.size();
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const Instance& inst = instances[k];
    for (const auto& p : policies) {
      Record r;
      r.policy = p.name;
      r.instance = k;
      r.seed = inst.seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const Schedule s = p.run(inst);
        r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto f = check_feasible(s, inst);
        if (!f.ok()) throw Error("infeasible schedule: " + f.violations.front().message);
        const auto prof = load_of(s, inst);
        r.max_min = max_min(prof);
        r.rmse = rmse(prof);
        r.peak = prof.peak();
      } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
      }
      rep.records.push_back(std::move(r));
    }
  }
  rep.aggregates = aggregate(rep.records);
  return rep;
}

std::vector<Aggregate> aggregate(const std::vector<Record>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Record*>> by_policy;
  for (const auto& r : records) {
    if (!by_policy.count(r.policy)) order.push_back(r.policy);
    by_policy[r.policy].push_back(&r);
  }
  std::vector<Aggregate> out;
  for (const auto& name : order) {
    for (const auto& metric : kMetrics) {
      Aggregate a;
      a.policy = name;
      a.metric = metric;
      std::vector<double> xs;
      for (const Record* r : by_policy[name]) {
        if (r->failed) {
          ++a.failed;
          continue;
        }
        if (metric == "max_min") xs.push_back(r->max_min);
        else if (metric == "rmse") xs.push_back(r->rmse);
        else if (metric == "peak") xs.push_back(r->peak);
        else xs.push_back(r->runtime_s);
      }
      a.count = xs.size();
      if (!xs.empty()) {
        double s = 0.0;
        for (double x : xs) s += x;
        a.mean = s / static_cast<double>(xs.size());
      }
      if (xs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - a.mean) * (x - a.mean);
        const double K = static_cast<double>(xs.size());
        a.stddev = std::sqrt(ss / (K - 1));
        a.ci_half_width = t975(K - 1) * a.stddev / std::sqrt(K);
      } else {
        a.degenerate = true;
      }
      out.push_back(a);
    }
  }
  return out;
}

std::string records_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "policy,instance,seed,max_min,rmse,peak,runtime_s,failed,error\n";
  os << std::setprecision(17);
  for (const auto& r : report.records) {
    std::string err = r.error;
    for (auto& c : err)
      if (c == '"') c = '\'';
    os << r.policy << ',' << r.instance << ',' << r.seed << ',' << r.max_min << ',' << r.rmse << ',' << r.peak << ','
       << r.runtime_s << ',' << (r.failed ? 1 : 0) << ",\"" << err << "\"\n";
  }
  return os.str();
}

nlohmann::json to_json(const Aggregate& a) {
  return {{"policy", a.policy},          {"metric", a.metric}, {"count", a.count},
          {"failed", a.failed},          {"mean", a.mean},     {"std", a.stddev},
          {"ci95_half_width", a.ci_half_width}, {"degenerate", a.degenerate}};
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json aggs = nlohmann::json::array();
  for (const auto& a : report.aggregates) aggs.push_back(to_json(a));
  return {{"instance_count", report.instance_count}, {"aggregates", aggs}};
}

// ---------------------------------------------------------------- economics

void EconParams::validate() const {
  if (!(u_kw > 0) || !(rate > 0) || !(feeders > 0)) throw Error("economics: u_kw, rate and feeders must be positive");
}

Economics avoided_value_from_peaks(double baseline_peak, double policy_peak, const EconParams& params) {
  params.validate();
  Economics e;
  e.baseline_peak = baseline_peak;
  e.policy_peak = policy_peak;
  e.peak_reduction = baseline_peak - policy_peak;
  e.peak_kw = e.peak_reduction * params.u_kw;
  e.per_feeder = e.peak_kw * params.rate;
  e.regional = e.per_feeder * params.feeders;
  return e;
}

Economics avoided_value(const EvalReport& report, const std::string& policy, const EconParams& params) {
  const auto& base = report.find(params.baseline_policy, "peak");
  const auto& pol = report.find(policy, "peak");
  if (base.count == 0 || pol.count == 0) throw Error("economics: no successful runs for baseline or policy");
  Economics e = avoided_value_from_peaks(base.mean, pol.mean, params);
  e.policy = policy;
  return e;
}

nlohmann::json to_json(const Economics& e) {
  return {{"policy", e.policy},           {"baseline_peak", e.baseline_peak}, {"policy_peak", e.policy_peak},
          {"peak_reduction", e.peak_reduction}, {"peak_kw", e.peak_kw},       {"per_feeder_cad", e.per_feeder},
          {"regional_cad", e.regional},  {"regional_millions", round_to(e.regional / 1e6, 2)}};
}

double round_to(double x, int digits) {
  const double f = std::pow(10.0, digits);
  return std::round(x * f) / f;
}

// -------------------------------------------------------------- calibration

GmaCalibration gma_calibration() {
  GmaCalibration g;
  g.ev_counts = {{"Montreal", 44000}, {"Laval", 15000}, {"Monteregie", 62700}, {"Lanaudiere", 23900},
                 {"Laurentides", 26000}};
  for (const auto& [_, n] : g.ev_counts) g.ev_total += n;
  g.ev_rounded = static_cast<int>(std::lround(g.ev_total / 1000.0)) * 1000;
  g.substations_island = 16;
  g.feeders_per_island = 33;
  g.substations_other = 11;
  g.feeders_per_other = 25;
  g.feeders = g.substations_island * g.feeders_per_island + g.substations_other * g.feeders_per_other;
  g.substations_pending = 2;
  g.in_service_factor = 1.0 - static_cast<double>(g.substations_pending) / g.substations_island;
  g.in_service_feeders = g.feeders * g.in_service_factor;
  g.in_service_rounded = static_cast<int>(std::lround(g.in_service_feeders));
  g.feeders_used = static_cast<int>(std::lround(g.in_service_rounded / 100.0)) * 100;
  g.home_work_share = 0.85;
  g.sessions_per_feeder = g.ev_rounded * g.home_work_share / g.feeders_used;
  g.sessions_used = static_cast<int>(std::floor(g.sessions_per_feeder / 100.0)) * 100;
  return g;
}

nlohmann::json to_json(const GmaCalibration& g) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [k, v] : g.ev_counts) counts[k] = v;
  return {{"ev_counts", counts},
          {"ev_total", g.ev_total},
          {"ev_rounded", g.ev_rounded},
          {"feeders", g.feeders},
          {"in_service_factor", g.in_service_factor},
          {"in_service_feeders", g.in_service_feeders},
          {"in_service_rounded", g.in_service_rounded},
          {"feeders_used", g.feeders_used},
          {"home_work_share", g.home_work_share},
          {"sessions_per_feeder", g.sessions_per_feeder},
          {"sessions_per_feeder_2dp", round_to(g.sessions_per_feeder, 2)},
          {"sessions_used", g.sessions_used}};
}

// ------------------------------------------------------------------- theory

long mlp_param_count(long d, long m, long layers, long actions) {
  if (d < 1 || m < 1 || layers < 1 || actions < 1) throw Error("mlp_param_count: arguments must be positive");
  return d * m + (layers - 1) * m * m + m * actions;
}

double theorem_threshold(double n, double S, double M, double H) {
  if (n < 1 || S < 1 || M < 1 || H < 1) throw Error("theorem_threshold: n, S, M, H must be >= 1");
  const double a = std::log(n) + std::log(S);
  if (a <= 0) throw Error("theorem_threshold: ln n + ln S must be positive");
  return H / (1.0 + std::log(M) / a);
}

double exact_threshold(double n, double S, double M, double H) {
  if (n < 1 || S < 1 || M < 1 || H < 1) throw Error("exact_threshold: n, S, M, H must be >= 1");
  const double den = std::log(n) + std::log(H) + std::log(M);
  if (den <= 0) throw Error("exact_threshold: ln n + ln H + ln M must be positive");
  return H * (std::log(n) + std::log(S)) / den;
}

double g1(double d_S, double n, double S, double delta) {
  return (d_S * (std::log(n) + std::log(S)) + std::log(1.0 / delta)) / n;
}

double g2(double d_M, double n, double H, double M, double delta) {
  return (d_M * (std::log(n) + std::log(H) + std::log(M)) + std::log(1.0 / delta)) / (n * H);
}

NatarajanCheck natarajan_check(double d_M, double d_S, double n, double S, double M, double H, double delta) {
  if (!(delta > 0 && delta < 1)) throw Error("natarajan_check: delta must be in (0, 1)");
  if (!(d_S > 0) || d_M < 0) throw Error("natarajan_check: dimensions must be positive");
  NatarajanCheck c;
  c.ratio = d_M / d_S;
  c.threshold = theorem_threshold(n, S, M, H);
  c.exact_threshold = exact_threshold(n, S, M, H);
  c.condition = c.ratio < c.threshold;
  c.g1 = g1(d_S, n, S, delta);
  c.g2 = g2(d_M, n, H, M, delta);
  c.g2_below_g1 = c.g2 < c.g1;
  return c;
}

double head_ratio(double M, double S) {
  if (!(S > 0)) throw Error("head_ratio: S must be positive");
  return M / S;
}

nlohmann::json to_json(const NatarajanCheck& c) {
  return {{"ratio", c.ratio}, {"threshold", c.threshold}, {"exact_threshold", c.exact_threshold},
          {"condition", c.condition}, {"g1", c.g1}, {"g2", c.g2}, {"g2_below_g1", c.g2_below_g1}};
}

}  // namespace occsp::analysis
