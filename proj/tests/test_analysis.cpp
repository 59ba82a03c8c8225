#include <doctest.h>

#include <cmath>
#include <random>

#include "occsp/analysis.hpp"
#include "occsp/heuristics.hpp"
#include "occsp/instgen.hpp"
#include "occsp/solver.hpp"
#include "oracles.hpp"

using namespace occsp;
using namespace occsp::analysis;

namespace {
// Student-t quantile by Simpson integration of the density and bisection.
double t_pdf(double x, double v) {
  return std::exp(std::lgamma((v + 1) / 2) - std::lgamma(v / 2)) / std::sqrt(v * M_PI) *
         std::pow(1 + x * x / v, -(v + 1) / 2);
}
double t_cdf_from_zero(double x, double v) {
  const int n = 20000;
  const double h = x / n;
  double s = t_pdf(0, v) + t_pdf(x, v);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4 : 2) * t_pdf(k * h, v);
  return s * h / 3;
}
double t_quantile_975(double v) {
  double lo = 0, hi = 100;
  for (int it = 0; it < 80; ++it) {
    const double mid = (lo + hi) / 2;
    (t_cdf_from_zero(mid, v) < 0.475 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

NamedPolicy wrap(std::string name, Schedule (*f)(const Instance&)) { return {std::move(name), f}; }
}  // namespace

TEST_CASE("t quantiles") {
  CHECK(t975(1) == doctest::Approx(12.7062047).epsilon(1e-7));
  CHECK(t975(9) == doctest::Approx(2.2621572).epsilon(1e-7));
  CHECK(t975(99) == doctest::Approx(1.9842169).epsilon(1e-7));
  for (double v : {2.0, 5.0, 19.0, 49.0}) CHECK(std::abs(t975(v) - t_quantile_975(v)) < 1e-6);
  CHECK_THROWS_AS(t975(0), Error);
}

TEST_CASE("evaluate matches an independent statistics computation") {
  const auto spec = instgen::desk_scenario(1, 24, 10);
  std::vector<Instance> insts;
  for (std::uint64_t s = 0; s < 100; ++s) insts.push_back(instgen::sample_instance(spec, s));
  const auto rep = evaluate({wrap("plugin", heuristics::plug_in), wrap("rowfill", heuristics::row_filling)}, insts);
  CHECK(rep.instance_count == 100);
  CHECK(rep.records.size() == 200);
  for (const std::string pol : {"plugin", "rowfill"}) {
    std::vector<double> mm, rm;
    for (const auto& inst : insts) {
      const auto s = pol == "plugin" ? plug_in_schedule(inst) : heuristics::row_filling(inst);
      const auto c = oracle::naive_load(inst, s.starts);
      mm.push_back(oracle::spread(c));
      double m = 0;
      for (int v : c) m += v;
      m /= c.size();
      double ss = 0;
      for (int v : c) ss += (v - m) * (v - m);
      rm.push_back(std::sqrt(ss / c.size()));
    }
    for (const auto& [metric, xs] : {std::pair{"max_min", mm}, std::pair{"rmse", rm}}) {
      const double m = oracle::mean(xs);
      double ss = 0;
      for (double x : xs) ss += (x - m) * (x - m);
      const double sd = std::sqrt(ss / 99);
      const auto& a = rep.find(pol, metric);
      CHECK(a.count == 100);
      CHECK(std::abs(a.mean - m) < 1e-9);
      CHECK(std::abs(a.stddev - sd) < 1e-9);
      CHECK(std::abs(a.ci_half_width - t_quantile_975(99) * sd / 10) < 1e-6 * (1 + sd));
      CHECK_FALSE(a.degenerate);
    }
  }
  // re-aggregation is idempotent
  const auto again = aggregate(rep.records);
  REQUIRE(again.size() == rep.aggregates.size());
  for (std::size_t k = 0; k < again.size(); ++k) {
    CHECK(again[k].mean == rep.aggregates[k].mean);
    CHECK(again[k].ci_half_width == rep.aggregates[k].ci_half_width);
  }
  CHECK(rep.find("rowfill", "max_min").mean <= rep.find("plugin", "max_min").mean);
}

TEST_CASE("single instance is degenerate") {
  const auto inst = make_instance(Horizon{6}, {{1, 1, 6, 2}});
  const auto rep = evaluate({wrap("plugin", heuristics::plug_in)}, {inst});
  const auto& a = rep.find("plugin", "max_min");
  CHECK(a.degenerate);
  CHECK(a.ci_half_width == 0.0);
  CHECK(a.mean == 1.0);
}

TEST_CASE("oracle mean is the smallest") {
  std::mt19937_64 g(61);
  std::vector<Instance> insts;
  for (int k = 0; k < 10; ++k) insts.push_back(oracle::random_instance(g, 6, 12, 0, 5));
  const auto rep = evaluate({{"oracle", [](const Instance& i) { return solver::solve_oracle(i).schedule; }},
                             wrap("plugin", heuristics::plug_in), wrap("rowfill", heuristics::row_filling),
                             {"reopt", [](const Instance& i) { return solver::reopt_policy(i); }}},
                            insts);
  const double o = rep.find("oracle", "max_min").mean;
  for (const auto* p : {"plugin", "rowfill", "reopt"}) CHECK(o <= rep.find(p, "max_min").mean);
}

TEST_CASE("failing policies are counted and excluded") {
  const auto inst = make_instance(Horizon{6}, {{1, 1, 6, 2}});
  const auto rep = evaluate({{"boom", [](const Instance&) -> Schedule { throw Error("boom"); }},
                             {"bad", [](const Instance&) {
                                Schedule s;
                                s.starts[1] = 6;
                                return s;
                              }}},
                            {inst, inst});
  CHECK(rep.find("boom", "max_min").failed == 2);
  CHECK(rep.find("boom", "max_min").count == 0);
  CHECK(rep.find("bad", "max_min").failed == 2);
  CHECK(rep.records[0].error == "boom");
  const auto csv = records_csv(rep);
  CHECK(csv.rfind("policy,instance,seed,max_min,rmse,peak,runtime_s,failed,error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("economics") {
  const auto e = avoided_value_from_peaks(75, 35, {});
  CHECK(e.peak_kw == 280.0);
  CHECK(e.per_feeder == 45920.0);
  CHECK(e.regional == 32144000.0);

  const auto z = avoided_value_from_peaks(50, 50, {});
  CHECK(z.peak_kw == 0.0);
  CHECK(z.regional == 0.0);

  const auto s3 = avoided_value_from_peaks(116, 42, {});
  CHECK(s3.peak_reduction == 74.0);
  CHECK(s3.peak_kw == 518.0);
  CHECK(s3.regional == 59466400.0);
  CHECK(round_to(s3.regional / 1e6, 2) == 59.47);

  const auto worse = avoided_value_from_peaks(30, 40, {});
  CHECK(worse.peak_kw == -70.0);

  EconParams p;
  p.u_kw = 14;
  CHECK(avoided_value_from_peaks(75, 35, p).regional == 2 * e.regional);
  p = {};
  p.rate = 82;
  CHECK(avoided_value_from_peaks(75, 35, p).regional == e.regional / 2);
  p = {};
  p.feeders = 1400;
  CHECK(avoided_value_from_peaks(75, 35, p).regional == 2 * e.regional);
  p.feeders = 0;
  CHECK_THROWS_AS(avoided_value_from_peaks(75, 35, p), Error);
}

TEST_CASE("economics from an evaluation report uses mean peaks") {
  EvalReport rep;
  for (int k = 0; k < 4; ++k) {
    Record a;
    a.policy = "plugin";
    a.instance = static_cast<std::size_t>(k);
    a.peak = 70 + 2 * k;  // mean 73
    rep.records.push_back(a);
    Record b = a;
    b.policy = "rowfill";
    b.peak = 30 + k;  // mean 31.5
    rep.records.push_back(b);
  }
  rep.aggregates = aggregate(rep.records);
  const auto e = avoided_value(rep, "rowfill", {});
  CHECK(e.peak_reduction == doctest::Approx(41.5));
  CHECK(e.peak_kw == doctest::Approx(290.5));
  CHECK_THROWS_AS(avoided_value(rep, "nope", {}), Error);
}

TEST_CASE("regional calibration chain") {
  const auto g = gma_calibration();
  CHECK(g.ev_total == 171600);
  CHECK(g.ev_rounded == 172000);
  CHECK(g.feeders == 803);
  CHECK(g.in_service_factor == 0.875);
  CHECK(g.in_service_feeders == doctest::Approx(702.625));
  CHECK(g.in_service_rounded == 703);
  CHECK(g.feeders_used == 700);
  CHECK(round_to(g.sessions_per_feeder, 2) == 208.86);
  CHECK(g.sessions_used == 200);
}

TEST_CASE("parameter count formula") {
  CHECK(mlp_param_count(118, 256, 2, 3) == 96512);
  CHECK(mlp_param_count(118, 256, 1, 3) == 118 * 256 + 256 * 3);
  CHECK(mlp_param_count(22 + 97, 256, 2, 3) - mlp_param_count(22 + 96, 256, 2, 3) == 256);
  CHECK_THROWS_AS(mlp_param_count(0, 256, 2, 3), Error);
}

TEST_CASE("theory evaluators") {
  CHECK(round_to(std::log(200.0) + std::log(96.0), 2) == 9.86);
  CHECK(round_to(std::log(3.0), 2) == 1.10);
  const double H = 7.0;
  CHECK(round_to(theorem_threshold(200, 96, 3, H) / H, 2) == 0.90);
  CHECK(theorem_threshold(200, 96, 3, 1) == doctest::Approx(1.0 / (1.0 + std::log(3.0) / std::log(200.0 * 96))));
  CHECK(round_to(head_ratio(3, 96), 2) == 0.03);
  CHECK(round_to(exact_threshold(1, 96, 3, 1), 2) == 4.15);
  CHECK(exact_threshold(1, 96, 3, 1) == doctest::Approx(std::log(96.0) / std::log(3.0)));

  // the direct bound is exactly where G2 = G1 once confidence terms vanish
  const double n = 200, S = 96, M = 3, Hh = 10, dS = 1000;
  const double dM = exact_threshold(n, S, M, Hh) * dS;
  CHECK(std::abs(g2(dM, n, Hh, M, 1.0) - g1(dS, n, S, 1.0)) < 1e-9);

  const auto c = natarajan_check(0.5 * dS, dS, n, S, M, Hh);
  CHECK(c.condition);
  CHECK(c.g2_below_g1);
  const auto bad = natarajan_check(20 * dS, dS, n, S, M, Hh);
  CHECK_FALSE(bad.condition);
  CHECK_FALSE(bad.g2_below_g1);
  CHECK_THROWS_AS(natarajan_check(1, 1, n, S, M, Hh, 1.5), Error);
  CHECK_THROWS_AS(theorem_threshold(0, 96, 3, 1), Error);
}

// The sufficient form implies the direct one only while H <= S.
TEST_CASE("property: theorem condition implies G2 < G1 when H <= S") {
  std::mt19937_64 g(62);
  std::uniform_real_distribution<double> U(0, 1);
  for (int rep = 0; rep < 500; ++rep) {
    const double n = 2 + 1000 * U(g), S = 2 + 200 * U(g), M = 2 + 10 * U(g), H = 1 + (S - 1) * U(g);
    const double dS = 10 + 1000 * U(g), delta = 0.01 + 0.2 * U(g);
    const double dM = theorem_threshold(n, S, M, H) * dS * U(g);
    const auto c = natarajan_check(dM, dS, n, S, M, H, delta);
    CHECK(c.condition);
    CHECK(c.g2_below_g1);
  }
  // outside that range the sufficient form can hold while G2 >= G1
  const auto c = natarajan_check(0.99 * theorem_threshold(100, 2, 3, 50) * 100, 100, 100, 2, 3, 50, 0.05);
  CHECK(c.condition);
  CHECK_FALSE(c.g2_below_g1);
}
