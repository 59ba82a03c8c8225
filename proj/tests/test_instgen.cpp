#include <doctest.h>

#include <cmath>

#include "occsp/instgen.hpp"
#include "occsp/io.hpp"
#include "oracles.hpp"

using namespace occsp;
using namespace occsp::instgen;

TEST_CASE("builtin scenarios") {
  const auto s1 = builtin_scenario(1);
  CHECK(s1.n_evs == 200);
  REQUIRE(s1.arrival.components.size() == 1);
  CHECK(s1.arrival.components[0].mean == 24.0);
  CHECK(s1.arrival.components[0].stddev == 12.0);
  CHECK(s1.departure.mean == 72.0);
  CHECK(s1.departure.stddev == 6.0);
  CHECK(s1.l_max == 22);
  CHECK(s1.horizon.T == 96);

  const auto s2 = builtin_scenario(2);
  CHECK(s2.n_evs == 300);
  CHECK(s2.arrival.components[0].mean == 24.0);
  CHECK(s2.arrival.components[0].stddev == 12.0);

  const auto s3 = builtin_scenario(3);
  CHECK(s3.n_evs == 200);
  CHECK(s3.arrival.components[0].stddev == 6.0);

  const auto s4 = builtin_scenario(4);
  REQUIRE(s4.arrival.components.size() == 2);
  CHECK(s4.arrival.components[0].weight == 0.5);
  CHECK(s4.arrival.components[1].weight == 0.5);
  CHECK(s4.arrival.components[0].mean == 16.0);
  CHECK(s4.arrival.components[1].mean == 32.0);
  CHECK(s4.arrival.components[0].stddev == 3.0);
  CHECK(s4.arrival.components[1].stddev == 3.0);

  CHECK_THROWS_AS(builtin_scenario(0), Error);
  CHECK_THROWS_AS(builtin_scenario(5), Error);
}

TEST_CASE("discretize") {
  CHECK(discretize(13.2, 70.9, 96) == std::make_pair(14, 70));
  CHECK(discretize(5.0, 5.0, 96) == std::make_pair(5, 5));
  CHECK(discretize(0.3, 96.7, 96) == std::make_pair(1, 96));
  CHECK_FALSE(discretize(5.2, 5.8, 96).has_value());
}

TEST_CASE("block_length") {
  CHECK(block_length(0, 10.5, 1.75) == 6);
  CHECK(block_length(0, 10.6, 1.75) == 7);
  CHECK(block_length(5, 5, 1.75) == 0);
  CHECK(block_length(0, 10.5) == 6);
  CHECK_THROWS_AS(block_length(0, 1, 0.0), Error);
  CHECK_THROWS_AS(block_length(0, 1, -1.0), Error);
}

TEST_CASE("sample_instance: scenario 1 shape") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = sample_instance(builtin_scenario(1), seed);
    CHECK(inst.size() == 200);
    CHECK(inst.cap == 200);
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const auto& e = inst.evs[i];
      CHECK(e.valid_in(inst.horizon));
      CHECK(e.l <= 22);
      if (i > 0) CHECK(inst.evs[i - 1].ar <= e.ar);
    }
    CHECK(check_feasible(plug_in_schedule(inst), inst).ok());
  }
}

TEST_CASE("sample_instance: singleton") {
  auto spec = builtin_scenario(1);
  spec.n_evs = 1;
  const auto inst = sample_instance(spec, 3);
  REQUIRE(inst.size() == 1);
  Schedule s;
  s.starts[inst.evs[0].id] = inst.evs[0].ar;
  CHECK(check_feasible(s, inst).ok());
}

TEST_CASE("sample_instance: determinism") {
  for (int id = 1; id <= 4; ++id)
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
      const auto a = io::canonical(io::to_json(sample_instance(builtin_scenario(id), seed)));
      const auto b = io::canonical(io::to_json(sample_instance(builtin_scenario(id), seed)));
      CHECK(a == b);
    }
  CHECK(io::canonical(io::to_json(sample_instance(builtin_scenario(1), 1))) !=
        io::canonical(io::to_json(sample_instance(builtin_scenario(1), 2))));
}

TEST_CASE("sample_instance: arrival distribution at desk scale") {
  std::vector<double> ar;
  for (std::uint64_t seed = 0; ar.size() < 10000; ++seed)
    for (const auto& e : sample_instance(builtin_scenario(1), seed).evs) ar.push_back(e.ar);
  ar.resize(10000);
  const double m = oracle::mean(ar);
  double ss = 0;
  for (double x : ar) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / (ar.size() - 1));
  CHECK(std::abs(m - 24.0) <= 1.0);
  CHECK(std::abs(sd - 12.0) <= 1.0);
}

TEST_CASE("sample_instance: every scenario admits immediate start") {
  for (int id = 1; id <= 4; ++id)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = sample_instance(builtin_scenario(id), seed);
      CHECK(check_feasible(plug_in_schedule(inst), inst, {true}).ok());
    }
}

TEST_CASE("perturb_spec") {
  const auto base = builtin_scenario(1);
  const auto same = perturb_spec(base, 0.0, kAll, 5);
  CHECK(same.n_evs == base.n_evs);
  CHECK(same.arrival.components[0].mean == base.arrival.components[0].mean);
  CHECK(same.arrival.components[0].stddev == base.arrival.components[0].stddev);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = perturb_spec(base, 0.10, kCount, seed);
    CHECK(p.n_evs >= 180);
    CHECK(p.n_evs <= 220);
    CHECK(p.arrival.components[0].mean == 24.0);
    CHECK(p.arrival.components[0].stddev == 12.0);
  }

  int all_moved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = perturb_spec(base, 0.10, parse_targets("mean,std,count"), seed);
    const double fm = p.arrival.components[0].mean / 24.0, fs = p.arrival.components[0].stddev / 12.0;
    CHECK(fm >= 0.9);
    CHECK(fm <= 1.1);
    CHECK(fs >= 0.9);
    CHECK(fs <= 1.1);
    if (fm != 1.0 && fs != 1.0 && p.n_evs != 200) ++all_moved;
  }
  CHECK(all_moved >= 15);
  CHECK_THROWS_AS(perturb_spec(base, 1.0, kAll, 0), Error);
  CHECK_THROWS_AS(perturb_spec(base, -0.1, kAll, 0), Error);
  CHECK_THROWS_AS(parse_targets("mean,foo"), Error);
}

TEST_CASE("desk scenario rescales time constants") {
  const auto d = desk_scenario(1, 24, 10);
  CHECK(d.horizon.T == 24);
  CHECK(d.n_evs == 10);
  CHECK(d.arrival.components[0].mean == doctest::Approx(6.0));
  CHECK(d.arrival.components[0].stddev == doctest::Approx(3.0));
  CHECK(d.departure.mean == doctest::Approx(18.0));
  CHECK(d.l_max == 6);
  CHECK(d.horizon.slot_minutes == 60);
  const auto inst = sample_instance(d, 0);
  for (const auto& e : inst.evs) CHECK(e.valid_in(inst.horizon));
}
