#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "occsp/core.hpp"
#include "oracles.hpp"

using namespace occsp;

namespace {
Instance one(int ar, int d, int l, int T = 10, int cap = 0) { return make_instance(Horizon{T}, {{1, ar, d, l}}, cap); }
}  // namespace

TEST_CASE("load_of: empty schedule is all zeros") {
  const auto inst = one(1, 10, 3);
  CHECK(load_of({}, inst) == LoadProfile(std::vector<int>(10, 0)));
}

TEST_CASE("load_of: single block") {
  const auto inst = one(1, 10, 3);
  Schedule s;
  s.starts[1] = 2;
  CHECK(load_of(s, inst).counts == std::vector<int>{0, 1, 1, 1, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("load_of: overlap matches membership count") {
  const auto inst = make_instance(Horizon{10}, {{1, 1, 10, 3}, {2, 1, 10, 4}});
  Schedule s;
  s.starts = {{1, 3}, {2, 5}};
  const auto c = load_of(s, inst);
  CHECK(c.at(5) == 2);
  CHECK(c.counts == oracle::naive_load(inst, s.starts));
}

TEST_CASE("load_of: unknown id is a mismatch") {
  const auto inst = one(1, 10, 3);
  Schedule s;
  s.starts[7] = 1;
  CHECK_THROWS_AS(load_of(s, inst), ScheduleMismatch);
}

TEST_CASE("max_min") {
  CHECK(max_min(LoadProfile(std::vector<int>{2, 2, 2})) == 0);
  CHECK(max_min(LoadProfile(std::vector<int>{0, 1, 2})) == 2);
  std::mt19937_64 g(11);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> c(96);
    for (auto& v : c) v = static_cast<int>(g() % 40);
    CHECK(max_min(LoadProfile(c)) == oracle::spread(c));
  }
}

TEST_CASE("rmse") {
  CHECK(rmse(LoadProfile(std::vector<int>{2, 2, 2})) == doctest::Approx(0.0));
  CHECK(rmse(LoadProfile(std::vector<int>{0, 1, 2})) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  std::mt19937_64 g(12);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> c(96);
    for (auto& v : c) v = static_cast<int>(g() % 40);
    double m = 0;
    for (int v : c) m += v;
    m /= 96;
    double ss = 0;
    for (int v : c) ss += (v - m) * (v - m);
    CHECK(std::abs(rmse(LoadProfile(c)) - std::sqrt(ss / 96)) < 1e-12);
  }
}

TEST_CASE("max_min and rmse are invariant under slot permutation") {
  std::mt19937_64 g(13);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<int> c(48);
    for (auto& v : c) v = static_cast<int>(g() % 20);
    auto p = c;
    std::shuffle(p.begin(), p.end(), g);
    CHECK(max_min(LoadProfile(c)) == max_min(LoadProfile(p)));
    CHECK(std::abs(rmse(LoadProfile(c)) - rmse(LoadProfile(p))) < 1e-12);
  }
}

TEST_CASE("check_feasible: window boundaries") {
  const auto inst = one(3, 5, 3);
  Schedule s;
  s.starts[1] = 3;
  CHECK(check_feasible(s, inst).ok());
  s.starts[1] = 4;
  const auto f = check_feasible(s, inst);
  CHECK_FALSE(f.ok());
  CHECK(f.has(ViolationKind::Window));
  CHECK(f.violations.front().ev_id == 1);
}

TEST_CASE("check_feasible: capacity") {
  const auto inst = make_instance(Horizon{6}, {{1, 1, 6, 2}, {2, 1, 6, 2}}, 1);
  Schedule s;
  s.starts = {{1, 1}, {2, 2}};
  const auto f = check_feasible(s, inst);
  CHECK(f.has(ViolationKind::Capacity));
  CHECK(f.violations.front().slot == 2);
}

TEST_CASE("check_feasible: unknown and missing EVs") {
  const auto inst = one(1, 10, 3);
  Schedule s;
  s.starts[9] = 1;
  CHECK(check_feasible(s, inst).has(ViolationKind::UnknownEv));
  CHECK(check_feasible(Schedule{}, inst).ok());
  CHECK(check_feasible(Schedule{}, inst, {true}).has(ViolationKind::Missing));
}

TEST_CASE("property: check_feasible agrees with an exhaustive per-slot check") {
  std::mt19937_64 g(14);
  for (int rep = 0; rep < 300; ++rep) {
    const int N = 1 + static_cast<int>(g() % 10), T = 4 + static_cast<int>(g() % 12);
    const int cap = 1 + static_cast<int>(g() % 4);
    auto inst = oracle::random_instance(g, N, T, cap);
    Schedule s;
    for (const auto& e : inst.evs) s.starts[e.id] = 1 + static_cast<int>(g() % T);
    CHECK(check_feasible(s, inst).ok() == oracle::naive_feasible(inst, s.starts));
  }
}

TEST_CASE("property: load conservation") {
  std::mt19937_64 g(15);
  for (int rep = 0; rep < 100; ++rep) {
    auto inst = oracle::random_instance(g, 1 + static_cast<int>(g() % 10), 12);
    const auto c = load_of(plug_in_schedule(inst), inst);
    CHECK(c.total() == inst.total_length());
  }
}

TEST_CASE("instance validation and defaults") {
  const auto inst = make_instance(Horizon{10}, {{2, 5, 9, 2}, {1, 3, 9, 1}, {3, 3, 4, 2}});
  CHECK(inst.cap == 3);
  CHECK(inst.evs[0].id == 1);
  CHECK(inst.evs[1].id == 3);
  CHECK(inst.evs[2].id == 2);
  CHECK_THROWS_AS(make_instance(Horizon{10}, {{1, 5, 4, 1}}), Error);
  CHECK_THROWS_AS(make_instance(Horizon{10}, {{1, 5, 6, 3}}), Error);
  CHECK_THROWS_AS(make_instance(Horizon{10}, {{1, 5, 11, 1}}), Error);
  CHECK_THROWS_AS(make_instance(Horizon{0}, {}), Error);
  CHECK_THROWS_AS(make_instance(Horizon{10}, {{1, 1, 2, 1}, {1, 1, 2, 1}}), Error);
}
