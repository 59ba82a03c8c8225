#include <doctest.h>

#include <algorithm>
#include <random>

#include "occsp/engine.hpp"
#include "occsp/instgen.hpp"
#include "oracles.hpp"

using namespace occsp;
using namespace occsp::engine;

namespace {
bool has(const std::vector<Action>& v, Action a) { return std::find(v.begin(), v.end(), a) != v.end(); }

Action random_action(std::mt19937_64& g) { return static_cast<Action>(g() % 3); }
}  // namespace

TEST_CASE("reset") {
  const auto s = reset(make_instance(Horizon{96}, {{1, 5, 20, 4}}));
  CHECK(s.candidate == 5);
  CHECK(s.budget_left == 96);
  CHECK(s.committed.size() == 0);
  CHECK(s.profile.total() == 0);
  CHECK_FALSE(s.terminal);

  CHECK(reset(make_instance(Horizon{10}, {})).terminal);

  const auto inst = instgen::sample_instance(instgen::builtin_scenario(1), 4);
  const auto r = reset(inst);
  int min_ar = 1000, min_id = 0;
  for (const auto& e : inst.evs)
    if (e.ar < min_ar || (e.ar == min_ar && e.id < min_id)) {
      min_ar = e.ar;
      min_id = e.id;
    }
  CHECK(r.active().id == min_id);
  CHECK(r.candidate == min_ar);
}

TEST_CASE("step: first drop on an empty grid") {
  const auto s = reset(make_instance(Horizon{10}, {{1, 1, 10, 3}}));
  const auto r = step(s, Action::Down);
  REQUIRE(r.reward.has_value());
  CHECK(*r.reward == -1);
  CHECK(r.committed);
  CHECK(r.state.terminal);
}

TEST_CASE("step: filling the valley earns +1") {
  const auto inst = make_instance(Horizon{3}, {{1, 1, 2, 2}, {2, 3, 3, 1}});
  auto s = step(reset(inst), Action::Down).state;
  CHECK(s.profile.counts == std::vector<int>{1, 1, 0});
  CHECK(s.candidate == 3);
  const auto r = step(s, Action::Down);
  CHECK(r.state.profile.counts == std::vector<int>{1, 1, 1});
  CHECK(*r.reward == 1);
}

TEST_CASE("step: reward matches recomputed spread change") {
  std::mt19937_64 g(21);
  int zeros = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto inst = oracle::random_instance(g, 6, 10);
    auto s = reset(inst);
    while (!s.terminal) {
      const auto before = s.profile.counts;
      auto r = step(s, random_action(g));
      if (r.committed) {
        const int d0 = oracle::spread(before), d1 = oracle::spread(r.state.profile.counts);
        REQUIRE(r.reward.has_value());
        CHECK(*r.reward == (d1 < d0 ? 1 : d1 > d0 ? -1 : 0));
        if (*r.reward == 0) ++zeros;
      } else {
        CHECK_FALSE(r.reward.has_value());
      }
      s = r.state;
    }
  }
  CHECK(zeros > 0);
}

TEST_CASE("step: movement clamps and consumes budget") {
  const auto inst = make_instance(Horizon{10}, {{1, 3, 8, 2}});
  auto s = reset(inst);
  s = step(s, Action::Left).state;
  CHECK(s.candidate == 3);
  CHECK(s.budget_left == 9);
  for (int k = 0; k < 10 && !s.terminal; ++k) s = step(s, Action::Right).state;
  CHECK(s.terminal);
  CHECK(s.committed.starts.at(1) == 7);

  EngineConfig free_walls{false};
  auto f = reset(inst, free_walls);
  f = step(f, Action::Left).state;
  CHECK(f.budget_left == 10);
}

TEST_CASE("step: budget exhaustion forces a drop at the current candidate") {
  const auto inst = make_instance(Horizon{6}, {{1, 1, 6, 2}, {2, 1, 6, 1}});
  auto s = reset(inst);
  const std::vector<Action> wiggle{Action::Right, Action::Left};
  int moves = 0;
  while (s.next_ev_index == 0) {
    auto r = step(s, wiggle[static_cast<std::size_t>(moves % 2)]);
    ++moves;
    s = r.state;
    if (r.committed) {
      CHECK(r.committed_start == (moves % 2 == 1 ? 2 : 1));
    }
  }
  CHECK(moves == 6);
  CHECK_THROWS_AS(step(step(s, Action::Down).state, Action::Down), Error);
}

TEST_CASE("legal_actions") {
  const auto inst = make_instance(Horizon{10}, {{1, 2, 8, 3}});
  auto s = reset(inst);
  auto a = legal_actions(s);
  CHECK_FALSE(has(a, Action::Left));
  CHECK(has(a, Action::Right));
  CHECK(has(a, Action::Down));
  for (int k = 0; k < 4; ++k) s = step(s, Action::Right).state;
  CHECK(s.candidate == 6);
  a = legal_actions(s);
  CHECK(has(a, Action::Left));
  CHECK_FALSE(has(a, Action::Right));
  CHECK(has(a, Action::Down));

  const auto tight = reset(make_instance(Horizon{10}, {{1, 4, 6, 3}}));
  CHECK(legal_actions(tight) == std::vector<Action>{Action::Down});
}

TEST_CASE("cap binding removes DOWN and drops at the nearest feasible start") {
  // slots 3..4 are full under cap 1; the next block arrives at 3
  const auto inst = make_instance(Horizon{10}, {{1, 3, 4, 2}, {2, 3, 10, 2}}, 1);
  auto s = step(reset(inst), Action::Down).state;
  CHECK(s.candidate == 3);
  CHECK_FALSE(has(legal_actions(s), Action::Down));
  CHECK(drop_start(s) == 5);
  const auto r = step(s, Action::Down);
  CHECK(r.committed_start == 5);
  CHECK(check_feasible(r.state.committed, inst).ok());
}

TEST_CASE("nearest cap-feasible start prefers the left on ties") {
  // EV 1 fills slot 5 under cap 1; EV 2 is steered onto slot 5
  const auto inst = make_instance(Horizon{10}, {{1, 1, 5, 1}, {2, 2, 10, 1}}, 1);
  auto s = reset(inst);
  for (int k = 0; k < 4; ++k) s = step(s, Action::Right).state;
  s = step(s, Action::Down).state;
  CHECK(s.committed.starts.at(1) == 5);
  for (int k = 0; k < 3; ++k) s = step(s, Action::Right).state;
  CHECK(s.candidate == 5);
  CHECK(drop_start(s) == 4);
  CHECK(step(s, Action::Down).committed_start == 4);
}

TEST_CASE("render_image") {
  const auto empty = reset(make_instance(Horizon{8}, {{1, 3, 6, 2}}, 4));
  const auto img = render_image(empty);
  CHECK(img.rows == 4);
  CHECK(img.cols == 8);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) CHECK(img.at(0, r, c) == 0);
  for (int c = 0; c < 8; ++c) {
    const bool outside = c + 1 < 3 || c + 1 > 6;
    for (int r = 0; r < 4; ++r) CHECK(img.at(2, r, c) == (outside ? 1 : 0));
  }

  // flat terrain of height 2, block of length 3
  std::vector<Ev> evs{{1, 1, 8, 8}, {2, 1, 8, 8}, {3, 2, 8, 3}};
  auto s = reset(make_instance(Horizon{8}, evs, 6));
  s = step(s, Action::Down).state;
  s = step(s, Action::Down).state;
  s = step(s, Action::Right).state;
  const auto im = render_image(s);
  int lit = 0;
  for (int r = 0; r < im.rows; ++r)
    for (int c = 0; c < im.cols; ++c) {
      lit += im.at(1, r, c);
      if (im.at(1, r, c)) CHECK(r == 2);
    }
  CHECK(lit == 3);
}

TEST_CASE("property: active block lands conformally in the image") {
  std::mt19937_64 g(22);
  for (int rep = 0; rep < 100; ++rep) {
    const auto inst = oracle::random_instance(g, 8, 12);
    auto s = reset(inst);
    while (!s.terminal) {
      const auto img = render_image(s);
      for (int j = 1; j <= s.T(); ++j) {
        const bool covered = j >= s.candidate && j < s.candidate + s.active().l;
        const int h = s.profile.at(j);
        for (int r = 0; r < img.rows; ++r) {
          CHECK(img.at(0, r, j - 1) == (r < h ? 1 : 0));
          CHECK(img.at(1, r, j - 1) == (covered && r == h ? 1 : 0));
        }
      }
      s = step(s, random_action(g)).state;
    }
  }
}

TEST_CASE("encode_vector") {
  const auto inst = make_instance(Horizon{12}, {{1, 1, 12, 3}, {2, 4, 12, 2}});
  auto s = reset(inst);
  const auto v = encode_vector(s, 22, false);
  REQUIRE(v.values.size() == 34);
  for (int k = 0; k < 22; ++k) CHECK(v.values[static_cast<std::size_t>(k)] == (k < 3 ? 1 : 0));
  for (int k = 22; k < 34; ++k) CHECK(v.values[static_cast<std::size_t>(k)] == 0);

  s = step(s, Action::Right).state;
  s = step(s, Action::Down).state;
  const auto w = encode_vector(s, 22, true);
  REQUIRE(w.values.size() == 46);
  const auto c = load_of(s.committed, inst);
  for (int j = 1; j <= 12; ++j) CHECK(w.values[static_cast<std::size_t>(21 + j)] == c.at(j));
  for (int j = 1; j <= 12; ++j) CHECK(w.values[static_cast<std::size_t>(33 + j)] == (j == 4 ? 1 : 0));
}

TEST_CASE("property: replay determinism, feasibility and budget bound") {
  std::mt19937_64 g(23);
  for (int rep = 0; rep < 200; ++rep) {
    const auto inst = oracle::random_instance(g, 1 + static_cast<int>(g() % 8), 4 + static_cast<int>(g() % 12),
                                              static_cast<int>(g() % 4));
    std::vector<Action> acts;
    for (int k = 0; k < 400; ++k) acts.push_back(random_action(g));
    const auto a = replay(inst, acts);
    const auto b = replay(inst, acts);
    CHECK(a.final_state.committed == b.final_state.committed);
    CHECK(a.trace == b.trace);
    CHECK(check_feasible(a.final_state.committed, inst).ok());
    CHECK(a.final_state.profile == load_of(a.final_state.committed, inst));

    int since = 0, prev_ev = -1, delta_sum = 0;
    LoadProfile prof(inst.T());
    for (const auto& r : a.trace) {
      if (r.ev_id != prev_ev) since = 0;
      prev_ev = r.ev_id;
      if (r.action != Action::Down) ++since;
      CHECK(since <= inst.T());
      if (r.reward && a.final_state.committed.contains(r.ev_id) &&
          a.final_state.committed.starts.at(r.ev_id) == r.candidate_after) {
        const int before = max_min(prof);
        prof.add_block(r.candidate_after, inst.ev(r.ev_id).l);
        const int after = max_min(prof);
        delta_sum += after - before;
        CHECK(*r.reward == placement_reward(before, after));
      }
    }
    CHECK(delta_sum == max_min(a.final_state.profile) - 0);
  }
}

TEST_CASE("trace files round-trip") {
  const auto inst = make_instance(Horizon{6}, {{1, 1, 6, 2}, {2, 2, 6, 3}});
  const auto rp = replay(inst, {Action::Right, Action::Down, Action::Left, Action::Right, Action::Down});
  const auto text = write_trace(rp.trace);
  CHECK(read_trace(text) == rp.trace);
  std::vector<Action> acts;
  for (const auto& r : read_trace(text)) acts.push_back(r.action);
  CHECK(replay(inst, acts).trace == rp.trace);
  CHECK(text.find("\"reward\"") != std::string::npos);
}

TEST_CASE("actions_for_schedule realises the schedule") {
  std::mt19937_64 g(24);
  for (int rep = 0; rep < 50; ++rep) {
    const auto inst = oracle::random_instance(g, 6, 12);
    Schedule s;
    for (const auto& e : inst.evs) s.starts[e.id] = e.ar + static_cast<int>(g() % (e.last_start() - e.ar + 1));
    CHECK(replay(inst, actions_for_schedule(inst, s)).final_state.committed == s);
  }
  CHECK(action_from_string("left") == Action::Left);
  CHECK(action_from_string("2") == Action::Down);
  CHECK_THROWS_AS(action_from_string("up"), Error);
}
