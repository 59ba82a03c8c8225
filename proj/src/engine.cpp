#include "occsp/engine.hpp"

#include <algorithm>
#include <sstream>

namespace occsp::engine {

std::string to_string(Action a) {
  switch (a) {
    case Action::Left: return "LEFT";
    case Action::Right: return "RIGHT";
    case Action::Down: return "DOWN";
  }
  return "?";
}

Action action_from_string(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (t == "LEFT" || t == "L" || t == "0") return Action::Left;
  if (t == "RIGHT" || t == "R" || t == "1") return Action::Right;
  if (t == "DOWN" || t == "D" || t == "2") return Action::Down;
  throw Error("unknown action '" + text + "'");
}

Action action_from_index(int index) {
  if (index < 0 || index >= kNumActions) throw Error("action index out of range");
  return static_cast<Action>(index);
}

namespace {

// Activates the block at `index`, skipping nothing: every EV gets a turn.
void activate(EpisodeState& s, std::size_t index) {
  s.next_ev_index = index;
  if (index >= s.instance->evs.size()) {
    s.terminal = true;
    s.candidate = 0;
    s.budget_left = 0;
    return;
  }
  s.candidate = s.instance->evs[index].ar;
  s.budget_left = s.T();
}

}  // namespace

EpisodeState reset(std::shared_ptr<const Instance> instance, EngineConfig config) {
  if (!instance) throw Error("reset: null instance");
  EpisodeState s;
  s.config = config;
  s.profile = LoadProfile(instance->T());
  s.instance = std::move(instance);
  activate(s, 0);
  return s;
}

EpisodeState reset(const Instance& instance, EngineConfig config) {
  return reset(std::make_shared<const Instance>(instance), config);
}

int placement_reward(int spread_before, int spread_after) {
  if (spread_after < spread_before) return 1;
  if (spread_after > spread_before) return -1;
  return 0;
}

bool cap_allows(const EpisodeState& state, int start) {
  const Ev& e = state.active();
  for (int j = start; j < start + e.l; ++j)
    if (state.profile.at(j) + 1 > state.instance->cap) return false;
  return true;
}

std::optional<int> drop_start(const EpisodeState& state) {
  const Ev& e = state.active();
  if (cap_allows(state, state.candidate)) return state.candidate;
  for (int dist = 1; dist <= e.last_start() - e.ar; ++dist) {
    if (state.candidate - dist >= e.ar && cap_allows(state, state.candidate - dist)) return state.candidate - dist;
    if (state.candidate + dist <= e.last_start() && cap_allows(state, state.candidate + dist))
      return state.candidate + dist;
  }
  return std::nullopt;
}

std::vector<Action> legal_actions(const EpisodeState& state) {
  if (state.terminal) return {};
  const Ev& e = state.active();
  std::vector<Action> out;
  if (state.candidate > e.ar) out.push_back(Action::Left);
  if (state.candidate < e.last_start()) out.push_back(Action::Right);
  if (cap_allows(state, state.candidate)) out.push_back(Action::Down);
  return out;
}

StepResult step(const EpisodeState& state, Action action) {
  if (state.terminal) throw Error("step: episode is terminal");
  StepResult r{state, std::nullopt};
  EpisodeState& s = r.state;
  const Ev& e = s.active();

  bool drop = action == Action::Down;
  if (!drop) {
    const int moved = std::clamp(s.candidate + (action == Action::Left ? -1 : 1), e.ar, e.last_start());
    const bool blocked = moved == s.candidate;
    s.candidate = moved;
    if (!blocked || s.config.wall_noop_consumes_budget) --s.budget_left;
    drop = s.budget_left <= 0;
  }
  if (!drop) return r;

  const auto start = drop_start(s);
  const int before = max_min(s.profile);
  if (start) {
    s.profile.add_block(*start, e.l);
    s.committed.starts[e.id] = *start;
    s.candidate = *start;
    r.committed = true;
    r.committed_ev = e.id;
    r.committed_start = *start;
  } else {
    s.unplaced.push_back(e.id);
  }
  r.reward = placement_reward(before, max_min(s.profile));
  const int kept_candidate = s.candidate;
  activate(s, s.next_ev_index + 1);
  if (s.terminal) s.candidate = kept_candidate;
  return r;
}

int default_render_rows(const EpisodeState& state) {
  if (state.instance->cap > 0) return state.instance->cap;
  const int l = state.terminal ? 0 : state.active().l;
  return std::max(32, state.profile.peak() + l);
}

ImageObs render_image(const EpisodeState& state, int render_rows) {
  if (state.terminal) throw Error("render_image: episode is terminal");
  const int rows = render_rows > 0 ? render_rows : default_render_rows(state);
  const int T = state.T();
  ImageObs img;
  img.rows = rows;
  img.cols = T;
  img.pixels.assign(static_cast<std::size_t>(3 * rows * T), 0);
  const Ev& e = state.active();
  for (int col = 0; col < T; ++col) {
    const int slot = col + 1;
    const int h = std::min(state.profile.at(slot), rows);
    for (int row = 0; row < h; ++row) img.at(0, row, col) = 1;
    if (slot >= state.candidate && slot < state.candidate + e.l && state.profile.at(slot) < rows)
      img.at(1, state.profile.at(slot), col) = 1;
    if (slot < e.ar || slot > e.d)
      for (int row = 0; row < rows; ++row) img.at(2, row, col) = 1;
  }
  return img;
}

VectorObs encode_vector(const EpisodeState& state, int l_max, bool with_position) {
  if (state.terminal) throw Error("encode_vector: episode is terminal");
  const int T = state.T();
  const Ev& e = state.active();
  if (e.l > l_max) throw Error("encode_vector: block length exceeds l_max");
  VectorObs v;
  v.l_max = l_max;
  v.with_position = with_position;
  v.values.assign(static_cast<std::size_t>(l_max + T + (with_position ? T : 0)), 0);
  for (int k = 0; k < e.l; ++k) v.values[static_cast<std::size_t>(k)] = 1;
  for (int j = 1; j <= T; ++j) v.values[static_cast<std::size_t>(l_max + j - 1)] = state.profile.at(j);
  if (with_position) v.values[static_cast<std::size_t>(l_max + T + state.candidate - 1)] = 1;
  return v;
}

nlohmann::json to_json(const TraceRecord& r) {
  nlohmann::json j = {{"ev_id", r.ev_id}, {"action", to_string(r.action)}, {"candidate_after", r.candidate_after}};
  if (r.reward) j["reward"] = *r.reward;
  return j;
}

TraceRecord trace_record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.ev_id = j.at("ev_id").get<int>();
  r.action = action_from_string(j.at("action").get<std::string>());
  r.candidate_after = j.at("candidate_after").get<int>();
  if (j.contains("reward")) r.reward = j.at("reward").get<int>();
  return r;
}

std::string write_trace(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& r : trace) out += to_json(r).dump() + "\n";
  return out;
}

std::vector<TraceRecord> read_trace(const std::string& text) {
  std::vector<TraceRecord> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(trace_record_from_json(nlohmann::json::parse(line)));
  return out;
}

Replay replay(const Instance& instance, const std::vector<Action>& actions, EngineConfig config) {
  Replay rp{reset(instance, config), {}, 0};
  for (Action a : actions) {
    if (rp.final_state.terminal) break;
    const int ev_id = rp.final_state.active().id;
    StepResult r = step(rp.final_state, a);
    const int cand = r.committed ? r.committed_start : r.state.candidate;
    rp.trace.push_back({ev_id, a, cand, r.reward});
    if (r.reward) rp.score += *r.reward;
    rp.final_state = std::move(r.state);
  }
  return rp;
}

std::vector<Action> path_to(int candidate, int target) {
  std::vector<Action> out;
  const Action dir = target > candidate ? Action::Right : Action::Left;
  for (int k = 0; k < std::abs(target - candidate); ++k) out.push_back(dir);
  out.push_back(Action::Down);
  return out;
}

std::vector<Action> actions_for_schedule(const Instance& instance, const Schedule& schedule) {
  std::vector<Action> out;
  for (const auto& e : instance.evs) {
    auto it = schedule.starts.find(e.id);
    const int target = it == schedule.starts.end() ? e.ar : it->second;
    auto p = path_to(e.ar, target);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace occsp::engine
