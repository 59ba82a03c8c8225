#pragma once

// Episodic block-placement game. Each EV appears as a block at its arrival
// column; the player shifts it left/right inside its feasible start range and
// drops it. Dropping commits the block conformally (every covered column's
// load grows by one) and scores the move by the change in peak-to-valley
// spread. A block that exhausts its action budget is dropped where it is.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occsp/core.hpp"

namespace occsp::engine {

enum class Action : int { Left = 0, Right = 1, Down = 2 };

inline constexpr int kNumActions = 3;

std::string to_string(Action a);
Action action_from_string(const std::string& text);
Action action_from_index(int index);

struct EngineConfig {
  /// A LEFT at the left wall or RIGHT at the right wall leaves the block in
  /// place but still costs one action.
  bool wall_noop_consumes_budget = true;
};

struct EpisodeState {
  std::shared_ptr<const Instance> instance;
  EngineConfig config;
  std::size_t next_ev_index = 0;  // index into instance->evs of the active block
  Schedule committed;
  LoadProfile profile;
  int candidate = 0;
  int budget_left = 0;
  bool terminal = false;
  std::vector<int> unplaced;  // EVs with no cap-feasible start (finite cap only)

  const Ev& active() const { return instance->evs[next_ev_index]; }
  int T() const { return instance->T(); }
};

EpisodeState reset(std::shared_ptr<const Instance> instance, EngineConfig config = {});
EpisodeState reset(const Instance& instance, EngineConfig config = {});

struct StepResult {
  EpisodeState state;
  std::optional<int> reward;  // set only when a block was committed
  bool committed = false;
  int committed_ev = 0;
  int committed_start = 0;
};

/// Throws Error on a terminal state.
StepResult step(const EpisodeState& state, Action action);

/// Placement reward: +1 if the spread shrank, -1 if it grew, 0 otherwise.
int placement_reward(int spread_before, int spread_after);

/// True when committing the active block at `start` keeps every covered slot
/// within capacity.
bool cap_allows(const EpisodeState& state, int start);

/// Start the engine actually uses for a drop requested at the candidate:
/// the candidate itself when cap allows it, else the nearest cap-feasible
/// start (ties to the left), or nullopt when none exists.
std::optional<int> drop_start(const EpisodeState& state);

std::vector<Action> legal_actions(const EpisodeState& state);

struct ImageObs {
  int channels = 3;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // [channel][row][col], row 0 = lowest level

  std::uint8_t at(int ch, int row, int col) const {
    return pixels[(static_cast<std::size_t>(ch) * rows + row) * cols + col];
  }
  std::uint8_t& at(int ch, int row, int col) {
    return pixels[(static_cast<std::size_t>(ch) * rows + row) * cols + col];
  }
  bool operator==(const ImageObs&) const = default;
};

/// Default render height: the instance cap.
int default_render_rows(const EpisodeState& state);

/// Channel 0: committed load, channel 1: active block resting on the
/// terrain at its candidate, channel 2: columns outside [ar, d].
ImageObs render_image(const EpisodeState& state, int render_rows = 0);

struct VectorObs {
  int l_max = 0;
  bool with_position = false;
  std::vector<int> values;  // [length prefix | loads | one-hot candidate]
  bool operator==(const VectorObs&) const = default;
};

VectorObs encode_vector(const EpisodeState& state, int l_max, bool with_position);

struct TraceRecord {
  int ev_id = 0;
  Action action = Action::Down;
  int candidate_after = 0;  // block position after the step (the start, on commit)
  std::optional<int> reward;
  bool operator==(const TraceRecord&) const = default;
};

nlohmann::json to_json(const TraceRecord& r);
TraceRecord trace_record_from_json(const nlohmann::json& j);

/// One JSON object per line.
std::string write_trace(const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace(const std::string& text);

struct Replay {
  EpisodeState final_state;
  std::vector<TraceRecord> trace;
  int score = 0;
};

/// Plays an action sequence from reset; stops early if the episode ends.
Replay replay(const Instance& instance, const std::vector<Action>& actions, EngineConfig config = {});

/// Shortest movement path from the arrival-anchored candidate to `target`:
/// repeated RIGHT (or LEFT) then DOWN.
std::vector<Action> path_to(int candidate, int target);

/// Converts a schedule to the action sequence that realises it in the game.
std::vector<Action> actions_for_schedule(const Instance& instance, const Schedule& schedule);

}  // namespace occsp::engine
