#pragma once

// Learned placement policies. Image variants see the rendered grid, vector
// variants see [block length | loads | candidate one-hot]; movement variants
// emit LEFT/RIGHT/DOWN, schedule variants emit a start slot directly.
// Training is supervised imitation of oracle schedules, optionally refined
// with DAgger corrections computed from the agent's own visited states.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "occsp/core.hpp"
#include "occsp/engine.hpp"
#include "occsp/instgen.hpp"
#include "occsp/nn.hpp"
#include "occsp/solver.hpp"

namespace occsp::policies {

enum class Variant { I2M, I2S, V2M, V2S };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& text);
bool is_image(Variant v);
bool is_movement(Variant v);

struct EncoderConfig {
  int T = 96;
  int rows = 8;      // rendered capacity levels (image); load scale (vector)
  int l_max = 22;    // vector length-prefix width

  /// Image tensors are zero-padded to at least 8x8 so three 2x2 pools fit.
  int image_height() const { return rows < 8 ? 8 : rows; }
  int image_width() const { return T < 8 ? 8 : T; }
};

/// Rows default to the instance cap, l_max to the longest block.
EncoderConfig encoder_for(const Instance& instance, int l_max = 0);
EncoderConfig encoder_for(const instgen::ScenarioSpec& spec);

nlohmann::json to_json(const EncoderConfig& e);
EncoderConfig encoder_from_json(const nlohmann::json& j);

struct ArchConfig {
  std::vector<int> conv_channels{8, 16, 16};
  int kernel = 3;
  std::vector<int> cnn_hidden{256, 128};
  std::vector<double> cnn_dropout{0.4, 0.3};
  std::vector<int> mlp_hidden{256, 256};
  double mlp_dropout = 0.2;
};

nlohmann::json to_json(const ArchConfig& a);
ArchConfig arch_from_json(const nlohmann::json& j);

using Observation = std::variant<engine::ImageObs, engine::VectorObs>;

Observation observe(const engine::EpisodeState& state, Variant variant, const EncoderConfig& enc);

/// Network input for one observation, laid out as input_shape().
std::vector<double> features(const Observation& obs, const EncoderConfig& enc);

/// Per-sample input shape: {3, H, W} for images, {n} for vectors.
std::vector<int> input_shape(Variant variant, const EncoderConfig& enc);

int head_size(Variant variant, const EncoderConfig& enc);

struct PolicyModel {
  Variant variant = Variant::I2M;
  EncoderConfig encoder;
  ArchConfig arch;
  nn::Network network;
  std::uint64_t seed = 0;

  int head_size() const { return policies::head_size(variant, encoder); }
  long parameter_count() const { return network.parameter_count(); }

  /// Eval-mode class probabilities for one observation.
  std::vector<double> probabilities(const Observation& obs);
  std::vector<double> logits(const Observation& obs);
};

PolicyModel build_network(Variant variant, const EncoderConfig& enc, std::uint64_t seed, const ArchConfig& arch = {});

nlohmann::json to_json(const PolicyModel& m);
PolicyModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const PolicyModel& m);
PolicyModel load_model(const std::filesystem::path& path);

// ----------------------------------------------------------- demonstrations

struct Demonstration {
  Observation observation;
  int label = 0;  // action index 0..2, or start slot 1..T
  int episode_id = 0;
  int ev_id = 0;
};

/// Head class of a label: the action index, or start - 1.
int label_class(Variant variant, int label);

nlohmann::json to_json(const Demonstration& d);
Demonstration demonstration_from_json(const nlohmann::json& j);
std::string write_dataset(const std::vector<Demonstration>& demos);
std::vector<Demonstration> read_dataset(const std::string& text);

engine::Action extract_expert_action(int candidate, int target);

struct DemoSet {
  std::vector<Demonstration> demos;
  std::vector<solver::Status> statuses;  // oracle status per instance
};

/// Replays each instance's oracle schedule along shortest movement paths.
/// Throws Error when the oracle finds no schedule.
DemoSet expert_demonstrations(const std::vector<Instance>& instances, Variant variant, const EncoderConfig& enc,
                              solver::Budget budget = {}, int first_episode_id = 0);

// ----------------------------------------------------------------- training

struct TrainConfig {
  double learning_rate = 0.001;
  int max_iterations = 100;
  int patience = 5;
  double train_fraction = 0.8;
  int batch_size = 0;  // 0: 256 for image variants, 512 for vector variants
  bool restore_best = true;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainLog {
  double initial_loss = 0.0;  // eval-mode loss on the training split before any update
  std::vector<double> train_loss;
  std::vector<double> eval_loss;
  int best_iteration = -1;  // index into eval_loss
  bool stopped_early = false;
  bool single_class = false;
  std::vector<double> class_weights;
  std::size_t train_size = 0, eval_size = 0;
};

nlohmann::json to_json(const TrainLog& log);

/// Trains `model` in place on `demos` (warm start from its current weights).
TrainLog fit(PolicyModel& model, const std::vector<Demonstration>& demos, const TrainConfig& cfg, std::uint64_t seed);

struct TrainResult {
  PolicyModel model;
  TrainLog log;
};

TrainResult train_sl(const std::vector<Demonstration>& demos, Variant variant, const EncoderConfig& enc,
                     const TrainConfig& cfg, std::uint64_t seed, const ArchConfig& arch = {});

// ----------------------------------------------------------------- rollouts

struct RolloutStep {
  Observation observation;
  int ev_id = 0;
  int candidate = 0;  // before the action
  engine::Action action = engine::Action::Down;
  engine::EpisodeState state;  // before the action
};

struct Rollout {
  Schedule schedule;
  std::vector<engine::TraceRecord> trace;
  std::vector<engine::Action> actions;
  int score = 0;
  std::vector<RolloutStep> visited;  // filled when record_states is set
};

/// Greedy rollout: argmax movement per step (first index on ties) or the
/// argmax over cap-feasible starts for schedule variants, realised in the
/// engine along the shortest path.
Rollout rollout(PolicyModel& model, const Instance& instance, bool record_states = false);

/// Uniform-random baseline: each EV starts at a uniformly drawn feasible slot.
Schedule random_policy(const Instance& instance, std::uint64_t seed);

double mean_max_min(PolicyModel& model, const std::vector<Instance>& instances);

// ------------------------------------------------------------------- DAgger

struct DaggerConfig {
  int eta0 = 10;
  int eta = 10;
  int xi = 10;
  int max_outer = 10;
  solver::Budget expert_budget;

  void validate() const;
};

nlohmann::json to_json(const DaggerConfig& c);
DaggerConfig dagger_config_from_json(const nlohmann::json& j);

struct DaggerIteration {
  int iteration = 0;  // 0 = initial supervised model
  std::size_t dataset_size = 0;
  std::size_t corrections = 0;
  int skipped_episodes = 0;
  double validation_max_min = 0.0;
  bool improved = false;
  int train_iterations = 0;
};

struct DaggerResult {
  PolicyModel model;           // best gated model
  PolicyModel initial_model;   // supervised model on the eta0 expert episodes
  double initial_validation = 0.0;
  double best_validation = 0.0;
  std::vector<DaggerIteration> history;
  std::vector<Demonstration> dataset;
};

nlohmann::json to_json(const DaggerIteration& it);

/// Corrections for one agent episode: every visited state paired with the
/// expert action from the optimal completion of its committed prefix.
/// Returns false (and no corrections) when a completion solve fails.
bool collect_corrections(PolicyModel& model, const Instance& instance, int episode_id, solver::Budget budget,
                         std::vector<Demonstration>& out);

DaggerResult run_dagger(const DaggerConfig& config, const TrainConfig& train_cfg, const instgen::ScenarioSpec& scenario,
                        Variant variant, std::uint64_t seed, const ArchConfig& arch = {});

/// Instance seeds used by run_dagger for its expert, rollout and validation
/// draws, exposed so callers can evaluate on the same validation set.
std::vector<Instance> dagger_validation_set(const DaggerConfig& config, const instgen::ScenarioSpec& scenario,
                                            std::uint64_t seed);

}  // namespace occsp::policies
