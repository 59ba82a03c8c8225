#pragma once

// Episode sessions over HTTP, run configuration, and the named-policy
// registry shared by the CLI and the compare endpoint.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "occsp/analysis.hpp"
#include "occsp/engine.hpp"
#include "occsp/instgen.hpp"
#include "occsp/policies.hpp"
#include "occsp/solver.hpp"

namespace occsp::service {

// ------------------------------------------------------------------ policies

struct PolicyContext {
  std::vector<Instance> calibration_set;  // alpha / beta calibration
  solver::Budget budget;                  // oracle, re-opt, beta
  std::optional<std::filesystem::path> model_path;
  std::uint64_t seed = 0;                 // random baseline
};

/// Known names: oracle, reopt, rowfill, plugin, alpha, beta, random,
/// threshold:<X> (or xthreshold:<X>), model:<path>. Calibrated thresholds are resolved once,
/// when the policy is built.
analysis::NamedPolicy make_policy(const std::string& name, const PolicyContext& ctx);

std::vector<std::string> known_policies();

// -------------------------------------------------------------- run config

struct RunConfig {
  instgen::ScenarioSpec scenario;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> policies{"plugin", "rowfill", "alpha", "beta", "reopt", "oracle"};
  solver::Budget budget;
  policies::Variant variant = policies::Variant::I2M;
  policies::TrainConfig train;
  policies::DaggerConfig dagger;
  policies::ArchConfig arch;
  std::filesystem::path output_dir = "out";
  std::uint64_t calibration_seed = 0;
  int calibration_count = 10;
};

/// Scenario object: {"id": 1..4} or {"id", "T", "n_evs"} for a rescaled
/// desk scenario, optionally with "perturbation": {"band", "targets", "seed"}.
instgen::ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const instgen::ScenarioSpec& s);

/// Validates every key before returning; unknown keys are errors.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// ---------------------------------------------------------------- sessions

struct HttpError : Error {
  int status;
  HttpError(int s, const std::string& msg) : Error(msg), status(s) {}
};

struct Session {
  std::string id;
  std::string mode;  // human | heuristic:<name> | agent:<model path>
  nlohmann::json source;  // scenario + seed, or the uploaded instance
  std::shared_ptr<const Instance> instance;
  engine::EpisodeState state;
  std::vector<engine::TraceRecord> trace;
  int score = 0;
  std::optional<int> last_reward;
  std::string created_at;
  std::mutex mu;
};

struct StoreOptions {
  std::optional<std::filesystem::path> data_dir;
  solver::Budget compare_budget{10.0, std::nullopt, 0};
  int snapshot_every = 16;
  int calibration_count = 10;
};

class SessionStore {
 public:
  explicit SessionStore(StoreOptions options = {});

  /// Body: {"scenario": <scenario object>, "seed": n} or {"instance": {...}},
  /// plus optional "mode". Returns the initial view (auto-played modes
  /// return the terminal view with the full trace).
  nlohmann::json create_episode(const nlohmann::json& body);
  nlohmann::json get(const std::string& id);
  nlohmann::json apply_action(const std::string& id, const std::string& action);
  nlohmann::json compare(const std::string& id, const std::optional<std::string>& model_path = std::nullopt);
  static nlohmann::json scenarios();

  /// Reloads every persisted session by replaying its action log.
  std::size_t load_persisted();
  std::size_t size() const;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  void persist_new(const Session& s) const;
  void persist_action(const Session& s, engine::Action a) const;
  std::string new_id();

  StoreOptions opts_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

/// JSON view of a session. Only the committed blocks and the active block
/// are exposed, never EVs that have not yet arrived.
nlohmann::json view(const Session& s, bool include_trace = false);

/// HTTP front end over a store. bind() with port 0 picks a free port.
class HttpServer {
 public:
  explicit HttpServer(SessionStore& store);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocking HTTP server on host:port.
void serve(SessionStore& store, const std::string& host, int port);

/// Data directory from OCCSP_DATA_DIR, if set.
std::optional<std::filesystem::path> data_dir_from_env();

}  // namespace occsp::service
