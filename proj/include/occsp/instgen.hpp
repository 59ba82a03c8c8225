#pragma once

// Benchmark instance generation: the four built-in arrival scenarios, the
// slot discretization and block-length rules, seeded sampling, and the
// +/- band perturbations used for sensitivity studies.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "occsp/core.hpp"

namespace occsp::instgen {

struct NormalComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
};

/// Arrival distribution: a single normal or a weighted mixture.
struct ArrivalDist {
  std::vector<NormalComponent> components;
};

struct Perturbation {
  double band = 0.0;
  double mean_factor = 1.0;
  double std_factor = 1.0;
  double count_factor = 1.0;
};

struct ScenarioSpec {
  std::string id;
  int n_evs = 200;
  ArrivalDist arrival;
  NormalComponent departure{1.0, 72.0, 6.0};
  int l_max = 22;
  Horizon horizon;
  std::optional<Perturbation> perturbation;

  void validate() const;
};

/// Table of the four evaluation scenarios (1..4) on the 96-slot day.
ScenarioSpec builtin_scenario(int id);

/// A built-in scenario rescaled to a shorter horizon: every time constant is
/// multiplied by T / 96 and the EV count replaced by `n_evs`.
ScenarioSpec desk_scenario(int id, int T, int n_evs);

/// Rounds continuous timestamps onto slots after clamping both to [1, T]:
/// ar = ceil, d = floor. Returns nullopt when the window is empty.
std::optional<std::pair<int, int>> discretize(double ar_cont, double d_cont, int T);

/// Slots needed to move from soc_ar to soc_d at `per_slot` energy per slot.
int block_length(double soc_ar, double soc_d, double per_slot = 1.75);

/// Maximum resampling attempts per EV before generation fails.
inline constexpr int kMaxRetries = 1000;

Instance sample_instance(const ScenarioSpec& spec, std::uint64_t seed);

enum PerturbTarget : unsigned { kMean = 1u, kStd = 2u, kCount = 4u, kAll = 7u };

/// Multiplies each targeted parameter by an independent factor drawn
/// uniformly from [1 - band, 1 + band].
ScenarioSpec perturb_spec(const ScenarioSpec& spec, double band, unsigned targets, std::uint64_t seed);

/// Parses "mean,std,count" style target lists.
unsigned parse_targets(const std::string& text);

}  // namespace occsp::instgen
