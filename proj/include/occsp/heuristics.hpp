#pragma once

// Rule-based online policies: row-filling (shallowest footprint first, then
// leftmost) and the X-threshold family that caps how many EVs start at their
// arrival slot, with the alpha (mean load) and beta (mean oracle peak)
// calibrations of X.

#include <limits>
#include <optional>
#include <vector>

#include "occsp/core.hpp"
#include "occsp/solver.hpp"

namespace occsp::heuristics {

/// Row-filling start for one EV on top of `profile`: the start in
/// [max(ar, min_start), d - l + 1] whose footprint has the lowest maximum
/// load, leftmost among ties, and that keeps every covered slot <= cap.
std::optional<int> row_fill_start(const LoadProfile& profile, const Ev& ev, int cap, int min_start = 1);

Schedule row_filling(const Instance& instance);
/// Same, starting from an existing terrain.
Schedule row_filling(const Instance& instance, LoadProfile initial);

inline constexpr int kNoThreshold = std::numeric_limits<int>::max();

enum class Calibration { Explicit, Alpha, Beta };

struct ThresholdConfig {
  int X = 0;
  Calibration calibration = Calibration::Explicit;
  std::vector<Instance> calibration_set;
};

/// Start for an EV under the X rule given the running profile.
std::optional<int> threshold_start(const LoadProfile& profile, const Ev& ev, int cap, int X);

Schedule x_threshold(const Instance& instance, int X);
Schedule x_threshold(const Instance& instance, int X, LoadProfile initial);
/// Resolves X from the config (calibrating when asked) and runs the policy.
Schedule x_threshold(const Instance& instance, const ThresholdConfig& config);

/// Plug-in-to-charge: X-threshold with an unbounded X.
Schedule plug_in(const Instance& instance);

enum class AlphaAveraging { Pooled, PerInstance };

/// ceil of the mean per-slot load across the calibration set.
int calibrate_alpha(const std::vector<Instance>& set, int T, AlphaAveraging mode = AlphaAveraging::Pooled);

/// ceil of the mean oracle peak. Throws if any oracle solve finds no schedule.
int calibrate_beta(const std::vector<Instance>& set, solver::Budget budget = {});

/// Same, from precomputed oracle peaks.
int calibrate_beta_from_peaks(const std::vector<int>& peaks);

}  // namespace occsp::heuristics
