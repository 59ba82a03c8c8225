#include "occsp/heuristics.hpp"

#include <algorithm>
#include <deque>

namespace occsp::heuristics {

std::optional<int> row_fill_start(const LoadProfile& profile, const Ev& ev, int cap, int min_start) {
  const int lo = std::max(ev.ar, min_start);
  const int hi = ev.last_start();
  if (lo > hi) return std::nullopt;
  // sliding-window maximum over the footprint [s, s + l - 1]
  std::deque<int> window;
  int best_start = 0;
  int best_level = std::numeric_limits<int>::max();
  for (int j = lo; j <= hi + ev.l - 1; ++j) {
    while (!window.empty() && profile.at(window.back()) <= profile.at(j)) window.pop_back();
    window.push_back(j);
    const int s = j - ev.l + 1;
    if (s < lo) continue;
    while (window.front() < s) window.pop_front();
    const int level = profile.at(window.front());
    if (level < best_level) {
      best_level = level;
      best_start = s;
    }
  }
  if (best_level + 1 > cap) return std::nullopt;
  return best_start;
}

Schedule row_filling(const Instance& instance) { return row_filling(instance, LoadProfile(instance.T())); }

Schedule row_filling(const Instance& instance, LoadProfile profile) {
  Schedule out;
  for (const auto& e : instance.evs) {
    auto s = row_fill_start(profile, e, instance.cap);
    if (!s) continue;
    out.starts[e.id] = *s;
    profile.add_block(*s, e.l);
  }
  return out;
}

std::optional<int> threshold_start(const LoadProfile& profile, const Ev& ev, int cap, int X) {
  bool immediate = X == kNoThreshold || profile.at(ev.ar) + 1 <= X;
  if (immediate)
    for (int j = ev.ar; j < ev.ar + ev.l; ++j)
      if (profile.at(j) + 1 > cap) {
        immediate = false;
        break;
      }
  if (immediate) return ev.ar;
  return row_fill_start(profile, ev, cap, ev.ar);
}

Schedule x_threshold(const Instance& instance, int X) { return x_threshold(instance, X, LoadProfile(instance.T())); }

Schedule x_threshold(const Instance& instance, int X, LoadProfile profile) {
  if (X < 0) throw Error("x_threshold: X must be >= 0");
  // The instance is sorted by (ar, id), so walking it is the slot sweep with
  // simultaneous arrivals in id order.
  Schedule out;
  for (const auto& e : instance.evs) {
    auto s = threshold_start(profile, e, instance.cap, X);
    if (!s) continue;
    out.starts[e.id] = *s;
    profile.add_block(*s, e.l);
  }
  return out;
}

Schedule x_threshold(const Instance& instance, const ThresholdConfig& config) {
  switch (config.calibration) {
    case Calibration::Explicit: return x_threshold(instance, config.X);
    case Calibration::Alpha: return x_threshold(instance, calibrate_alpha(config.calibration_set, instance.T()));
    case Calibration::Beta: return x_threshold(instance, calibrate_beta(config.calibration_set));
  }
  return {};
}

Schedule plug_in(const Instance& instance) { return x_threshold(instance, kNoThreshold); }

int calibrate_alpha(const std::vector<Instance>& set, int T, AlphaAveraging mode) {
  if (set.empty()) throw Error("calibrate_alpha: empty calibration set");
  if (T < 1) throw Error("calibrate_alpha: T must be >= 1");
  const long n = static_cast<long>(set.size());
  if (mode == AlphaAveraging::Pooled) {
    long total = 0;
    for (const auto& inst : set) total += inst.total_length();
    return static_cast<int>((total + n * T - 1) / (n * T));
  }
  long sum_ceils = 0;
  for (const auto& inst : set) sum_ceils += (inst.total_length() + T - 1) / T;
  return static_cast<int>((sum_ceils + n - 1) / n);
}

int calibrate_beta_from_peaks(const std::vector<int>& peaks) {
  if (peaks.empty()) throw Error("calibrate_beta: empty calibration set");
  long total = 0;
  for (int p : peaks) total += p;
  const long n = static_cast<long>(peaks.size());
  return static_cast<int>((total + n - 1) / n);
}

int calibrate_beta(const std::vector<Instance>& set, solver::Budget budget) {
  std::vector<int> peaks;
  for (const auto& inst : set) {
    auto r = solver::solve_oracle(inst, budget);
    if (!r.found) throw Error("calibrate_beta: oracle found no schedule for instance seed " + std::to_string(inst.seed));
    peaks.push_back(load_of(r.schedule, inst).peak());
  }
  return calibrate_beta_from_peaks(peaks);
}

}  // namespace occsp::heuristics
