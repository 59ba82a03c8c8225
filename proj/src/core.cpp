#include "occsp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace occsp {

void Horizon::validate() const {
  if (T < 1) throw Error("horizon: T must be >= 1");
  if (slot_minutes <= 0) throw Error("horizon: slot_minutes must be > 0");
}

std::optional<std::size_t> Instance::index_of(int id) const {
  // Generated instances carry ids 1..N in order; fall back to a scan otherwise.
  if (id >= 1 && static_cast<std::size_t>(id) <= evs.size() &&
      evs[static_cast<std::size_t>(id - 1)].id == id)
    return static_cast<std::size_t>(id - 1);
  for (std::size_t i = 0; i < evs.size(); ++i)
    if (evs[i].id == id) return i;
  return std::nullopt;
}

const Ev& Instance::ev(int id) const {
  auto idx = index_of(id);
  if (!idx) throw ScheduleMismatch("unknown EV id " + std::to_string(id));
  return evs[*idx];
}

long Instance::total_length() const {
  long sum = 0;
  for (const auto& e : evs) sum += e.l;
  return sum;
}

void Instance::validate() const {
  horizon.validate();
  if (cap < 0) throw Error("instance: cap must be non-negative");
  std::vector<int> ids;
  ids.reserve(evs.size());
  for (std::size_t i = 0; i < evs.size(); ++i) {
    const Ev& e = evs[i];
    if (!e.valid_in(horizon)) {
      std::ostringstream os;
      os << "instance: EV " << e.id << " violates 1 <= ar <= d <= T, 1 <= l <= d - ar + 1 (ar=" << e.ar
         << ", d=" << e.d << ", l=" << e.l << ", T=" << horizon.T << ")";
      throw Error(os.str());
    }
    if (i > 0) {
      const Ev& p = evs[i - 1];
      if (p.ar > e.ar || (p.ar == e.ar && p.id > e.id))
        throw Error("instance: EVs must be sorted by arrival, ties by id");
    }
    ids.push_back(e.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw Error("instance: duplicate EV id");
}

Instance make_instance(Horizon horizon, std::vector<Ev> evs, int cap, std::string scenario_id,
                       std::uint64_t seed) {
  std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
    return a.ar != b.ar ? a.ar < b.ar : a.id < b.id;
  });
  Instance inst;
  inst.horizon = std::move(horizon);
  inst.cap = cap > 0 ? cap : static_cast<int>(evs.size());
  inst.evs = std::move(evs);
  inst.scenario_id = std::move(scenario_id);
  inst.seed = seed;
  inst.validate();
  return inst;
}

long LoadProfile::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

int LoadProfile::peak() const { return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end()); }

int LoadProfile::valley() const {
  return counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
}

void LoadProfile::add_block(int start, int length, int delta) {
  for (int j = start; j < start + length; ++j) at(j) += delta;
}

LoadProfile load_of(const Schedule& schedule, const Instance& instance) {
  LoadProfile profile(instance.T());
  for (const auto& [id, start] : schedule.starts) {
    const Ev& e = instance.ev(id);
    int lo = std::max(start, 1);
    int hi = std::min(start + e.l - 1, instance.T());
    for (int j = lo; j <= hi; ++j) profile.at(j) += 1;
  }
  return profile;
}

int max_min(const LoadProfile& profile) { return profile.peak() - profile.valley(); }

double rmse(const LoadProfile& profile) {
  if (profile.counts.empty()) return 0.0;
  const double n = static_cast<double>(profile.counts.size());
  const double mean = static_cast<double>(profile.total()) / n;
  double ss = 0.0;
  for (int c : profile.counts) ss += (c - mean) * (c - mean);
  return std::sqrt(ss / n);
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::UnknownEv: return "unknown-ev";
    case ViolationKind::Window: return "window";
    case ViolationKind::Capacity: return "capacity";
    case ViolationKind::Missing: return "missing";
  }
  return "?";
}

bool Feasibility::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

Feasibility check_feasible(const Schedule& schedule, const Instance& instance, FeasibilityOptions options) {
  Feasibility verdict;
  const int T = instance.T();
  LoadProfile profile(T);
  // last EV (in id order) covering each slot, used to name capacity offenders
  std::vector<int> last_cover(static_cast<std::size_t>(T), 0);

  for (const auto& [id, start] : schedule.starts) {
    auto idx = instance.index_of(id);
    if (!idx) {
      verdict.violations.push_back({ViolationKind::UnknownEv, id, 0, "EV " + std::to_string(id) + " not in instance"});
      continue;
    }
    const Ev& e = instance.evs[*idx];
    const int end = start + e.l - 1;
    if (start < e.ar || end > e.d) {
      std::ostringstream os;
      os << "EV " << id << " occupies [" << start << ", " << end << "] outside window [" << e.ar << ", " << e.d
         << "]";
      verdict.violations.push_back({ViolationKind::Window, id, start < e.ar ? start : end, os.str()});
    }
    for (int j = std::max(start, 1); j <= std::min(end, T); ++j) {
      profile.at(j) += 1;
      last_cover[static_cast<std::size_t>(j - 1)] = id;
    }
  }
  for (int j = 1; j <= T; ++j) {
    if (profile.at(j) > instance.cap) {
      std::ostringstream os;
      os << "slot " << j << " carries " << profile.at(j) << " > cap " << instance.cap;
      verdict.violations.push_back({ViolationKind::Capacity, last_cover[static_cast<std::size_t>(j - 1)], j, os.str()});
    }
  }
  if (options.require_complete) {
    for (int id : unscheduled(schedule, instance))
      verdict.violations.push_back({ViolationKind::Missing, id, 0, "EV " + std::to_string(id) + " not scheduled"});
  }
  return verdict;
}

std::vector<int> unscheduled(const Schedule& schedule, const Instance& instance) {
  std::vector<int> out;
  for (const auto& e : instance.evs)
    if (!schedule.contains(e.id)) out.push_back(e.id);
  return out;
}

Schedule plug_in_schedule(const Instance& instance) {
  Schedule s;
  for (const auto& e : instance.evs) s.starts[e.id] = e.ar;
  return s;
}

}  // namespace occsp
