#pragma once

// Domain types shared by every part of the scheduler: the planning horizon,
// EV charging requests, instances, schedules, load profiles, and the metric
// and feasibility primitives defined over them.
//
// Slots are 1-indexed everywhere: a horizon of T slots spans {1, ..., T}.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace occsp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a schedule references an EV id that the instance does not
/// contain.
class ScheduleMismatch : public Error {
 public:
  using Error::Error;
};

struct Horizon {
  int T = 96;
  int slot_minutes = 15;
  std::string origin = "12:00";

  void validate() const;
};

/// One charging request: arrival slot, departure slot and block length.
struct Ev {
  int id = 0;
  int ar = 1;
  int d = 1;
  int l = 1;

  /// Last start slot that keeps the whole block inside [ar, d].
  int last_start() const { return d - l + 1; }
  int window() const { return d - ar + 1; }
  bool valid_in(const Horizon& h) const {
    return 1 <= ar && ar <= d && d <= h.T && 1 <= l && l <= window();
  }
};

struct Instance {
  Horizon horizon;
  std::vector<Ev> evs;  // sorted by arrival, ties by id
  int cap = 0;
  std::string scenario_id;
  std::uint64_t seed = 0;

  int T() const { return horizon.T; }
  std::size_t size() const { return evs.size(); }

  /// Index into `evs` for an EV id, or nullopt.
  std::optional<std::size_t> index_of(int id) const;
  const Ev& ev(int id) const;

  /// Total demanded slots, sum of l over all EVs.
  long total_length() const;

  /// Checks horizon, EV windows and arrival ordering; throws Error.
  void validate() const;
};

/// Builds an instance from raw EVs: sorts by (ar, id), sets cap = N when cap
/// is not positive, then validates.
Instance make_instance(Horizon horizon, std::vector<Ev> evs, int cap = 0,
                       std::string scenario_id = "custom", std::uint64_t seed = 0);

/// Start slot per EV id. A block starting at s occupies s, ..., s + l - 1.
struct Schedule {
  std::map<int, int> starts;

  bool contains(int id) const { return starts.count(id) != 0; }
  std::size_t size() const { return starts.size(); }
  bool operator==(const Schedule&) const = default;
};

/// Per-slot count of charging EVs; counts[j - 1] is the load of slot j.
struct LoadProfile {
  std::vector<int> counts;

  LoadProfile() = default;
  explicit LoadProfile(int T) : counts(static_cast<std::size_t>(T), 0) {}
  explicit LoadProfile(std::vector<int> c) : counts(std::move(c)) {}

  int T() const { return static_cast<int>(counts.size()); }
  int at(int slot) const { return counts[static_cast<std::size_t>(slot - 1)]; }
  int& at(int slot) { return counts[static_cast<std::size_t>(slot - 1)]; }
  long total() const;
  int peak() const;
  int valley() const;
  void add_block(int start, int length, int delta = 1);
  bool operator==(const LoadProfile&) const = default;
};

LoadProfile load_of(const Schedule& schedule, const Instance& instance);

/// Peak-to-valley spread over all slots, including empty ones.
int max_min(const LoadProfile& profile);

/// Root mean squared deviation of the profile from its own mean.
double rmse(const LoadProfile& profile);

enum class ViolationKind { UnknownEv, Window, Capacity, Missing };

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int ev_id = 0;
  int slot = 0;  // offending slot for capacity violations
  std::string message;
};

struct Feasibility {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
  bool has(ViolationKind kind) const;
};

struct FeasibilityOptions {
  /// Also reject schedules that leave some instance EV unplaced.
  bool require_complete = false;
};

Feasibility check_feasible(const Schedule& schedule, const Instance& instance,
                           FeasibilityOptions options = {});

/// EV ids of the instance that the schedule does not place.
std::vector<int> unscheduled(const Schedule& schedule, const Instance& instance);

/// Every EV starts at its arrival slot.
Schedule plug_in_schedule(const Instance& instance);

}  // namespace occsp
