#pragma once

// Exact peak-to-valley minimisation over one start slot per EV.
//
// The search is a depth-first branch-and-bound in EV-id order that tries
// start slots in ascending order, so among all optimal schedules it returns
// the lexicographically smallest start vector. Nodes are pruned with an
// interval energy bound: every EV must put at least its minimum possible
// overlap into each slot interval, which forces a minimum peak there.

#include <optional>
#include <string>
#include <vector>

#include "occsp/core.hpp"

namespace occsp::solver {

enum class Status { Optimal, FeasibleWithinGap, Infeasible, Timeout };

std::string to_string(Status s);

struct Budget {
  std::optional<double> time_limit_s;
  std::optional<long> node_limit;
  /// Accept an incumbent once no schedule can beat it by more than this.
  int gap_tolerance = 0;
};

struct SolveRequest {
  Instance instance;
  Schedule fixed;           // committed starts, pinned
  std::vector<int> decide;  // EV ids to optimise; EVs in neither set are ignored
  Budget budget;
};

struct SolveResult {
  Schedule schedule;  // over fixed and decide
  int objective = 0;  // peak minus valley of load_of(schedule)
  Status status = Status::Infeasible;
  long nodes_explored = 0;
  bool found = false;  // a schedule is attached (always true for Optimal)
};

/// Full-information optimum over every EV of the instance.
SolveResult solve_oracle(const Instance& instance, Budget budget = {});

/// Optimises `decide` with `fixed` held in place.
SolveResult solve_completion(const SolveRequest& request);

/// Online re-optimisation: EVs in arrival order, each placed optimally given
/// the already-committed ones, ignoring EVs that have not arrived. EVs with
/// no cap-feasible start are left out of the schedule.
Schedule reopt_policy(const Instance& instance, Budget per_step = {});

/// Writes the full mixed-integer model in CPLEX LP text format, with fixing
/// equalities for every EV in `fixed`. Row names carry the constraint family:
/// c2_j ... c14_i, fix_x_i_j, fix_z_i_j.
std::string export_milp(const Instance& instance, const Schedule& fixed = {});

}  // namespace occsp::solver
