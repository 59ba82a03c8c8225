#include "occsp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <set>
#include <sstream>

namespace occsp::solver {

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::FeasibleWithinGap: return "feasible-within-gap";
    case Status::Infeasible: return "infeasible";
    case Status::Timeout: return "timeout";
  }
  return "?";
}

namespace {

struct Item {
  int id, ar, last, d, l;
  int twin;  // index of the previous item with identical (ar, d, l), or -1
};

int min_overlap(const Item& it, int a, int b) {
  auto overlap = [&](int s) { return std::max(0, std::min(s + it.l - 1, b) - std::max(s, a) + 1); };
  return std::min(overlap(it.ar), overlap(it.last));
}

class BranchAndBound {
 public:
  BranchAndBound(const SolveRequest& req) : budget_(req.budget), T_(req.instance.T()), cap_(req.instance.cap) {
    const Instance& inst = req.instance;
    load_.assign(static_cast<std::size_t>(T_), 0);

    std::set<int> decide(req.decide.begin(), req.decide.end());
    for (const auto& [id, start] : req.fixed.starts) {
      if (decide.count(id)) throw Error("solve: EV " + std::to_string(id) + " is both fixed and decided");
      const Ev& e = inst.ev(id);
      if (start < e.ar || start + e.l - 1 > e.d) {
        fixed_infeasible_ = true;
        continue;
      }
      for (int j = start; j < start + e.l; ++j) load_[static_cast<std::size_t>(j - 1)] += 1;
    }
    for (int c : load_)
      if (c > cap_) fixed_infeasible_ = true;
    fixed_ = req.fixed;

    for (int id : decide) {
      const Ev& e = inst.ev(id);
      items_.push_back({e.id, e.ar, e.last_start(), e.d, e.l, -1});
    }
    for (std::size_t k = 0; k < items_.size(); ++k)
      for (std::size_t p = k; p-- > 0;)
        if (items_[p].ar == items_[k].ar && items_[p].d == items_[k].d && items_[p].l == items_[k].l) {
          items_[k].twin = static_cast<int>(p);
          break;
        }
    precompute();
    starts_.assign(items_.size(), 0);
  }

  SolveResult run() {
    SolveResult res;
    if (fixed_infeasible_) return res;
    if (items_.empty()) {
      res.schedule = fixed_;
      res.objective = spread();
      res.status = Status::Optimal;
      res.found = true;
      return res;
    }
    seed_incumbent();
    t0_ = std::chrono::steady_clock::now();
    if (feasible_within(0, target())) dfs(0);

    res.nodes_explored = nodes_;
    if (have_incumbent_) {
      res.found = true;
      res.objective = best_obj_;
      res.schedule = fixed_;
      for (std::size_t k = 0; k < items_.size(); ++k) res.schedule.starts[items_[k].id] = best_[k];
    }
    if (stopped_) res.status = Status::Timeout;
    else if (!have_incumbent_) res.status = Status::Infeasible;
    else res.status = budget_.gap_tolerance > 0 ? Status::FeasibleWithinGap : Status::Optimal;
    return res;
  }

 private:
  // Suffix tables: for the items k..m-1, how many can cover slot j, and the
  // minimum energy they must place inside each interval [a, b].
  void precompute() {
    const std::size_t m = items_.size();
    const std::size_t TT = static_cast<std::size_t>(T_) * static_cast<std::size_t>(T_);
    cover_.assign((m + 1) * static_cast<std::size_t>(T_), 0);
    energy_.assign((m + 1) * TT, 0);
    for (std::size_t k = m; k-- > 0;) {
      const Item& it = items_[k];
      for (int j = 1; j <= T_; ++j)
        cover_[k * T_ + (j - 1)] = cover_[(k + 1) * T_ + (j - 1)] + (j >= it.ar && j <= it.d ? 1 : 0);
      for (int a = 1; a <= T_; ++a)
        for (int b = a; b <= T_; ++b) {
          const std::size_t off = static_cast<std::size_t>(a - 1) * T_ + (b - 1);
          energy_[k * TT + off] = energy_[(k + 1) * TT + off] + min_overlap(it, a, b);
        }
    }
  }

  int spread() const {
    auto [lo, hi] = std::minmax_element(load_.begin(), load_.end());
    return *hi - *lo;
  }

  int target() const {
    if (!have_incumbent_) return std::numeric_limits<int>::max() / 4;
    if (budget_.gap_tolerance > 0) return best_obj_ - 1 - budget_.gap_tolerance;
    return from_search_ ? best_obj_ - 1 : best_obj_;
  }

  // Can items k.. be placed so that the final spread is <= target?
  bool feasible_within(std::size_t k, int target) {
    if (target < 0) return false;
    const std::size_t TT = static_cast<std::size_t>(T_) * static_cast<std::size_t>(T_);
    int ub_min = std::numeric_limits<int>::max();
    int peak = 0;
    for (int j = 0; j < T_; ++j) {
      ub_min = std::min(ub_min, load_[static_cast<std::size_t>(j)] + cover_[k * T_ + j]);
      peak = std::max(peak, load_[static_cast<std::size_t>(j)]);
    }
    long P = static_cast<long>(target) + ub_min;
    P = std::min<long>(P, cap_);
    if (peak > P) return false;
    if (k == items_.size()) return true;
    prefix_.assign(static_cast<std::size_t>(T_) + 1, 0);
    for (int j = 0; j < T_; ++j) prefix_[j + 1] = prefix_[j] + load_[static_cast<std::size_t>(j)];
    const int* energy = &energy_[k * TT];
    for (int a = 1; a <= T_; ++a) {
      const int* row = energy + static_cast<std::size_t>(a - 1) * T_;
      for (int b = a; b <= T_; ++b) {
        const long room = static_cast<long>(b - a + 1) * P - (prefix_[b] - prefix_[a - 1]);
        if (room < row[b - 1]) return false;
      }
    }
    return true;
  }

  bool out_of_budget() {
    if (budget_.node_limit && nodes_ >= *budget_.node_limit) return true;
    if (budget_.time_limit_s && (nodes_ & 1023) == 0) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
      if (el >= *budget_.time_limit_s) return true;
    }
    return false;
  }

  void dfs(std::size_t k) {
    if (stopped_) return;
    if (k == items_.size()) {
      const int obj = spread();
      const bool better = !have_incumbent_ || obj < best_obj_ || (obj == best_obj_ && !from_search_);
      if (better && obj <= target()) {
        best_obj_ = obj;
        best_ = starts_;
        have_incumbent_ = true;
        from_search_ = true;
      }
      return;
    }
    const Item& it = items_[k];
    const int lo = it.twin >= 0 ? std::max(it.ar, starts_[static_cast<std::size_t>(it.twin)]) : it.ar;
    for (int s = lo; s <= it.last; ++s) {
      bool fits = true;
      for (int j = s; j < s + it.l; ++j)
        if (load_[static_cast<std::size_t>(j - 1)] + 1 > cap_) {
          fits = false;
          break;
        }
      if (!fits) continue;
      ++nodes_;
      if (out_of_budget()) {
        stopped_ = true;
        return;
      }
      starts_[k] = s;
      for (int j = s; j < s + it.l; ++j) ++load_[static_cast<std::size_t>(j - 1)];
      if (feasible_within(k + 1, target())) dfs(k + 1);
      for (int j = s; j < s + it.l; ++j) --load_[static_cast<std::size_t>(j - 1)];
      if (stopped_) return;
    }
  }

  // Greedy shallowest-footprint placement; gives the search a first bound.
  void seed_incumbent() {
    std::vector<int> starts(items_.size());
    for (std::size_t k = 0; k < items_.size(); ++k) {
      const Item& it = items_[k];
      int best_s = -1, best_h = std::numeric_limits<int>::max();
      for (int s = it.ar; s <= it.last; ++s) {
        int h = 0;
        for (int j = s; j < s + it.l; ++j) h = std::max(h, load_[static_cast<std::size_t>(j - 1)]);
        if (h + 1 <= cap_ && h < best_h) {
          best_h = h;
          best_s = s;
        }
      }
      if (best_s < 0) {
        for (std::size_t p = 0; p < k; ++p)
          for (int j = starts[p]; j < starts[p] + items_[p].l; ++j) --load_[static_cast<std::size_t>(j - 1)];
        return;
      }
      starts[k] = best_s;
      for (int j = best_s; j < best_s + it.l; ++j) ++load_[static_cast<std::size_t>(j - 1)];
    }
    best_obj_ = spread();
    best_ = starts;
    have_incumbent_ = true;
    from_search_ = false;
    for (std::size_t k = 0; k < items_.size(); ++k)
      for (int j = starts[k]; j < starts[k] + items_[k].l; ++j) --load_[static_cast<std::size_t>(j - 1)];
  }

  Budget budget_;
  int T_;
  int cap_;
  bool fixed_infeasible_ = false;
  Schedule fixed_;
  std::vector<Item> items_;
  std::vector<int> load_;
  std::vector<int> cover_;
  std::vector<int> energy_;
  std::vector<long> prefix_;
  std::vector<int> starts_;
  std::vector<int> best_;
  int best_obj_ = 0;
  bool have_incumbent_ = false;
  bool from_search_ = false;
  bool stopped_ = false;
  long nodes_ = 0;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

SolveResult solve_completion(const SolveRequest& request) {
  BranchAndBound bnb(request);
  return bnb.run();
}

SolveResult solve_oracle(const Instance& instance, Budget budget) {
  SolveRequest req{instance, {}, {}, budget};
  for (const auto& e : instance.evs) req.decide.push_back(e.id);
  return solve_completion(req);
}

Schedule reopt_policy(const Instance& instance, Budget per_step) {
  SolveRequest req{instance, {}, {}, per_step};
  for (const auto& e : instance.evs) {
    req.decide = {e.id};
    SolveResult r = solve_completion(req);
    if (!r.found) continue;
    req.fixed.starts[e.id] = r.schedule.starts.at(e.id);
  }
  return req.fixed;
}

namespace {

// Accumulates "+ coef var" terms and wraps long rows.
class Row {
 public:
  explicit Row(std::string name) { os_ << " " << name << ":"; }
  Row& term(int coef, const std::string& var) {
    if (terms_ > 0 && terms_ % 8 == 0) os_ << "\n   ";
    os_ << (coef < 0 ? " - " : (terms_ == 0 ? " " : " + "));
    if (std::abs(coef) != 1) os_ << std::abs(coef) << " ";
    os_ << var;
    ++terms_;
    return *this;
  }
  std::string finish(const std::string& sense, long rhs) {
    if (terms_ == 0) os_ << " 0 x_dummy";
    os_ << " " << sense << " " << rhs << "\n";
    return os_.str();
  }

 private:
  std::ostringstream os_;
  int terms_ = 0;
};

std::string xv(int i, int j) { return "x_" + std::to_string(i) + "_" + std::to_string(j); }
std::string zv(int i, int j) { return "z_" + std::to_string(i) + "_" + std::to_string(j); }
std::string pv(int j) { return "p_" + std::to_string(j); }

}  // namespace

std::string export_milp(const Instance& instance, const Schedule& fixed) {
  const int T = instance.T();
  std::ostringstream out;
  out << "\\ Peak-to-valley EV charging schedule, " << instance.size() << " EVs, " << T << " slots\n";
  out << "Minimize\n obj: pmax - pmin\nSubject To\n";
  for (int j = 1; j <= T; ++j) out << Row("c2_" + std::to_string(j)).term(1, "pmax").term(-1, pv(j)).finish(">=", 0);
  for (int j = 1; j <= T; ++j) out << Row("c3_" + std::to_string(j)).term(1, "pmin").term(-1, pv(j)).finish("<=", 0);
  for (int j = 1; j <= T; ++j) {
    Row r("c4_" + std::to_string(j));
    r.term(1, pv(j));
    for (const auto& e : instance.evs) r.term(-1, xv(e.id, j));
    out << r.finish("=", 0);
  }
  for (int j = 1; j <= T; ++j) out << Row("c5_" + std::to_string(j)).term(1, pv(j)).finish("<=", instance.cap);
  for (const auto& e : instance.evs) {
    const std::string i = std::to_string(e.id);
    for (int j = 1; j < e.ar; ++j) out << Row("c6_" + i + "_" + std::to_string(j)).term(1, xv(e.id, j)).finish("=", 0);
    for (int j = e.d + 1; j <= T; ++j)
      out << Row("c7_" + i + "_" + std::to_string(j)).term(1, xv(e.id, j)).finish("=", 0);
    // start-slot sum runs to the last start that keeps the block inside [ar, d]
    Row r8("c8_" + i);
    for (int j = e.ar; j <= e.last_start(); ++j) r8.term(1, zv(e.id, j));
    out << r8.finish("=", 1);
    for (int j = 1; j < e.ar; ++j) out << Row("c9_" + i + "_" + std::to_string(j)).term(1, zv(e.id, j)).finish("=", 0);
    for (int j = e.d + 1; j <= T; ++j)
      out << Row("c10_" + i + "_" + std::to_string(j)).term(1, zv(e.id, j)).finish("=", 0);
    for (int j = 1; j <= T; ++j) {
      Row r("c11_" + i + "_" + std::to_string(j));
      r.term(j, zv(e.id, j));
      for (int jp = 1; jp < j; ++jp) r.term(1, xv(e.id, jp));
      out << r.finish("<=", j);
    }
    for (int j = 2; j <= T; ++j)
      out << Row("c12_" + i + "_" + std::to_string(j))
                 .term(1, zv(e.id, j))
                 .term(-1, xv(e.id, j))
                 .term(1, xv(e.id, j - 1))
                 .finish(">=", 0);
    out << Row("c13_" + i).term(1, zv(e.id, 1)).term(-1, xv(e.id, 1)).finish(">=", 0);
    Row r14("c14_" + i);
    for (int j = 1; j <= T; ++j) r14.term(1, xv(e.id, j));
    out << r14.finish("=", e.l);
  }
  for (const auto& [id, start] : fixed.starts) {
    const Ev& e = instance.ev(id);
    const std::string i = std::to_string(id);
    for (int j = 1; j <= T; ++j) {
      const int xbar = j >= start && j < start + e.l ? 1 : 0;
      out << Row("fix_x_" + i + "_" + std::to_string(j)).term(1, xv(id, j)).finish("=", xbar);
    }
    for (int j = 1; j <= T; ++j)
      out << Row("fix_z_" + i + "_" + std::to_string(j)).term(1, zv(id, j)).finish("=", j == start ? 1 : 0);
  }
  out << "Bounds\n pmax >= 0\n pmin >= 0\n";
  for (int j = 1; j <= T; ++j) out << " " << pv(j) << " >= 0\n";
  out << "Binaries\n";
  for (const auto& e : instance.evs) {
    for (int j = 1; j <= T; ++j) out << " " << xv(e.id, j) << "\n";
    for (int j = 1; j <= T; ++j) out << " " << zv(e.id, j) << "\n";
  }
  out << "End\n";
  return out.str();
}

}  // namespace occsp::solver
