// JSON-in/JSON-out bindings; the Python package converts to and from dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "occsp/analysis.hpp"
#include "occsp/engine.hpp"
#include "occsp/heuristics.hpp"
#include "occsp/instgen.hpp"
#include "occsp/io.hpp"
#include "occsp/policies.hpp"
#include "occsp/service.hpp"
#include "occsp/solver.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace occsp;

namespace {

Instance instance_of(const std::string& text) { return io::instance_from_json(json::parse(text)); }

solver::Budget budget_of(std::optional<double> time_limit, std::optional<long> node_limit) {
  solver::Budget b;
  b.time_limit_s = time_limit;
  b.node_limit = node_limit;
  return b;
}

std::string generate(const std::string& scenario, std::uint64_t seed) {
  return io::canonical(io::to_json(instgen::sample_instance(service::scenario_from_json(json::parse(scenario)), seed)));
}

std::string solve(const std::string& instance, const std::string& fixed, std::optional<std::vector<int>> decide,
                  std::optional<double> time_limit, std::optional<long> node_limit) {
  solver::SolveRequest req;
  req.instance = instance_of(instance);
  req.fixed = io::schedule_from_json(json::parse(fixed));
  if (decide) {
    req.decide = *decide;
  } else {
    for (const auto& e : req.instance.evs)
      if (!req.fixed.contains(e.id)) req.decide.push_back(e.id);
  }
  req.budget = budget_of(time_limit, node_limit);
  solver::SolveResult r;
  {
    py::gil_scoped_release nogil;
    r = solver::solve_completion(req);
  }
  json out = {{"status", solver::to_string(r.status)}, {"found", r.found}, {"nodes", r.nodes_explored}};
  if (r.found) {
    out["schedule"] = io::to_json(r.schedule);
    out["objective"] = r.objective;
  }
  return out.dump();
}

std::string run_policy(const std::string& instance, const std::string& policy, const std::vector<std::string>& calibration,
                       std::optional<double> time_limit, std::optional<long> node_limit, std::uint64_t seed) {
  const Instance inst = instance_of(instance);
  service::PolicyContext ctx;
  ctx.budget = budget_of(time_limit, node_limit);
  ctx.seed = seed;
  for (const auto& c : calibration) ctx.calibration_set.push_back(instance_of(c));
  const auto p = service::make_policy(policy, ctx);
  py::gil_scoped_release nogil;
  return io::to_json(p.run(inst)).dump();
}

std::string metrics(const std::string& instance, const std::string& schedule) {
  const Instance inst = instance_of(instance);
  const Schedule s = io::schedule_from_json(json::parse(schedule));
  const auto f = check_feasible(s, inst);
  json violations = json::array();
  for (const auto& v : f.violations) violations.push_back(v.message);
  const auto prof = load_of(s, inst);
  return json{{"feasible", f.ok()},
              {"violations", violations},
              {"load", prof.counts},
              {"max_min", max_min(prof)},
              {"rmse", rmse(prof)},
              {"peak", prof.peak()},
              {"unscheduled", unscheduled(s, inst)}}
      .dump();
}

std::string replay(const std::string& instance, const std::vector<std::string>& actions) {
  std::vector<engine::Action> acts;
  for (const auto& a : actions) acts.push_back(engine::action_from_string(a));
  const auto r = engine::replay(instance_of(instance), acts);
  json trace = json::array();
  for (const auto& t : r.trace) trace.push_back(engine::to_json(t));
  return json{{"schedule", io::to_json(r.final_state.committed)},
              {"score", r.score},
              {"terminal", r.final_state.terminal},
              {"load", r.final_state.profile.counts},
              {"trace", trace}}
      .dump();
}

std::vector<std::string> actions_for_schedule(const std::string& instance, const std::string& schedule) {
  std::vector<std::string> out;
  for (auto a : engine::actions_for_schedule(instance_of(instance), io::schedule_from_json(json::parse(schedule))))
    out.push_back(engine::to_string(a));
  return out;
}

std::string train_sl(const std::string& scenario, const std::string& variant, std::uint64_t seed, int episodes,
                     const std::string& train, const std::string& arch) {
  const auto spec = service::scenario_from_json(json::parse(scenario));
  const auto v = policies::variant_from_string(variant);
  const auto cfg = policies::train_config_from_json(json::parse(train));
  const auto a = policies::arch_from_json(json::parse(arch));
  py::gil_scoped_release nogil;
  const auto enc = policies::encoder_for(spec);
  std::vector<Instance> insts;
  for (int k = 0; k < episodes; ++k)
    insts.push_back(instgen::sample_instance(spec, hash_combine(hash_combine(seed, 0xe0), static_cast<std::uint64_t>(k))));
  const auto demos = policies::expert_demonstrations(insts, v, enc).demos;
  auto r = policies::train_sl(demos, v, enc, cfg, seed, a);
  return json{{"model", policies::to_json(r.model)}, {"log", policies::to_json(r.log)}, {"samples", demos.size()}}.dump();
}

std::string rollout(const std::string& model, const std::string& instance) {
  auto m = policies::model_from_json(json::parse(model));
  const Instance inst = instance_of(instance);
  py::gil_scoped_release nogil;
  const auto r = policies::rollout(m, inst);
  json trace = json::array();
  std::vector<std::string> actions;
  for (const auto& t : r.trace) trace.push_back(engine::to_json(t));
  for (auto a : r.actions) actions.push_back(engine::to_string(a));
  return json{{"schedule", io::to_json(r.schedule)}, {"score", r.score}, {"actions", actions}, {"trace", trace}}.dump();
}

std::string economics(double baseline_peak, double policy_peak, double u_kw, double rate, double feeders) {
  analysis::EconParams p;
  p.u_kw = u_kw;
  p.rate = rate;
  p.feeders = feeders;
  return analysis::to_json(analysis::avoided_value_from_peaks(baseline_peak, policy_peak, p)).dump();
}

// Stateful game session mirroring the HTTP episode API.
class Episode {
 public:
  explicit Episode(const std::string& instance)
      : instance_(std::make_shared<const Instance>(instance_of(instance))), state_(engine::reset(instance_)) {}

  std::string step(const std::string& action) {
    auto r = engine::step(state_, engine::action_from_string(action));
    if (r.reward) score_ += *r.reward;
    json out = {{"committed", r.committed}, {"reward", r.reward ? json(*r.reward) : json(nullptr)}};
    state_ = std::move(r.state);
    out["state"] = json::parse(state());
    return out.dump();
  }

  std::string state() const {
    json j = {{"terminal", state_.terminal},
              {"load", state_.profile.counts},
              {"schedule", io::to_json(state_.committed)},
              {"unplaced", state_.unplaced},
              {"score", score_}};
    if (!state_.terminal) {
      const Ev& e = state_.active();
      j["active"] = {{"id", e.id}, {"ar", e.ar}, {"d", e.d}, {"l", e.l}};
      j["candidate"] = state_.candidate;
      j["budget_left"] = state_.budget_left;
      std::vector<std::string> legal;
      for (auto a : engine::legal_actions(state_)) legal.push_back(engine::to_string(a));
      j["legal_actions"] = legal;
    }
    return j.dump();
  }

  std::vector<int> image() const {
    const auto img = engine::render_image(state_);
    return {img.pixels.begin(), img.pixels.end()};
  }

  std::vector<int> image_shape() const {
    const auto img = engine::render_image(state_);
    return {img.channels, img.rows, img.cols};
  }

 private:
  std::shared_ptr<const Instance> instance_;
  engine::EpisodeState state_;
  int score_ = 0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the occsp package; arguments and results are JSON text.";

  py::register_exception<Error>(m, "OccspError", PyExc_ValueError);

  m.def("generate", &generate, py::arg("scenario"), py::arg("seed"));
  m.def("solve", &solve, py::arg("instance"), py::arg("fixed") = "{}", py::arg("decide") = std::nullopt,
        py::arg("time_limit") = std::nullopt, py::arg("node_limit") = std::nullopt);
  m.def("run_policy", &run_policy, py::arg("instance"), py::arg("policy"),
        py::arg("calibration") = std::vector<std::string>{}, py::arg("time_limit") = std::nullopt,
        py::arg("node_limit") = std::nullopt, py::arg("seed") = 0);
  m.def("metrics", &metrics, py::arg("instance"), py::arg("schedule"));
  m.def("export_lp", [](const std::string& inst, const std::string& fixed) {
    return solver::export_milp(instance_of(inst), io::schedule_from_json(json::parse(fixed)));
  }, py::arg("instance"), py::arg("fixed") = "{}");
  m.def("replay", &replay, py::arg("instance"), py::arg("actions"));
  m.def("actions_for_schedule", &actions_for_schedule, py::arg("instance"), py::arg("schedule"));
  m.def("train_sl", &train_sl, py::arg("scenario"), py::arg("variant"), py::arg("seed"), py::arg("episodes"),
        py::arg("train") = "{}", py::arg("arch") = "{}");
  m.def("rollout", &rollout, py::arg("model"), py::arg("instance"));
  m.def("economics", &economics, py::arg("baseline_peak"), py::arg("policy_peak"), py::arg("u_kw") = 7.0,
        py::arg("rate") = 164.0, py::arg("feeders") = 700.0);
  m.def("gma_calibration", [] { return analysis::to_json(analysis::gma_calibration()).dump(); });
  m.def("mlp_param_count", &analysis::mlp_param_count, py::arg("d"), py::arg("m"), py::arg("layers"),
        py::arg("actions"));
  m.def("theorem_threshold", &analysis::theorem_threshold, py::arg("n"), py::arg("S"), py::arg("M"), py::arg("H"));
  m.def("exact_threshold", &analysis::exact_threshold, py::arg("n"), py::arg("S"), py::arg("M"), py::arg("H"));
  m.def("policies", &service::known_policies);
  m.def("serve", [](const std::string& host, int port, std::optional<std::string> data_dir) {
    service::StoreOptions opts;
    if (data_dir) opts.data_dir = *data_dir;
    service::SessionStore store(opts);
    store.load_persisted();
    py::gil_scoped_release nogil;
    service::serve(store, host, port);
  }, py::arg("host") = "127.0.0.1", py::arg("port") = 8080, py::arg("data_dir") = std::nullopt);

  py::class_<Episode>(m, "Episode")
      .def(py::init<const std::string&>(), py::arg("instance"))
      .def("step", &Episode::step, py::arg("action"))
      .def("state", &Episode::state)
      .def("image", &Episode::image)
      .def("image_shape", &Episode::image_shape);
}
