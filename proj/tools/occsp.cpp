// occsp command-line tool.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "occsp/analysis.hpp"
#include "occsp/heuristics.hpp"
#include "occsp/instgen.hpp"
#include "occsp/io.hpp"
#include "occsp/policies.hpp"
#include "occsp/service.hpp"
#include "occsp/solver.hpp"

using namespace occsp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ScenarioFlags {
  std::string id;
  std::optional<int> T;
  std::optional<int> n_evs;
  std::optional<double> band;
  std::string targets = "mean,std,count";
  std::uint64_t perturb_seed = 0;

  void add(CLI::App* app) {
    app->add_option("--scenario", id, "Scenario id (1-4) or scenario JSON file");
    app->add_option("--T", T, "Horizon length for a rescaled desk scenario");
    app->add_option("--n-evs", n_evs, "EV count for a rescaled desk scenario");
    app->add_option("--perturb-band", band, "Perturbation band in [0, 1)");
    app->add_option("--perturb-targets", targets, "Perturbed parameters: mean,std,count");
    app->add_option("--perturb-seed", perturb_seed, "Perturbation seed");
  }

  bool given() const { return !id.empty(); }

  json to_json() const {
    json j;
    if (!id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isdigit(c); })) {
      j = {{"id", std::stoi(id)}};
    } else {
      try {
        j = json::parse(io::read_text(id));
      } catch (const json::parse_error& e) {
        throw Error("scenario file " + id + ": " + e.what());
      }
      if (j.is_number_integer()) j = {{"id", j.get<int>()}};
    }
    if (T) j["T"] = *T;
    if (n_evs) j["n_evs"] = *n_evs;
    if (band) j["perturbation"] = {{"band", *band}, {"targets", targets}, {"seed", perturb_seed}};
    return j;
  }
};

struct BudgetFlags {
  std::optional<double> time_limit;
  std::optional<long> node_limit;
  int gap = 0;

  void add(CLI::App* app) {
    app->add_option("--time-limit", time_limit, "Solver time limit in seconds");
    app->add_option("--node-limit", node_limit, "Solver node limit");
    app->add_option("--gap", gap, "Accepted objective gap");
  }

  solver::Budget budget() const { return {time_limit, node_limit, gap}; }
  bool given() const { return time_limit || node_limit || gap != 0; }
};

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<Instance> calibration_set(const instgen::ScenarioSpec& spec, std::uint64_t seed, int count) {
  std::vector<Instance> out;
  for (int k = 0; k < count; ++k)
    out.push_back(instgen::sample_instance(spec, hash_combine(hash_combine(seed, 0xca1b), static_cast<std::uint64_t>(k))));
  return out;
}

// Config file first, then explicit flags on top.
service::RunConfig resolve_config(const std::string& config_path, const ScenarioFlags& sf, const BudgetFlags& bf) {
  json j = json::object();
  if (!config_path.empty()) {
    try {
      j = json::parse(io::read_text(config_path));
    } catch (const json::parse_error& e) {
      throw Error("config " + config_path + ": " + e.what());
    }
  }
  if (sf.given()) j["scenario"] = sf.to_json();
  if (!j.contains("scenario")) throw Error("no scenario: pass --scenario or a config file with 'scenario'");
  auto cfg = service::run_config_from_json(j);
  if (bf.given()) cfg.budget = bf.budget();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online EV charging scheduling lab"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample benchmark instances");
  ScenarioFlags gen_sf;
  gen_sf.add(gen);
  std::uint64_t gen_seed = 0;
  int gen_count = 1;
  std::string gen_out;
  gen->add_option("--seed,--seed-base", gen_seed, "First seed");
  gen->add_option("--count", gen_count, "Number of instances (seeds seed..seed+count-1)")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output file (count 1) or directory")->required();

  // solve
  auto* sol = app.add_subcommand("solve", "Exact peak-to-valley optimum");
  std::string sol_inst, sol_out, sol_fixed, sol_lp, sol_mode = "oracle";
  std::vector<int> sol_decide;
  BudgetFlags sol_bf;
  sol->add_option("--instance", sol_inst, "Instance file")->required()->check(CLI::ExistingFile);
  sol->add_option("--fixed", sol_fixed, "Schedule file with pinned starts")->check(CLI::ExistingFile);
  sol->add_option("--decide", sol_decide, "EV ids to optimise (default: all unpinned)");
  sol->add_option("--mode", sol_mode, "oracle | reopt")->check(CLI::IsMember({"oracle", "reopt"}));
  sol->add_option("--out", sol_out, "Schedule output file");
  sol->add_option("--export-lp", sol_lp, "Also write the MILP in LP format");
  sol_bf.add(sol);

  // heuristic
  auto* heu = app.add_subcommand("heuristic", "Run a rule-based policy");
  std::string heu_inst, heu_out, heu_policy = "rowfill";
  std::vector<std::string> heu_calib;
  BudgetFlags heu_bf;
  heu->add_option("--instance", heu_inst, "Instance file")->required()->check(CLI::ExistingFile);
  heu->add_option("--policy", heu_policy, "rowfill | plugin | reopt | alpha | beta | threshold:<X> | random");
  heu->add_option("--calib,--calibration", heu_calib, "Instance files or directories for alpha/beta calibration")
      ->check(CLI::ExistingPath);
  heu->add_option("--out", heu_out, "Schedule output file");
  heu_bf.add(heu);

  // train-sl
  auto* tsl = app.add_subcommand("train-sl", "Supervised training on oracle demonstrations");
  std::string tsl_config, tsl_out, tsl_variant, tsl_log, tsl_dataset_out, tsl_dataset_in;
  std::uint64_t tsl_seed = 0;
  std::optional<int> tsl_episodes, tsl_batch, tsl_iters;
  ScenarioFlags tsl_sf;
  BudgetFlags tsl_bf;
  tsl->add_option("--config", tsl_config, "Run config file")->check(CLI::ExistingFile);
  tsl_sf.add(tsl);
  tsl_bf.add(tsl);
  tsl->add_option("--variant", tsl_variant, "I2M | I2S | V2M | V2S");
  tsl->add_option("--seed", tsl_seed, "Seed");
  tsl->add_option("--episodes", tsl_episodes, "Expert episodes (default: dagger.eta0)");
  tsl->add_option("--batch-size", tsl_batch, "Minibatch size");
  tsl->add_option("--max-iterations", tsl_iters, "Training passes");
  tsl->add_option("--dataset", tsl_dataset_in, "Train on this dataset instead of fresh demonstrations")
      ->check(CLI::ExistingFile);
  tsl->add_option("--dataset-out", tsl_dataset_out, "Write the demonstration dataset");
  tsl->add_option("--log-out", tsl_log, "Write the training log");
  tsl->add_option("--out", tsl_out, "Model output file")->required();

  // dagger
  auto* dag = app.add_subcommand("dagger", "DAgger training");
  std::string dag_config, dag_out, dag_variant, dag_hist;
  std::uint64_t dag_seed = 0;
  std::optional<int> dag_batch, dag_outer;
  ScenarioFlags dag_sf;
  BudgetFlags dag_bf;
  dag->add_option("--config", dag_config, "Run config file")->check(CLI::ExistingFile);
  dag_sf.add(dag);
  dag_bf.add(dag);
  dag->add_option("--variant", dag_variant, "I2M | I2S | V2M | V2S");
  dag->add_option("--seed", dag_seed, "Seed");
  dag->add_option("--batch-size", dag_batch, "Minibatch size");
  dag->add_option("--max-outer", dag_outer, "Outer iteration cap");
  dag->add_option("--history-out", dag_hist, "Write the iteration history");
  dag->add_option("--out", dag_out, "Model output file")->required();

  // rollout
  auto* rol = app.add_subcommand("rollout", "Play a trained policy on an instance");
  std::string rol_model, rol_inst, rol_out, rol_trace;
  rol->add_option("--model", rol_model, "Model file")->required()->check(CLI::ExistingFile);
  rol->add_option("--instance", rol_inst, "Instance file")->required()->check(CLI::ExistingFile);
  rol->add_option("--out", rol_out, "Schedule output file");
  rol->add_option("--trace-out", rol_trace, "Trace output file (JSON lines)");

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "Compare policies over seeded instances");
  std::string evl_config, evl_out;
  std::vector<std::string> evl_policies;
  std::optional<int> evl_count;
  std::uint64_t evl_seed = 0;
  ScenarioFlags evl_sf;
  BudgetFlags evl_bf;
  evl->add_option("--config", evl_config, "Run config file")->check(CLI::ExistingFile);
  evl_sf.add(evl);
  evl_bf.add(evl);
  evl->add_option("--policy", evl_policies, "Policy names (repeatable)");
  evl->add_option("--count", evl_count, "Instances (seeds seed..seed+count-1)");
  evl->add_option("--seed", evl_seed, "First seed when --count is given");
  evl->add_option("--out-dir", evl_out, "Directory for records.csv and report.json");

  // economics
  auto* eco = app.add_subcommand("economics", "Avoided distribution capacity value");
  std::optional<double> eco_base, eco_pol;
  std::string eco_report, eco_policy;
  analysis::EconParams eco_params;
  bool eco_gma = false;
  eco->add_option("--baseline-peak", eco_base, "Mean baseline peak (EVs)");
  eco->add_option("--policy-peak", eco_pol, "Mean policy peak (EVs)");
  eco->add_option("--report", eco_report, "report.json from evaluate")->check(CLI::ExistingFile);
  eco->add_option("--policy", eco_policy, "Policy name in the report");
  eco->add_option("--baseline", eco_params.baseline_policy, "Baseline policy name in the report");
  eco->add_option("--u-kw", eco_params.u_kw, "Charging power per EV (kW)");
  eco->add_option("--rate", eco_params.rate, "Avoided capacity cost (CAD per kW-year)");
  eco->add_option("--feeders", eco_params.feeders, "Feeder count");
  eco->add_flag("--gma", eco_gma, "Print the regional calibration chain");

  // theory
  auto* thy = app.add_subcommand("theory", "Sample-complexity calculators");
  double thy_n = 200, thy_S = 96, thy_M = 3, thy_H = 1, thy_delta = 0.05;
  std::optional<double> thy_dM, thy_dS;
  std::vector<long> thy_mlp;
  thy->add_option("--n", thy_n, "Training examples");
  thy->add_option("--S", thy_S, "Schedule classes");
  thy->add_option("--M", thy_M, "Movement classes");
  thy->add_option("--H", thy_H, "Decisions per block");
  thy->add_option("--delta", thy_delta, "Confidence parameter");
  thy->add_option("--dM", thy_dM, "Movement model dimension");
  thy->add_option("--dS", thy_dS, "Schedule model dimension");
  thy->add_option("--mlp", thy_mlp, "d m layers actions: MLP weight count")->expected(4);

  // serve
  auto* srv = app.add_subcommand("serve", "HTTP episode service");
  std::string srv_host = "127.0.0.1", srv_data;
  int srv_port = 8080;
  double srv_budget = 10.0;
  srv->add_option("--host", srv_host, "Bind address");
  srv->add_option("--port", srv_port, "Port");
  srv->add_option("--data-dir", srv_data, "Session directory (default: $OCCSP_DATA_DIR)");
  srv->add_option("--compare-time-limit", srv_budget, "Oracle time limit for compare (s)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (!gen_sf.given()) throw Error("generate: --scenario is required");
      const auto spec = service::scenario_from_json(gen_sf.to_json());
      if (gen_count == 1 && fs::path(gen_out).has_extension()) {
        io::save_instance(gen_out, instgen::sample_instance(spec, gen_seed));
      } else {
        fs::create_directories(gen_out);
        for (int k = 0; k < gen_count; ++k) {
          const auto seed = gen_seed + static_cast<std::uint64_t>(k);
          io::save_instance(fs::path(gen_out) / (spec.id + "_" + std::to_string(seed) + ".json"),
                            instgen::sample_instance(spec, seed));
        }
      }
    } else if (*sol) {
      const auto inst = io::load_instance(sol_inst);
      if (sol_mode == "reopt") {
        const auto s = solver::reopt_policy(inst, sol_bf.budget());
        if (!sol_out.empty()) io::save_schedule(sol_out, s);
        if (!sol_lp.empty()) io::write_text(sol_lp, solver::export_milp(inst));
        emit({{"mode", "reopt"}, {"objective", max_min(load_of(s, inst))}, {"unscheduled", unscheduled(s, inst)}});
        return 0;
      }
      solver::SolveRequest req;
      req.instance = inst;
      if (!sol_fixed.empty()) req.fixed = io::load_schedule(sol_fixed);
      req.decide = sol_decide;
      if (req.decide.empty())
        for (const auto& e : inst.evs)
          if (!req.fixed.contains(e.id)) req.decide.push_back(e.id);
      req.budget = sol_bf.budget();
      const auto r = solver::solve_completion(req);
      if (!sol_lp.empty()) io::write_text(sol_lp, solver::export_milp(inst, req.fixed));
      if (r.found && !sol_out.empty()) io::save_schedule(sol_out, r.schedule);
      emit({{"status", solver::to_string(r.status)},
            {"objective", r.found ? json(r.objective) : json(nullptr)},
            {"nodes", r.nodes_explored}});
      return r.found ? 0 : 2;
    } else if (*heu) {
      const auto inst = io::load_instance(heu_inst);
      service::PolicyContext ctx;
      ctx.budget = heu_bf.budget();
      for (const auto& f : heu_calib) {
        if (fs::is_directory(f)) {
          std::vector<fs::path> files;
          for (const auto& e : fs::directory_iterator(f))
            if (e.path().extension() == ".json") files.push_back(e.path());
          std::sort(files.begin(), files.end());
          for (const auto& p : files) ctx.calibration_set.push_back(io::load_instance(p));
        } else {
          ctx.calibration_set.push_back(io::load_instance(f));
        }
      }
      if (ctx.calibration_set.empty()) ctx.calibration_set.push_back(inst);
      const auto s = service::make_policy(heu_policy, ctx).run(inst);
      if (!heu_out.empty()) io::save_schedule(heu_out, s);
      const auto prof = load_of(s, inst);
      emit({{"policy", heu_policy}, {"max_min", max_min(prof)}, {"rmse", rmse(prof)}, {"peak", prof.peak()},
            {"unscheduled", unscheduled(s, inst)}});
    } else if (*tsl) {
      auto cfg = resolve_config(tsl_config, tsl_sf, tsl_bf);
      if (!tsl_variant.empty()) cfg.variant = policies::variant_from_string(tsl_variant);
      if (tsl_batch) cfg.train.batch_size = *tsl_batch;
      if (tsl_iters) cfg.train.max_iterations = *tsl_iters;
      cfg.train.validate();
      const auto enc = policies::encoder_for(cfg.scenario);
      std::vector<policies::Demonstration> demos;
      if (!tsl_dataset_in.empty()) {
        demos = policies::read_dataset(io::read_text(tsl_dataset_in));
      } else {
        std::vector<Instance> insts;
        const int n = tsl_episodes.value_or(cfg.dagger.eta0);
        for (int k = 0; k < n; ++k)
          insts.push_back(instgen::sample_instance(cfg.scenario, hash_combine(hash_combine(tsl_seed, 0xe0), k)));
        demos = policies::expert_demonstrations(insts, cfg.variant, enc, cfg.budget).demos;
      }
      if (!tsl_dataset_out.empty()) io::write_text(tsl_dataset_out, policies::write_dataset(demos));
      auto r = policies::train_sl(demos, cfg.variant, enc, cfg.train, tsl_seed, cfg.arch);
      policies::save_model(tsl_out, r.model);
      if (!tsl_log.empty()) io::write_text(tsl_log, io::canonical(policies::to_json(r.log)));
      if (r.log.single_class) std::cerr << "warning: training data contains a single class\n";
      emit({{"variant", policies::to_string(cfg.variant)},
            {"samples", demos.size()},
            {"parameters", r.model.parameter_count()},
            {"iterations", r.log.eval_loss.size()},
            {"best_eval_loss", r.log.best_iteration >= 0 ? r.log.eval_loss[r.log.best_iteration] : 0.0}});
    } else if (*dag) {
      auto cfg = resolve_config(dag_config, dag_sf, dag_bf);
      if (!dag_variant.empty()) cfg.variant = policies::variant_from_string(dag_variant);
      if (dag_batch) cfg.train.batch_size = *dag_batch;
      if (dag_outer) cfg.dagger.max_outer = *dag_outer;
      if (dag_bf.given()) cfg.dagger.expert_budget = dag_bf.budget();
      cfg.train.validate();
      cfg.dagger.validate();
      auto r = policies::run_dagger(cfg.dagger, cfg.train, cfg.scenario, cfg.variant, dag_seed, cfg.arch);
      policies::save_model(dag_out, r.model);
      json hist = json::array();
      for (const auto& it : r.history) hist.push_back(policies::to_json(it));
      if (!dag_hist.empty()) io::write_text(dag_hist, io::canonical(hist));
      emit({{"initial_validation_max_min", r.initial_validation},
            {"best_validation_max_min", r.best_validation},
            {"history", hist}});
    } else if (*rol) {
      auto model = policies::load_model(rol_model);
      const auto inst = io::load_instance(rol_inst);
      const auto r = policies::rollout(model, inst);
      if (!rol_out.empty()) io::save_schedule(rol_out, r.schedule);
      if (!rol_trace.empty()) io::write_text(rol_trace, engine::write_trace(r.trace));
      const auto prof = load_of(r.schedule, inst);
      emit({{"max_min", max_min(prof)}, {"rmse", rmse(prof)}, {"score", r.score}, {"actions", r.actions.size()}});
    } else if (*evl) {
      auto cfg = resolve_config(evl_config, evl_sf, evl_bf);
      if (!evl_policies.empty()) cfg.policies = evl_policies;
      if (evl_count) {
        cfg.seeds.clear();
        for (int k = 0; k < *evl_count; ++k) cfg.seeds.push_back(evl_seed + static_cast<std::uint64_t>(k));
      }
      if (!evl_out.empty()) cfg.output_dir = evl_out;
      std::vector<Instance> insts;
      for (auto s : cfg.seeds) insts.push_back(instgen::sample_instance(cfg.scenario, s));
      service::PolicyContext ctx;
      ctx.budget = cfg.budget;
      ctx.calibration_set = calibration_set(cfg.scenario, cfg.calibration_seed, cfg.calibration_count);
      std::vector<analysis::NamedPolicy> pols;
      for (const auto& n : cfg.policies) pols.push_back(service::make_policy(n, ctx));
      const auto rep = analysis::evaluate(pols, insts);
      fs::create_directories(cfg.output_dir);
      io::write_text(cfg.output_dir / "records.csv", analysis::records_csv(rep));
      json out = analysis::to_json(rep);
      out["scenario"] = service::to_json(cfg.scenario);
      io::write_text(cfg.output_dir / "report.json", io::canonical(out));
      for (const auto& a : rep.aggregates)
        if (a.metric == "max_min" || a.metric == "rmse")
          std::printf("%-16s %-8s mean %9.4f  +/- %8.4f  (n=%zu, failed=%zu)\n", a.policy.c_str(), a.metric.c_str(),
                      a.mean, a.ci_half_width, a.count, a.failed);
    } else if (*eco) {
      if (eco_gma) {
        emit(analysis::to_json(analysis::gma_calibration()));
        return 0;
      }
      analysis::Economics e;
      if (eco_base && eco_pol) {
        e = analysis::avoided_value_from_peaks(*eco_base, *eco_pol, eco_params);
      } else if (!eco_report.empty() && !eco_policy.empty()) {
        const json rep = json::parse(io::read_text(eco_report));
        auto mean_peak = [&](const std::string& p) {
          for (const auto& a : rep.at("aggregates"))
            if (a.at("policy") == p && a.at("metric") == "peak") return a.at("mean").get<double>();
          throw Error("report has no peak aggregate for '" + p + "'");
        };
        e = analysis::avoided_value_from_peaks(mean_peak(eco_params.baseline_policy), mean_peak(eco_policy), eco_params);
        e.policy = eco_policy;
      } else {
        throw Error("economics: pass --baseline-peak and --policy-peak, or --report and --policy, or --gma");
      }
      emit(analysis::to_json(e));
    } else if (*thy) {
      json out = {{"ln_n_plus_ln_S", std::log(thy_n) + std::log(thy_S)},
                  {"ln_M", std::log(thy_M)},
                  {"theorem_threshold", analysis::theorem_threshold(thy_n, thy_S, thy_M, thy_H)},
                  {"exact_threshold", analysis::exact_threshold(thy_n, thy_S, thy_M, thy_H)},
                  {"head_ratio", analysis::head_ratio(thy_M, thy_S)}};
      if (thy_dM && thy_dS)
        out["check"] = analysis::to_json(analysis::natarajan_check(*thy_dM, *thy_dS, thy_n, thy_S, thy_M, thy_H, thy_delta));
      if (!thy_mlp.empty())
        out["mlp_param_count"] = analysis::mlp_param_count(thy_mlp[0], thy_mlp[1], thy_mlp[2], thy_mlp[3]);
      emit(out);
    } else if (*srv) {
      service::StoreOptions opts;
      opts.data_dir = srv_data.empty() ? service::data_dir_from_env() : std::optional<fs::path>(srv_data);
      opts.compare_budget.time_limit_s = srv_budget;
      service::SessionStore store(opts);
      const auto n = store.load_persisted();
      std::cerr << "restored " << n << " session(s); listening on " << srv_host << ":" << srv_port << "\n";
      service::serve(store, srv_host, srv_port);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
