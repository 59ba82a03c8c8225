#include "occsp/service.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>

#include "occsp/heuristics.hpp"
#include "occsp/io.hpp"

namespace occsp::service {

using nlohmann::json;

// ------------------------------------------------------------------ policies

std::vector<std::string> known_policies() {
  return {"oracle", "reopt", "rowfill", "plugin", "alpha", "beta", "random", "threshold:<X>", "model:<path>"};
}

analysis::NamedPolicy make_policy(const std::string& name, const PolicyContext& ctx) {
  const solver::Budget budget = ctx.budget;
  if (name == "oracle")
    return {name, [budget](const Instance& i) {
              auto r = solver::solve_oracle(i, budget);
              if (!r.found) throw Error("oracle: " + solver::to_string(r.status));
              return r.schedule;
            }};
  if (name == "reopt") return {name, [budget](const Instance& i) { return solver::reopt_policy(i, budget); }};
  if (name == "rowfill") return {name, [](const Instance& i) { return heuristics::row_filling(i); }};
  if (name == "plugin") return {name, [](const Instance& i) { return heuristics::plug_in(i); }};
  if (name == "random") {
    const std::uint64_t seed = ctx.seed;
    return {name, [seed](const Instance& i) { return policies::random_policy(i, hash_combine(seed, i.seed)); }};
  }
  if (name == "alpha" || name == "beta") {
    if (ctx.calibration_set.empty()) throw Error("policy '" + name + "' needs a calibration set");
    const int T = ctx.calibration_set.front().T();
    const int X = name == "alpha" ? heuristics::calibrate_alpha(ctx.calibration_set, T)
                                  : heuristics::calibrate_beta(ctx.calibration_set, budget);
    return {name, [X](const Instance& i) { return heuristics::x_threshold(i, X); }};
  }
  if (name.rfind("xthreshold:", 0) == 0 || name.rfind("threshold:", 0) == 0) {
    int X;
    try {
      X = std::stoi(name.substr(name.find(':') + 1));
    } catch (const std::exception&) {
      throw Error("bad threshold in policy '" + name + "'");
    }
    return {name, [X](const Instance& i) { return heuristics::x_threshold(i, X); }};
  }
  if (name.rfind("model:", 0) == 0 || name == "model") {
    std::filesystem::path path = name == "model" ? ctx.model_path.value_or("") : std::filesystem::path(name.substr(6));
    if (path.empty()) throw Error("policy 'model' needs a model path");
    auto model = std::make_shared<policies::PolicyModel>(policies::load_model(path));
    auto mu = std::make_shared<std::mutex>();
    const std::string label = "model:" + policies::to_string(model->variant);
    return {name == "model" ? label : name, [model, mu](const Instance& i) {
              std::lock_guard lk(*mu);
              return policies::rollout(*model, i).schedule;
            }};
  }
  throw Error("unknown policy '" + name + "'");
}

// -------------------------------------------------------------- run config

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get_as(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(where + "." + key + ": missing or wrong type");
  }
}

solver::Budget budget_from_json(const json& j, const std::string& where) {
  reject_unknown(j, {"time_limit_s", "node_limit", "gap_tolerance"}, where);
  solver::Budget b;
  if (j.contains("time_limit_s")) b.time_limit_s = get_as<double>(j, "time_limit_s", where);
  if (j.contains("node_limit")) b.node_limit = get_as<long>(j, "node_limit", where);
  if (j.contains("gap_tolerance")) b.gap_tolerance = get_as<int>(j, "gap_tolerance", where);
  if (b.time_limit_s && *b.time_limit_s <= 0) throw Error(where + ".time_limit_s must be > 0");
  if (b.node_limit && *b.node_limit < 1) throw Error(where + ".node_limit must be >= 1");
  if (b.gap_tolerance < 0) throw Error(where + ".gap_tolerance must be >= 0");
  return b;
}

}  // namespace

instgen::ScenarioSpec scenario_from_json(const json& j) {
  if (j.is_number_integer()) return instgen::builtin_scenario(j.get<int>());
  reject_unknown(j, {"id", "T", "n_evs", "perturbation"}, "scenario");
  const int id = get_as<int>(j, "id", "scenario");
  instgen::ScenarioSpec s = instgen::builtin_scenario(id);
  if (j.contains("T") || j.contains("n_evs")) {
    const int T = j.contains("T") ? get_as<int>(j, "T", "scenario") : s.horizon.T;
    const int n = j.contains("n_evs") ? get_as<int>(j, "n_evs", "scenario") : s.n_evs;
    if (T < 1 || n < 1) throw Error("scenario: T and n_evs must be >= 1");
    s = instgen::desk_scenario(id, T, n);
  }
  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    reject_unknown(p, {"band", "targets", "seed"}, "scenario.perturbation");
    s = instgen::perturb_spec(s, get_as<double>(p, "band", "scenario.perturbation"),
                              instgen::parse_targets(p.value("targets", std::string("mean,std,count"))),
                              p.value("seed", std::uint64_t{0}));
  }
  return s;
}

json to_json(const instgen::ScenarioSpec& s) {
  json comps = json::array();
  for (const auto& c : s.arrival.components) comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.stddev}});
  json j = {{"id", s.id},
            {"n_evs", s.n_evs},
            {"T", s.horizon.T},
            {"slot_minutes", s.horizon.slot_minutes},
            {"arrival", comps},
            {"departure", {{"mean", s.departure.mean}, {"std", s.departure.stddev}}},
            {"l_max", s.l_max}};
  if (s.perturbation)
    j["perturbation"] = {{"band", s.perturbation->band},
                         {"mean_factor", s.perturbation->mean_factor},
                         {"std_factor", s.perturbation->std_factor},
                         {"count_factor", s.perturbation->count_factor}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, {"scenario", "seeds", "policies", "solver", "variant", "train", "dagger", "arch", "output_dir",
                     "calibration_seed", "calibration_count"},
                 "config");
  RunConfig c;
  if (!j.contains("scenario")) throw Error("config: 'scenario' is required");
  c.scenario = scenario_from_json(j.at("scenario"));
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_array()) {
      for (const auto& v : s) {
        if (!v.is_number_unsigned()) throw Error("config.seeds: entries must be non-negative integers");
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    } else {
      reject_unknown(s, {"start", "count"}, "config.seeds");
      const auto start = get_as<std::uint64_t>(s, "start", "config.seeds");
      const auto count = get_as<int>(s, "count", "config.seeds");
      if (count < 1) throw Error("config.seeds.count must be >= 1");
      for (int k = 0; k < count; ++k) c.seeds.push_back(start + static_cast<std::uint64_t>(k));
    }
  } else {
    for (std::uint64_t k = 0; k < 100; ++k) c.seeds.push_back(k);
  }
  if (c.seeds.empty()) throw Error("config.seeds: empty");
  if (j.contains("policies")) {
    c.policies = get_as<std::vector<std::string>>(j, "policies", "config");
    if (c.policies.empty()) throw Error("config.policies: empty");
  }
  if (j.contains("solver")) c.budget = budget_from_json(j.at("solver"), "config.solver");
  if (j.contains("variant")) c.variant = policies::variant_from_string(get_as<std::string>(j, "variant", "config"));
  if (j.contains("train")) {
    reject_unknown(j.at("train"),
                   {"learning_rate", "max_iterations", "patience", "train_fraction", "batch_size", "restore_best"},
                   "config.train");
    c.train = policies::train_config_from_json(j.at("train"));
  }
  if (j.contains("dagger")) {
    reject_unknown(j.at("dagger"), {"eta0", "eta", "xi", "max_outer", "expert_time_limit_s", "expert_node_limit"},
                   "config.dagger");
    c.dagger = policies::dagger_config_from_json(j.at("dagger"));
  }
  if (j.contains("arch")) {
    reject_unknown(j.at("arch"), {"conv_channels", "kernel", "cnn_hidden", "cnn_dropout", "mlp_hidden", "mlp_dropout"},
                   "config.arch");
    c.arch = policies::arch_from_json(j.at("arch"));
  }
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir", "config");
  if (j.contains("calibration_seed")) c.calibration_seed = get_as<std::uint64_t>(j, "calibration_seed", "config");
  if (j.contains("calibration_count")) {
    c.calibration_count = get_as<int>(j, "calibration_count", "config");
    if (c.calibration_count < 1) throw Error("config.calibration_count must be >= 1");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return run_config_from_json(json::parse(io::read_text(path)));
  } catch (const json::parse_error& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- sessions

namespace {

constexpr std::uint64_t kTagSibling = 0x51b1;

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::vector<Instance> siblings(const Session& s, int count) {
  if (!s.source.contains("scenario")) return {*s.instance};
  const auto spec = scenario_from_json(s.source.at("scenario"));
  const auto seed = s.source.at("seed").get<std::uint64_t>();
  std::vector<Instance> out;
  for (int k = 0; k < count; ++k)
    out.push_back(instgen::sample_instance(spec, hash_combine(hash_combine(seed, kTagSibling), static_cast<std::uint64_t>(k))));
  return out;
}

json ev_json(const Ev& e) { return {{"id", e.id}, {"ar", e.ar}, {"d", e.d}, {"l", e.l}}; }

void play(Session& s, engine::Action a) {
  const int ev = s.state.active().id;
  auto r = engine::step(s.state, a);
  s.trace.push_back({ev, a, r.committed ? r.committed_start : r.state.candidate, r.reward});
  s.last_reward = r.reward;
  if (r.reward) s.score += *r.reward;
  s.state = std::move(r.state);
}

}  // namespace

json view(const Session& s, bool include_trace) {
  const auto& st = s.state;
  json committed = json::array();
  for (const auto& [id, start] : st.committed.starts) {
    json e = ev_json(s.instance->ev(id));
    e["start"] = start;
    committed.push_back(e);
  }
  json v = {{"session_id", s.id},
            {"mode", s.mode},
            {"created_at", s.created_at},
            {"T", st.T()},
            {"cap", s.instance->cap},
            {"rows", engine::default_render_rows(st)},
            {"terminal", st.terminal},
            {"score", s.score},
            {"steps", s.trace.size()},
            {"load", st.profile.counts},
            {"committed", committed},
            {"unplaced", st.unplaced}};
  if (s.last_reward) v["last_reward"] = *s.last_reward;
  if (!st.terminal) {
    const Ev& e = st.active();
    json a = ev_json(e);
    a["feasible_start"] = {e.ar, e.last_start()};
    v["active"] = a;
    v["candidate"] = st.candidate;
    v["budget_left"] = st.budget_left;
    v["legal_actions"] = json::array();
    for (auto act : engine::legal_actions(st)) v["legal_actions"].push_back(engine::to_string(act));
  } else {
    v["active"] = nullptr;
    v["metrics"] = {{"max_min", max_min(st.profile)}, {"rmse", rmse(st.profile)}, {"peak", st.profile.peak()}};
  }
  if (include_trace) {
    json t = json::array();
    for (const auto& r : s.trace) t.push_back(engine::to_json(r));
    v["trace"] = t;
  }
  return v;
}

SessionStore::SessionStore(StoreOptions options) : opts_(std::move(options)) {
  if (opts_.data_dir) std::filesystem::create_directories(*opts_.data_dir);
}

std::size_t SessionStore::size() const {
  std::shared_lock lk(mu_);
  return sessions_.size();
}

std::string SessionStore::new_id() {
  const auto t = static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count());
  for (;;) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash_combine(t, ++counter_);
    if (!sessions_.count(os.str())) return os.str();
  }
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::shared_lock lk(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw HttpError(404, "unknown session '" + id + "'");
  return it->second;
}

void SessionStore::persist_new(const Session& s) const {
  if (!opts_.data_dir) return;
  const auto dir = *opts_.data_dir / s.id;
  std::filesystem::create_directories(dir);
  io::save_instance(dir / "instance.json", *s.instance);
  io::write_text(dir / "session.json",
                 io::canonical({{"id", s.id}, {"mode", s.mode}, {"source", s.source}, {"created_at", s.created_at}}));
  io::write_text(dir / "actions.log", "");
}

void SessionStore::persist_action(const Session& s, engine::Action a) const {
  if (!opts_.data_dir) return;
  const auto dir = *opts_.data_dir / s.id;
  {
    std::ofstream log(dir / "actions.log", std::ios::app);
    log << engine::to_string(a) << '\n';
    log.flush();
    if (!log) throw Error("cannot append to the action log of session " + s.id);
  }
  if (opts_.snapshot_every > 0 && s.trace.size() % static_cast<std::size_t>(opts_.snapshot_every) == 0)
    io::write_text(dir / "snapshot.json", io::canonical({{"actions", s.trace.size()},
                                                         {"committed", io::to_json(s.state.committed)},
                                                         {"candidate", s.state.candidate},
                                                         {"score", s.score}}));
}

json SessionStore::create_episode(const json& body) {
  if (!body.is_object()) throw HttpError(400, "request body must be a JSON object");
  auto s = std::make_shared<Session>();
  try {
    if (body.contains("instance")) {
      s->instance = std::make_shared<const Instance>(io::instance_from_json(body.at("instance")));
      s->source = {{"instance", true}};
    } else if (body.contains("scenario")) {
      const auto spec = scenario_from_json(body.at("scenario"));
      const auto seed = body.value("seed", std::uint64_t{0});
      s->instance = std::make_shared<const Instance>(instgen::sample_instance(spec, seed));
      s->source = {{"scenario", body.at("scenario")}, {"seed", seed}};
    } else {
      throw Error("body needs 'scenario' (with 'seed') or 'instance'");
    }
  } catch (const Error& e) {
    throw HttpError(400, e.what());
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("malformed request: ") + e.what());
  }
  s->mode = body.value("mode", std::string("human"));
  s->created_at = now_iso();
  s->state = engine::reset(s->instance);

  std::vector<engine::Action> autoplay;
  try {
    if (s->mode.rfind("heuristic:", 0) == 0) {
      PolicyContext ctx;
      ctx.budget = opts_.compare_budget;
      const std::string name = s->mode.substr(10);
      if (name == "alpha" || name == "beta") ctx.calibration_set = siblings(*s, opts_.calibration_count);
      autoplay = engine::actions_for_schedule(*s->instance, make_policy(name, ctx).run(*s->instance));
    } else if (s->mode.rfind("agent:", 0) == 0) {
      auto model = policies::load_model(s->mode.substr(6));
      autoplay = policies::rollout(model, *s->instance).actions;
    } else if (s->mode != "human") {
      throw Error("mode must be human, heuristic:<name> or agent:<model path>");
    }
  } catch (const Error& e) {
    throw HttpError(400, e.what());
  }

  {
    std::unique_lock lk(mu_);
    s->id = new_id();
    sessions_[s->id] = s;
  }
  std::lock_guard lk(s->mu);
  persist_new(*s);
  for (auto a : autoplay) {
    if (s->state.terminal) break;
    play(*s, a);
    persist_action(*s, a);
  }
  return view(*s, !autoplay.empty());
}

json SessionStore::get(const std::string& id) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  return view(*s, s->state.terminal);
}

json SessionStore::apply_action(const std::string& id, const std::string& action) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  if (s->mode != "human") throw HttpError(409, "session " + id + " is not in human mode");
  if (s->state.terminal) throw HttpError(409, "session " + id + " is terminal");
  engine::Action a;
  try {
    a = engine::action_from_string(action);
  } catch (const Error& e) {
    throw HttpError(400, e.what());
  }
  play(*s, a);
  persist_action(*s, a);
  return view(*s);
}

json SessionStore::compare(const std::string& id, const std::optional<std::string>& model_path) {
  auto s = find(id);
  std::unique_lock lk(s->mu);
  if (!s->state.terminal) throw HttpError(409, "session " + id + " is not terminal");
  const Instance inst = *s->instance;
  const Schedule played = s->state.committed;
  const int played_score = s->score;
  const std::string played_label = s->mode == "human" ? "human" : s->mode;
  lk.unlock();

  PolicyContext ctx;
  ctx.budget = opts_.compare_budget;
  ctx.calibration_set = siblings(*s, opts_.calibration_count);
  std::vector<std::string> names{"plugin", "rowfill", "alpha", "beta", "reopt"};
  if (model_path) names.push_back("model:" + *model_path);
  names.push_back("oracle");

  // Each policy runs once; evaluate() then scores the cached schedules.
  struct Outcome {
    std::optional<Schedule> schedule;
    std::string error;
  };
  std::vector<analysis::NamedPolicy> cached;
  std::map<std::string, Outcome> outcomes;
  std::string oracle_status = "not run";
  for (const auto& n : names) {
    Outcome o;
    std::string label = n;
    try {
      if (n == "oracle") {
        const auto r = solver::solve_oracle(inst, ctx.budget);
        oracle_status = solver::to_string(r.status);
        if (!r.found) throw Error("oracle: " + oracle_status);
        o.schedule = r.schedule;
      } else {
        auto p = make_policy(n, ctx);
        label = p.name;
        o.schedule = p.run(inst);
      }
    } catch (const Error& e) {
      if (n.rfind("model:", 0) == 0) throw HttpError(400, e.what());
      o.error = e.what();
    }
    outcomes[label] = o;
    cached.push_back({label, [o](const Instance&) {
                        if (!o.schedule) throw Error(o.error);
                        return *o.schedule;
                      }});
  }
  outcomes[played_label] = {played, ""};
  cached.push_back({played_label, [played](const Instance&) { return played; }});

  const auto report = analysis::evaluate(cached, {inst});
  json rows = json::array();
  for (const auto& r : report.records) {
    json row = {{"policy", r.policy}, {"failed", r.failed}};
    if (r.failed) {
      row["error"] = r.error;
    } else {
      row["max_min"] = r.max_min;
      row["rmse"] = r.rmse;
      row["peak"] = r.peak;
      row["score"] = r.policy == played_label
                         ? played_score
                         : engine::replay(inst, engine::actions_for_schedule(inst, *outcomes[r.policy].schedule)).score;
    }
    if (r.policy == played_label) row["played"] = true;
    rows.push_back(row);
  }
  return {{"session_id", id}, {"rows", rows}, {"oracle_status", oracle_status}};
}

json SessionStore::scenarios() {
  json out = json::array();
  for (int id = 1; id <= 4; ++id) {
    json j = to_json(instgen::builtin_scenario(id));
    j["id"] = id;
    out.push_back(j);
  }
  return out;
}

std::size_t SessionStore::load_persisted() {
  if (!opts_.data_dir) return 0;
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(*opts_.data_dir)) {
    if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "session.json")) continue;
    auto s = std::make_shared<Session>();
    const json meta = json::parse(io::read_text(entry.path() / "session.json"));
    s->id = meta.at("id");
    s->mode = meta.at("mode");
    s->source = meta.at("source");
    s->created_at = meta.at("created_at");
    s->instance = std::make_shared<const Instance>(io::load_instance(entry.path() / "instance.json"));
    s->state = engine::reset(s->instance);
    std::istringstream log(io::read_text(entry.path() / "actions.log"));
    std::string line;
    while (std::getline(log, line))
      if (!line.empty()) play(*s, engine::action_from_string(line));
    const auto snap_path = entry.path() / "snapshot.json";
    if (std::filesystem::exists(snap_path)) {
      const json snap = json::parse(io::read_text(snap_path));
      const auto k = snap.at("actions").get<std::size_t>();
      if (k > s->trace.size()) throw Error("session " + s->id + ": snapshot is ahead of the action log");
      if (k == s->trace.size() && (io::schedule_from_json(snap.at("committed")) != s->state.committed ||
                                   snap.at("score").get<int>() != s->score))
        throw Error("session " + s->id + ": replay disagrees with snapshot");
    }
    std::unique_lock lk(mu_);
    sessions_[s->id] = s;
    ++n;
  }
  return n;
}

std::optional<std::filesystem::path> data_dir_from_env() {
  if (const char* d = std::getenv("OCCSP_DATA_DIR"); d && *d) return std::filesystem::path(d);
  return std::nullopt;
}

// -------------------------------------------------------------------- HTTP

namespace {

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const HttpError& e) {
    send_json(res, {{"error", e.what()}}, e.status);
  } catch (const json::exception& e) {
    send_json(res, {{"error", std::string("malformed JSON: ") + e.what()}}, 400);
  } catch (const Error& e) {
    send_json(res, {{"error", e.what()}}, 400);
  } catch (const std::exception& e) {
    send_json(res, {{"error", e.what()}}, 500);
  }
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server svr;
};

HttpServer::HttpServer(SessionStore& store) : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->svr;
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  svr.Get("/scenarios", [](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, SessionStore::scenarios()); });
  });
  svr.Post("/episodes", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, store.create_episode(json::parse(req.body)), 201); });
  });
  svr.Get(R"(/episodes/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, store.get(req.matches[1])); });
  });
  svr.Post(R"(/episodes/([^/]+)/actions)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      if (!body.is_object() || !body.contains("action") || !body.at("action").is_string())
        throw HttpError(400, "body must be {\"action\": \"LEFT\"|\"RIGHT\"|\"DOWN\"}");
      send_json(res, store.apply_action(req.matches[1], body.at("action").get<std::string>()));
    });
  });
  svr.Get(R"(/episodes/([^/]+)/compare)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<std::string> model;
      if (req.has_param("model")) model = req.get_param_value("model");
      send_json(res, store.compare(req.matches[1], model));
    });
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int p = port == 0 ? impl_->svr.bind_to_any_port(host) : (impl_->svr.bind_to_port(host, port) ? port : -1);
  if (p < 0) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  return p;
}

void HttpServer::run() {
  if (!impl_->svr.listen_after_bind()) throw Error("HTTP server stopped with an error");
}

void HttpServer::wait_until_ready() const { impl_->svr.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_->svr.is_running()) impl_->svr.stop();
}

void serve(SessionStore& store, const std::string& host, int port) {
  HttpServer server(store);
  server.bind(host, port);
  server.run();
}

}  // namespace occsp::service
