#include "occsp/io.hpp"

#include <fstream>
#include <sstream>

namespace occsp::io {

json to_json(const Instance& instance) {
  json evs = json::array();
  for (const auto& e : instance.evs) evs.push_back({{"id", e.id}, {"ar", e.ar}, {"d", e.d}, {"l", e.l}});
  return {{"horizon", {{"T", instance.horizon.T}, {"slot_minutes", instance.horizon.slot_minutes}}},
          {"cap", instance.cap},
          {"scenario_id", instance.scenario_id},
          {"seed", instance.seed},
          {"evs", std::move(evs)}};
}

Instance instance_from_json(const json& j) {
  try {
    Horizon h;
    const auto& hj = j.at("horizon");
    h.T = hj.at("T").get<int>();
    h.slot_minutes = hj.value("slot_minutes", 15);
    if (hj.contains("origin")) h.origin = hj.at("origin").get<std::string>();
    std::vector<Ev> evs;
    for (const auto& ej : j.at("evs"))
      evs.push_back({ej.at("id").get<int>(), ej.at("ar").get<int>(), ej.at("d").get<int>(), ej.at("l").get<int>()});
    return make_instance(h, std::move(evs), j.value("cap", 0), j.value("scenario_id", std::string("custom")),
                         j.value("seed", std::uint64_t{0}));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed instance: ") + e.what());
  }
}

json to_json(const Schedule& schedule) {
  json j = json::object();
  for (const auto& [id, start] : schedule.starts) j[std::to_string(id)] = start;
  return j;
}

Schedule schedule_from_json(const json& j) {
  if (!j.is_object()) throw Error("malformed schedule: expected an object of id -> start");
  Schedule s;
  for (const auto& [key, value] : j.items()) {
    try {
      s.starts[std::stoi(key)] = value.get<int>();
    } catch (const std::exception& e) {
      throw Error("malformed schedule entry '" + key + "': " + e.what());
    }
  }
  return s;
}

std::string canonical(const json& j) { return j.dump() + "\n"; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Instance load_instance(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

void save_instance(const std::filesystem::path& path, const Instance& instance) {
  write_text(path, canonical(to_json(instance)));
}

Schedule load_schedule(const std::filesystem::path& path) { return schedule_from_json(json::parse(read_text(path))); }

void save_schedule(const std::filesystem::path& path, const Schedule& schedule) {
  write_text(path, canonical(to_json(schedule)));
}

}  // namespace occsp::io
