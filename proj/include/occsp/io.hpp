#pragma once

// JSON file formats for instances and schedules.
//
// Instance: {"cap":..,"evs":[{"ar":..,"d":..,"id":..,"l":..}],
//            "horizon":{"T":..,"slot_minutes":..},"scenario_id":..,"seed":..}
// Schedule: {"<id>": start, ...}
//
// Serialization is canonical: keys sorted, no whitespace, trailing newline.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "occsp/core.hpp"

namespace occsp::io {

using nlohmann::json;

json to_json(const Instance& instance);
Instance instance_from_json(const json& j);

json to_json(const Schedule& schedule);
Schedule schedule_from_json(const json& j);

/// Compact dump with a trailing newline; byte-stable for equal values.
std::string canonical(const json& j);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const Instance& instance);
Schedule load_schedule(const std::filesystem::path& path);
void save_schedule(const std::filesystem::path& path, const Schedule& schedule);

}  // namespace occsp::io
