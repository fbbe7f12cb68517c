#pragma once

#include "mmkit/grid_planner.hpp"
#include "mmkit/ik.hpp"
#include "mmkit/robot.hpp"
#include "mmkit/task.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mmkit {

/// Schema version every JSON input must declare and every JSON output carries.
inline constexpr int kSchemaVersion = 1;

/// Parses JSON text, turning syntax errors into ConfigError with line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::filesystem::path& path);

RobotDescription parse_robot(const nlohmann::json& doc, const std::string& source = "robot");
RobotDescription load_robot(const std::filesystem::path& path);

GridMap load_map(const std::filesystem::path& path);

/// Robot and map paths inside the scenario resolve relative to the scenario file.
Scenario load_scenario(const std::filesystem::path& path);

/// {"xyz": [...], "rpy": [...]}
nlohmann::json pose_to_json(const RigidTransform& t);
RigidTransform pose_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json to_json(const IkResult& r);
nlohmann::json to_json(const PlanResult& r, bool include_path = true);
nlohmann::json to_json(const TaskReport& r);

/**
 * Writes report.json plus one CSV per base leg (base_<leg>.csv) and arm
 * phase (arm_<phase>.csv) into `dir`, and SVG figures when `svg` is set.
 */
void write_task_outputs(const TaskReport& report, const Scenario& scenario, const std::filesystem::path& dir,
                        bool svg);

/// Two-space indented dump with a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace mmkit
