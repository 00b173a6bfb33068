#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "crowdqc/planner.hpp"
#include "crowdqc/submission.hpp"

namespace crowdqc {

/// Full snapshot of one project as written by the export endpoint and read
/// back by `crowdqc analyze`.
struct ProjectExport {
  std::string project_id;
  std::string state;
  ProjectData data;
  std::optional<DeploymentPlan> plan;
  std::optional<UnitBuild> build_info;  // seed and shortfalls; units live in data
};

nlohmann::ordered_json plan_to_json(const DeploymentPlan& plan);
DeploymentPlan plan_from_json(const nlohmann::json& value);

nlohmann::ordered_json unit_to_json(const TaskUnit& unit);
TaskUnit unit_from_json(const nlohmann::json& value, TemplateKind kind);

nlohmann::ordered_json golden_to_json(const GoldenItem& golden);
GoldenItem golden_from_json(const nlohmann::json& value, TemplateKind kind);

nlohmann::ordered_json submission_to_json(const Submission& submission);
Submission submission_from_json(const nlohmann::json& value, TemplateKind kind);

/// Submissions are ordered by unit, then worker, then submission id.
std::string export_json(const ProjectExport& project);

/// One CSV row per answer, header first, RFC 4180 quoting.
std::string export_csv(const ProjectExport& project);

/// Throws Error(malformed_export).
ProjectExport parse_export(std::string_view text);

}  // namespace crowdqc
