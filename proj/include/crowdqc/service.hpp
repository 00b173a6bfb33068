#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdqc/analytics.hpp"
#include "crowdqc/export.hpp"
#include "crowdqc/items.hpp"
#include "crowdqc/lint.hpp"
#include "crowdqc/planner.hpp"
#include "crowdqc/store.hpp"

namespace crowdqc {

enum class ProjectState { draft, piloting, live, closed };

std::string_view to_string(ProjectState state);

enum class LaunchMode { pilot, full };

struct ServiceOptions {
  /// Empty keeps all state in memory.
  std::filesystem::path data_dir;
  std::chrono::minutes lease{60};
  std::chrono::milliseconds agent_timeout{10000};
  /// Milliseconds since the epoch; injectable for tests.
  std::function<std::int64_t()> clock;
};

struct CreateResult {
  std::string project_id;
  ClarityReport lint;
};

struct UploadResult {
  std::int64_t accepted = 0;
  std::vector<RowRejection> rejected;
};

struct LaunchResult {
  ProjectState state = ProjectState::draft;
  DeploymentPlan plan;
  std::uint64_t seed = 0;
  std::vector<UnitShortfall> shortfalls;
  std::int64_t claimable_units = 0;
};

/// What a worker sees for a claimed unit: item content by position only. Slot
/// kinds, duplicate references, item ids and golden answers stay server-side.
struct WorkerItem {
  std::int64_t position = 0;
  std::string text;
  std::string context;
};

struct WorkerView {
  std::string project_id;
  std::string unit_id;
  std::int64_t issued_at_ms = 0;
  std::int64_t lease_expires_at_ms = 0;
  std::vector<WorkerItem> items;
};

struct SubmitRequest {
  std::string worker_id;
  std::string unit_id;
  /// Per-slot answers in wire form. Interactive answers carry a session_id and
  /// the server attaches the relayed transcript.
  nlohmann::json answers;
  std::vector<std::int64_t> per_slot_ms;
  std::optional<std::string> feedback;
  bool consent_acknowledged = false;
};

struct SubmitResult {
  std::string submission_id;
  std::int64_t total_ms = 0;
};

struct RelayResult {
  std::string reply;
  std::int64_t transcript_length = 0;
};

struct ProjectStatus {
  std::string project_id;
  ProjectState state = ProjectState::draft;
  TaskConfig config;
  std::int64_t items = 0;
  std::int64_t golden_items = 0;
  std::int64_t units = 0;
  std::int64_t submissions = 0;
  std::int64_t open_claims = 0;
  std::optional<DeploymentPlan> plan;
};

/// Requester and worker operations over durable projects. Thread-safe: claims
/// are linearizable per project, submissions commit to the store before they
/// are acknowledged, and reads work on a consistent copy.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  CreateResult create_project(const TaskConfig& config);
  UploadResult upload_items(const std::string& project_id, std::string_view payload, UploadFormat format,
                            bool golden);
  LaunchResult launch(const std::string& project_id, LaunchMode mode);
  void close(const std::string& project_id);

  WorkerView claim_next_unit(const std::string& project_id, const std::string& worker_id);
  SubmitResult submit(const std::string& project_id, const SubmitRequest& request);
  RelayResult dialog_relay(const std::string& project_id, const std::string& worker_id,
                           const std::string& session_id, const std::string& utterance);

  QualityReport get_report(const std::string& project_id) const;
  ProjectExport export_project(const std::string& project_id) const;
  ProjectStatus status(const std::string& project_id) const;
  std::vector<std::string> project_ids() const;

  const TaskConfig& config_of(const std::string& project_id) const;

 private:
  struct Project;

  std::shared_ptr<Project> find(const std::string& project_id) const;
  void persist_snapshot(const Project& project);
  void recover();
  std::int64_t now() const;

  ServiceOptions options_;
  std::unique_ptr<Store> store_;
  mutable std::shared_mutex projects_mu_;
  std::map<std::string, std::shared_ptr<Project>> projects_;
  std::int64_t next_project_ = 1;
};

nlohmann::ordered_json worker_view_to_json(const WorkerView& view, const TaskConfig& config);
nlohmann::ordered_json launch_result_to_json(const LaunchResult& result);
nlohmann::ordered_json lint_to_json(const ClarityReport& report);
nlohmann::ordered_json status_to_json(const ProjectStatus& status);

}  // namespace crowdqc
