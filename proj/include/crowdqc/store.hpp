#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

struct sqlite3;

namespace crowdqc {

/// Durable project storage in one embedded SQLite file: a snapshot row per
/// project (config, items, units, state) and an append-only event log
/// (claims, submissions, dialog turns). Every write commits before returning.
class Store {
 public:
  struct Event {
    std::string kind;
    std::string body;
  };
  struct ProjectRecord {
    std::string project_id;
    std::string snapshot;
    std::vector<Event> events;
  };

  /// Opens or creates `<data_dir>/crowdqc.sqlite3`. An empty path keeps
  /// everything in memory.
  explicit Store(const std::filesystem::path& data_dir);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void put_snapshot(const std::string& project_id, const std::string& snapshot);
  void append_event(const std::string& project_id, const std::string& kind, const std::string& body);

  /// Every project with its events in append order, projects in creation order.
  std::vector<ProjectRecord> load_all();

 private:
  void exec(const char* sql);

  sqlite3* db_ = nullptr;
  std::mutex mu_;
};

}  // namespace crowdqc
