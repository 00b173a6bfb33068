#include "crowdqc/store.hpp"

#include <sqlite3.h>

#include <map>

#include "crowdqc/error.hpp"

namespace crowdqc {

namespace {

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::storage, std::string("sqlite prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  void bind(int index, const std::string& text) {
    sqlite3_bind_text(stmt_, index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
  }

  /// true while a row is available.
  bool step() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(ErrorCode::storage, std::string("sqlite step failed: ") + sqlite3_errmsg(db_));
  }

  std::string column_text(int index) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, index));
    int n = sqlite3_column_bytes(stmt_, index);
    return p ? std::string(p, static_cast<std::size_t>(n)) : std::string();
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

}  // namespace

Store::Store(const std::filesystem::path& data_dir) {
  std::string target = ":memory:";
  if (!data_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(data_dir, ec);
    if (ec) throw Error(ErrorCode::storage, "cannot create data directory " + data_dir.string() + ": " + ec.message());
    target = (data_dir / "crowdqc.sqlite3").string();
  }
  if (sqlite3_open_v2(target.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error(ErrorCode::storage, "cannot open store " + target + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA journal_mode=WAL");
  exec("PRAGMA synchronous=FULL");
  exec(
      "CREATE TABLE IF NOT EXISTS projects ("
      " seq INTEGER PRIMARY KEY AUTOINCREMENT,"
      " project_id TEXT NOT NULL UNIQUE,"
      " snapshot TEXT NOT NULL)");
  exec(
      "CREATE TABLE IF NOT EXISTS events ("
      " seq INTEGER PRIMARY KEY AUTOINCREMENT,"
      " project_id TEXT NOT NULL,"
      " kind TEXT NOT NULL,"
      " body TEXT NOT NULL)");
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::storage, "sqlite: " + msg);
  }
}

void Store::put_snapshot(const std::string& project_id, const std::string& snapshot) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "INSERT INTO projects (project_id, snapshot) VALUES (?1, ?2) "
               "ON CONFLICT(project_id) DO UPDATE SET snapshot = excluded.snapshot");
  st.bind(1, project_id);
  st.bind(2, snapshot);
  st.step();
}

void Store::append_event(const std::string& project_id, const std::string& kind, const std::string& body) {
  std::lock_guard lock(mu_);
  Statement st(db_, "INSERT INTO events (project_id, kind, body) VALUES (?1, ?2, ?3)");
  st.bind(1, project_id);
  st.bind(2, kind);
  st.bind(3, body);
  st.step();
}

std::vector<Store::ProjectRecord> Store::load_all() {
  std::lock_guard lock(mu_);
  std::vector<ProjectRecord> out;
  std::map<std::string, std::size_t> index;
  {
    Statement st(db_, "SELECT project_id, snapshot FROM projects ORDER BY seq");
    while (st.step()) {
      index[st.column_text(0)] = out.size();
      out.push_back({st.column_text(0), st.column_text(1), {}});
    }
  }
  Statement st(db_, "SELECT project_id, kind, body FROM events ORDER BY seq");
  while (st.step()) {
    auto it = index.find(st.column_text(0));
    if (it == index.end()) continue;
    out[it->second].events.push_back({st.column_text(1), st.column_text(2)});
  }
  return out;
}

}  // namespace crowdqc
