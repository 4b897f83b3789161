#include "softsnap/service/session_store.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>

#include "softsnap/error.hpp"
#include "softsnap/serialization.hpp"

namespace softsnap::service {
namespace {

std::string random_id() {
  std::random_device rd;
  std::uniform_int_distribution<unsigned> nibble(0, 15);
  std::string id;
  for (int i = 0; i < 32; ++i) id += "0123456789abcdef"[nibble(rd)];
  return id;
}

[[noreturn]] void unknown(const std::string& id) {
  throw Error(ErrorCode::unknown_session, "unknown session: " + id);
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("SOFTSNAP_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return std::filesystem::current_path() / "softsnap-data";
}

SessionStore::SessionStore(std::filesystem::path data_dir)
    : file_(std::move(data_dir) / "sessions.json"), sessions_(json::array()) {
  std::filesystem::create_directories(file_.parent_path());
  if (std::filesystem::exists(file_)) {
    const json doc = read_json_file(file_);
    if (!doc.is_object() || doc.value("schema", 0) != kSchemaVersion ||
        !doc.contains("sessions") || !doc["sessions"].is_array()) {
      throw Error(ErrorCode::invalid_argument, "corrupt session store: " + file_.string());
    }
    sessions_ = doc["sessions"];
  }
}

json& SessionStore::find(const std::string& id) {
  for (json& s : sessions_) {
    if (s["session_id"] == id) return s;
  }
  unknown(id);
}

const json& SessionStore::find(const std::string& id) const {
  for (const json& s : sessions_) {
    if (s["session_id"] == id) return s;
  }
  unknown(id);
}

void SessionStore::persist() const {
  const json doc{{"schema", kSchemaVersion}, {"sessions", sessions_}};
  std::filesystem::path tmp = file_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << doc.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, file_);
}

json SessionStore::create(const json& config, const std::string& name) {
  const json canonical = config_to_json(config_from_json(config));
  std::lock_guard lock(mutex_);
  std::string id;
  bool clash = true;
  while (clash) {
    id = random_id();
    clash = false;
    for (const json& s : sessions_) clash = clash || s["session_id"] == id;
  }
  json session{{"schema", kSchemaVersion},
               {"session_id", id},
               {"name", name},
               {"created_at", utc_timestamp()},
               {"config", canonical},
               {"saved_patterns", json::object()},
               {"history", json::array()}};
  sessions_.push_back(session);
  persist();
  return session;
}

json SessionStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return find(id);
}

json SessionStore::list() const {
  std::lock_guard lock(mutex_);
  json out = json::array();
  for (const json& s : sessions_) {
    out.push_back({{"session_id", s["session_id"]},
                   {"name", s["name"]},
                   {"created_at", s["created_at"]},
                   {"history_length", s["history"].size()}});
  }
  return out;
}

json SessionStore::append(const std::string& id, const std::string& kind, const json& query,
                          const json& result) {
  std::lock_guard lock(mutex_);
  json& session = find(id);
  json record{{"timestamp", utc_timestamp()}, {"kind", kind}, {"query", query}, {"result", result}};
  session["history"].push_back(record);
  try {
    persist();
  } catch (...) {
    session["history"].erase(session["history"].size() - 1);
    throw;
  }
  return record;
}

json SessionStore::save_pattern(const std::string& id, const std::string& name,
                                const json& offsets) {
  if (name.empty()) throw Error(ErrorCode::invalid_argument, "pattern name must not be empty");
  const ThreadingPattern pattern = pattern_from_json(offsets);
  std::lock_guard lock(mutex_);
  json& session = find(id);
  pattern.validate(config_from_json(session["config"]));
  const json previous = session["saved_patterns"].value(name, json());
  session["saved_patterns"][name] = pattern.offsets;
  try {
    persist();
  } catch (...) {
    if (previous.is_null()) {
      session["saved_patterns"].erase(name);
    } else {
      session["saved_patterns"][name] = previous;
    }
    throw;
  }
  return session["saved_patterns"];
}

}  // namespace softsnap::service
