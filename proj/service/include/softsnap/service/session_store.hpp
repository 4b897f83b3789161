#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace softsnap::service {

using json = nlohmann::json;

/// Design sessions kept in one JSON file under the data directory. Every
/// mutation rewrites the file through a temporary and a rename, so a crash
/// leaves either the old or the new contents.
///
/// Session document:
///   {"session_id", "created_at", "config", "saved_patterns": {name: [...]},
///    "history": [{"timestamp", "kind", "query", "result"}]}
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path data_dir);

  json create(const json& config, const std::string& name = {});
  json get(const std::string& id) const;
  /// Summaries: id, name, created_at, history length.
  json list() const;
  /// Returns the appended record.
  json append(const std::string& id, const std::string& kind, const json& query,
              const json& result);
  json save_pattern(const std::string& id, const std::string& name, const json& offsets);

  const std::filesystem::path& file() const { return file_; }

 private:
  json& find(const std::string& id);
  const json& find(const std::string& id) const;
  void persist() const;

  std::filesystem::path file_;
  mutable std::mutex mutex_;
  json sessions_;  // array
};

std::filesystem::path default_data_dir();

std::string utc_timestamp();

}  // namespace softsnap::service
