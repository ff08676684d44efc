#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mgsos {

inline constexpr int kSchemaVersion = 1;

/// Parses a JSON file; syntax errors become ConfigError with line:column.
nlohmann::json read_json_file(const std::string& path);
nlohmann::json parse_json_text(const std::string& text, const std::string& source);

/// Typed, path-tracking accessor for config objects.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path);

  const nlohmann::json& json() const { return j_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const;

  /// Rejects keys outside `allowed`.
  void allow_keys(std::initializer_list<const char*> allowed) const;
  void require_schema_version() const;

  double number(const std::string& key) const;
  std::optional<double> optional_number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  std::string string(const std::string& key) const;
  JsonReader object(const std::string& key) const;
  std::vector<JsonReader> array(const std::string& key) const;

 private:
  std::string child(const std::string& key) const;
  const nlohmann::json& at(const std::string& key) const;

  const nlohmann::json& j_;
  std::string path_;
};

}  // namespace mgsos
