#include "mgsos/json_util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mgsos/error.hpp"

namespace mgsos {

nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col),
                      std::string("JSON syntax error: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

JsonReader::JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
}

std::string JsonReader::child(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool JsonReader::has(const std::string& key) const { return j_.contains(key); }

const nlohmann::json& JsonReader::at(const std::string& key) const {
  if (!j_.contains(key)) throw ConfigError(child(key), "required field is missing");
  return j_.at(key);
}

void JsonReader::allow_keys(std::initializer_list<const char*> allowed) const {
  for (const auto& [k, v] : j_.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return k == a; });
    if (!ok) throw ConfigError(child(k), "unknown field");
  }
}

void JsonReader::require_schema_version() const {
  const int v = integer("schema_version");
  if (v != kSchemaVersion) {
    throw ConfigError(child("schema_version"),
                      "unsupported version " + std::to_string(v) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
  }
}

double JsonReader::number(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number()) throw ConfigError(child(key), "expected a number");
  return v.get<double>();
}

std::optional<double> JsonReader::optional_number(const std::string& key) const {
  if (!has(key) || j_.at(key).is_null()) return std::nullopt;
  return number(key);
}

int JsonReader::integer(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
  return v.get<int>();
}

std::uint64_t JsonReader::unsigned_integer(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError(child(key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string JsonReader::string(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_string()) throw ConfigError(child(key), "expected a string");
  return v.get<std::string>();
}

JsonReader JsonReader::object(const std::string& key) const { return JsonReader(at(key), child(key)); }

std::vector<JsonReader> JsonReader::array(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_array()) throw ConfigError(child(key), "expected an array");
  std::vector<JsonReader> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.emplace_back(v[i], child(key) + "[" + std::to_string(i) + "]");
  }
  return out;
}

}  // namespace mgsos
