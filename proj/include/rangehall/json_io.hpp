#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "rangehall/error.hpp"
#include "rangehall/time.hpp"

namespace rangehall {

using Json = nlohmann::json;

/// Canonical interchange encoding: keys sorted (nlohmann's default map),
/// two-space indent, trailing LF.
inline std::string canonical_dump(const Json& value) { return value.dump(2) + "\n"; }

/// One-line form used for JSON Lines records.
inline std::string compact_dump(const Json& value) { return value.dump(); }

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column_at(std::string_view text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline bool looks_like_integer(const std::string& s) {
  std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

inline std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

inline Json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      if (s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
      if (s == "true" || s == "True" || s == "TRUE") return true;
      if (s == "false" || s == "False" || s == "FALSE") return false;
      if (looks_like_integer(s)) {
        try {
          return std::stoll(s);
        } catch (const std::out_of_range&) {
          return s;
        }
      }
      if (auto d = to_double(s); d && s.find_first_of(".eE") != std::string::npos) return *d;
      return s;
    }
  }
  return nullptr;
}

}  // namespace detail

/// Parses a document that is either JSON (first significant character is
/// '{' or '[') or YAML. Returns the generic tree; malformed input raises
/// SyntaxError with a 1-based line/column.
inline Json parse_document(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && (text[first] == '{' || text[first] == '[')) {
    try {
      return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
      const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
      auto [line, column] = detail::line_column_at(text, offset);
      throw SyntaxError(line, column, e.what());
    }
  }
  try {
    return detail::yaml_to_json(YAML::Load(std::string(text)));
  } catch (const YAML::ParserException& e) {
    throw SyntaxError(static_cast<std::size_t>(e.mark.line + 1), static_cast<std::size_t>(e.mark.column + 1),
                      e.msg);
  }
}

inline Json parse_json_line(std::string_view line, std::size_t line_number) {
  try {
    return Json::parse(line.begin(), line.end());
  } catch (const Json::parse_error& e) {
    throw SyntaxError(line_number, e.byte == 0 ? 1 : e.byte, e.what());
  }
}

/// Strict reader over one JSON object: every key must be consumed, every
/// required key present, every value of the expected type. Failures are
/// SchemaError with a JSON-pointer location.
class ObjectReader {
 public:
  ObjectReader(const Json& value, std::string location) : value_(value), location_(std::move(location)) {
    if (!value_.is_object()) fail(location_, "expected an object");
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  const std::string& location() const { return location_; }
  std::string at(std::string_view key) const { return location_ + "/" + std::string(key); }

  bool has(const std::string& key) const {
    auto it = value_.find(key);
    return it != value_.end() && !it->is_null();
  }

  const Json& required(const std::string& key) {
    seen_.insert(key);
    auto it = value_.find(key);
    if (it == value_.end() || it->is_null()) fail(at(key), "missing required field");
    return *it;
  }

  const Json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = value_.find(key);
    if (it == value_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string string(const std::string& key) { return as_string(required(key), at(key)); }
  std::string string_or(const std::string& key, std::string fallback) {
    const Json* v = optional(key);
    return v ? as_string(*v, at(key)) : std::move(fallback);
  }
  std::int64_t integer(const std::string& key) { return as_integer(required(key), at(key)); }
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) {
    const Json* v = optional(key);
    return v ? as_integer(*v, at(key)) : fallback;
  }
  std::optional<std::int64_t> maybe_integer(const std::string& key) {
    const Json* v = optional(key);
    if (!v) return std::nullopt;
    return as_integer(*v, at(key));
  }
  double number(const std::string& key) { return as_number(required(key), at(key)); }
  double number_or(const std::string& key, double fallback) {
    const Json* v = optional(key);
    return v ? as_number(*v, at(key)) : fallback;
  }
  bool boolean(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_boolean()) fail(at(key), "expected a boolean");
    return v.get<bool>();
  }
  bool boolean_or(const std::string& key, bool fallback) {
    const Json* v = optional(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(at(key), "expected a boolean");
    return v->get<bool>();
  }
  Timestamp timestamp(const std::string& key) {
    const std::string text = string(key);
    try {
      return parse_timestamp(text);
    } catch (const Error& e) {
      fail(at(key), e.what());
    }
  }
  std::vector<std::string> strings_or_empty(const std::string& key) {
    std::vector<std::string> out;
    const Json* v = optional(key);
    if (!v) return out;
    if (!v->is_array()) fail(at(key), "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_string((*v)[i], at(key) + "/" + std::to_string(i)));
    return out;
  }

  /// Calls fn(element, location) for each element; a missing key is an empty array.
  template <typename Fn>
  void each(const std::string& key, Fn&& fn) {
    const Json* v = optional(key);
    if (!v) return;
    if (!v->is_array()) fail(at(key), "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) fn((*v)[i], at(key) + "/" + std::to_string(i));
  }

  /// Rejects keys that no accessor asked for.
  void finish() const {
    for (auto it = value_.begin(); it != value_.end(); ++it)
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown field");
  }

  [[noreturn]] static void fail(const std::string& location, const std::string& message) {
    throw Error(ErrorCode::SchemaError, location + ": " + message);
  }

  static std::string as_string(const Json& v, const std::string& location) {
    if (!v.is_string()) fail(location, "expected a string");
    return v.get<std::string>();
  }
  static std::int64_t as_integer(const Json& v, const std::string& location) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
    }
    fail(location, "expected an integer");
  }
  static double as_number(const Json& v, const std::string& location) {
    if (!v.is_number()) fail(location, "expected a number");
    return v.get<double>();
  }

 private:
  const Json& value_;
  std::string location_;
  std::set<std::string> seen_;
};

}  // namespace rangehall
