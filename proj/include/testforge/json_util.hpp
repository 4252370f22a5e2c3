#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace testforge {

// Output text can contain arbitrary bytes (student programs print whatever
// they like). JSON strings must be UTF-8, so non-UTF-8 payloads are stored as
// {"b64": ...} and everything else as a plain string.
nlohmann::json bytes_to_json(const std::string& bytes);
std::string bytes_from_json(const nlohmann::json& value);

nlohmann::json optional_bytes_to_json(const std::optional<std::string>& bytes);
std::optional<std::string> optional_bytes_from_json(const nlohmann::json& value);

}  // namespace testforge
