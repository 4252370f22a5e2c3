#include "testforge/json_util.hpp"

#include "testforge/errors.hpp"
#include "testforge/text.hpp"

namespace testforge {

nlohmann::json bytes_to_json(const std::string& bytes) {
    if (is_valid_utf8(bytes)) return bytes;
    return nlohmann::json{{"b64", base64_encode(bytes)}};
}

std::string bytes_from_json(const nlohmann::json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_object() && value.contains("b64"))
        return base64_decode(value.at("b64").get<std::string>());
    throw SchemaMismatch("expected string or {\"b64\": ...} value");
}

nlohmann::json optional_bytes_to_json(const std::optional<std::string>& bytes) {
    if (!bytes) return nullptr;
    return bytes_to_json(*bytes);
}

std::optional<std::string> optional_bytes_from_json(const nlohmann::json& value) {
    if (value.is_null()) return std::nullopt;
    return bytes_from_json(value);
}

}  // namespace testforge
