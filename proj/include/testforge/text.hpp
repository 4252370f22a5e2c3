#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace testforge {

bool is_valid_utf8(std::string_view s);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);  // throws SchemaMismatch on bad input

// Lossy decode for display only: invalid bytes become U+FFFD sequences.
std::string sanitize_for_display(std::string_view bytes);

std::string trim(std::string_view s);

// Strips trailing whitespace from every line and drops trailing blank lines.
// Used by the TrimTrailing comparison policy.
std::string strip_trailing_whitespace(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);

std::string read_file(const std::string& path);            // throws IoError
void write_file(const std::string& path, std::string_view content);
void write_file_atomic(const std::string& path, std::string_view content);

std::string lowercase(std::string_view s);

std::string now_iso8601_utc();

bool starts_with(std::string_view s, std::string_view prefix);

// Replaces every occurrence of `from` in `text`.
std::string replace_all(std::string text, std::string_view from, std::string_view to);

}  // namespace testforge
