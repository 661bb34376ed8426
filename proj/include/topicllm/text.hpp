#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers and prompt renderers.
namespace topicllm::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Replaces every run of whitespace with a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Number of UTF-8 code points; invalid lead bytes count as one each.
std::size_t codepoint_count(std::string_view s);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// First 8 bytes of SHA-256 as an integer, for seed derivation.
std::uint64_t sha256_u64(std::string_view bytes);

/// Replaces `{name}` occurrences in `tmpl`.
std::string replace_all(std::string tmpl, std::string_view needle,
                        std::string_view replacement);

}  // namespace topicllm::text
