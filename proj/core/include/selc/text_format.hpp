#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selc {

/// Shortest decimal representation that parses back to the identical
/// double. All text outputs go through this so files round-trip exactly.
std::string format_double(double value);

/// Strict parse: the whole token must be consumed. Accepts a leading '+'.
std::optional<double> try_parse_double(std::string_view token);
std::optional<std::int64_t> try_parse_int(std::string_view token);

std::string_view trim(std::string_view s) noexcept;

/// Splits on `sep` without collapsing empty fields.
std::vector<std::string_view> split(std::string_view s, char sep);

/// Whitespace tokenizer (spaces and tabs).
std::vector<std::string_view> split_ws(std::string_view s);

/// Comma-separated list of doubles, e.g. "0,1,10". Throws ConfigError.
std::vector<double> parse_double_list(std::string_view text);

/// 64-bit FNV-1a, used to fingerprint configurations in output headers.
std::uint64_t fnv1a64(std::string_view data) noexcept;

std::string hex64(std::uint64_t value);

}  // namespace selc
