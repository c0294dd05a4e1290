#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wkw {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercases, trims, and collapses internal whitespace runs to one space.
std::string collapse_whitespace(std::string_view s);

// Identity key for entity names: collapse_whitespace + lowercase, then
// repeatedly strip trailing legal-form tokens (inc, corp, llc, ltd, co, gmbh,
// ag, plc, corporation; with or without a trailing dot) and trailing commas.
// A single-token name is never reduced to empty.
std::string normalize_name(std::string_view raw);

// Lowercase alphanumeric runs; everything else is a separator.
std::vector<std::string> tokenize(std::string_view s);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// fnv1a64 rendered as 16 lowercase hex digits.
std::string content_hash(std::string_view data);

}  // namespace wkw
