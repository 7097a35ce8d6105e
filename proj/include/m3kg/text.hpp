#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace m3kg::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Replaces every run of whitespace (including newlines) with one space and trims.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

/// Lowercased alphanumeric tokens, in order of appearance.
std::vector<std::string> tokens(std::string_view s);
std::set<std::string> token_set(std::string_view s);

/// |A ∩ B| / |A ∪ B| over token sets; 0 when both are empty.
double token_overlap(std::string_view a, std::string_view b);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

/// Single-pass `{NAME}` substitution. Only names present in `values` are
/// replaced; other braces are copied literally and substituted text is never
/// rescanned.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace m3kg::text
