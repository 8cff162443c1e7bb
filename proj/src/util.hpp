#ifndef DCRL_UTIL_HPP_
#define DCRL_UTIL_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dcrl {

// Shortest decimal text that parses back to the identical double.
std::string format_exact(double value);

// Whole-string parse; rejects trailing garbage and empty input.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, std::int64_t& out);

std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

// 64-bit FNV-1a, stable across platforms (used for manifest hashes).
std::uint64_t fnv1a64(std::string_view data);

}  // namespace dcrl

#endif  // DCRL_UTIL_HPP_
