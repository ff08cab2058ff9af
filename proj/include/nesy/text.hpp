#pragma once

// Small text helpers shared by the file-format readers.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace nesy::text {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::string_view strip_comment(std::string_view s) {
    const auto pos = s.find('#');
    return pos == std::string_view::npos ? s : s.substr(0, pos);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.size() - start : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) {
            ++i;
        }
        const auto start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

inline std::string where(std::size_t line) { return "line " + std::to_string(line); }

inline std::size_t parse_index(std::string_view tok, std::size_t line) {
    std::size_t value = 0;
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc{} || ptr != end || tok.empty()) {
        fail(ErrorKind::parse, where(line) + ": expected a non-negative integer, got '" + std::string(tok) + "'");
    }
    return value;
}

inline double parse_real(std::string_view tok, std::size_t line) {
    // from_chars for double is unavailable on older libstdc++; strtod on a copy is fine.
    const std::string copy(tok);
    char* end = nullptr;
    const double value = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size()) {
        fail(ErrorKind::parse, where(line) + ": expected a real number, got '" + copy + "'");
    }
    return value;
}

// Parses `key=value` tokens of a header line into (key, value) pairs.
inline std::vector<std::pair<std::string, std::string>> parse_header(std::string_view line, std::size_t lineno) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto tok : split_ws(line)) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorKind::parse, where(lineno) + ": malformed header token '" + std::string(tok) + "'");
        }
        out.emplace_back(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    return out;
}

// Round-trippable decimal rendering of a double.
inline std::string real(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

inline std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

} // namespace nesy::text
