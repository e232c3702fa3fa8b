#pragma once

// Small text helpers shared by the line-oriented file formats.

#include <charconv>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hierref::text {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename Int>
Int parse_int(std::string_view s) {
    Int value{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    }
    return value;
}

inline double parse_double(std::string_view s) {
    const std::string owned(trim(s));
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(owned, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + owned + "'");
    }
    if (used != owned.size()) throw std::invalid_argument("not a number: '" + owned + "'");
    return value;
}

inline std::vector<int> parse_int_list(std::string_view s, char sep = ',') {
    std::vector<int> out;
    if (trim(s).empty()) return out;
    for (auto part : split(s, sep)) out.push_back(parse_int<int>(trim(part)));
    return out;
}

/// Parses whitespace-separated `key=value` tokens; bare tokens are ignored.
inline std::map<std::string, std::string> parse_tokens(std::string_view line) {
    std::map<std::string, std::string> out;
    for (auto tok : split(line, ' ')) {
        tok = trim(tok);
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) continue;
        out.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    return out;
}

}  // namespace hierref::text
