#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "impress/errors.hpp"

namespace impress {

// Comma splitting without quoting rules: fields in this project's CSVs
// (ids, relative paths, numbers) never contain commas.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

// All non-empty lines, trailing carriage returns stripped.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

inline double parse_double_field(const std::string& field, const std::string& context) {
    double v = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw DataFormatError(context + ": not a number: '" + field + "'");
    return v;
}

}  // namespace impress
