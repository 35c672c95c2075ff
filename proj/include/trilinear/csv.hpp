// Copyright 2026 The trilinear-sense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace trilinear::csv {

/// Locale-independent shortest-general formatting with `digits` significant digits.
inline std::string format_double(double x, int digits = 12) {
    if (x == 0.0) return "0";  // folds -0 as well
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, digits);
    if (res.ec != std::errc()) return "nan";
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double &out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

/// Rectangular numeric table with a mandatory header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void write(std::ostream &os, int digits = 12) const {
        for (size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
        os << '\n';
        for (const auto &row : rows) {
            for (size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c], digits);
            os << '\n';
        }
    }

    /// Index of `name` or npos.
    size_t column(std::string_view name) const {
        for (size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == name) return c;
        return static_cast<size_t>(-1);
    }
};

}  // namespace trilinear::csv
