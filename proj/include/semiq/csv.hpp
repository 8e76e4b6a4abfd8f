#pragma once

// Deterministic text artifacts: CSV tables with 17-significant-digit numeric
// fields (lossless binary64 round-trip) and the flat key = value manifest.
// Non-finite values print as empty fields.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "semiq/errors.hpp"

namespace semiq {

/// %.17g: shortest text that reparses to the exact same binary64.
inline std::string fmt17(double v) {
    if (v == 0.0) return "0";  // fold negative zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// CSV/manifest field: numbers at full precision, empty when undefined.
inline std::string num_field(double v) { return std::isfinite(v) ? fmt17(v) : std::string(); }

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << content;
    if (!out) throw ConfigError("failed writing output file '" + path + "'");
}

/// Row-oriented CSV builder; all quoting-free fields (numbers and labels).
class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header) { append_row(header); }

    void append_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) text_ += ',';
            text_ += fields[i];
        }
        text_ += '\n';
    }

    const std::string& text() const { return text_; }

private:
    std::string text_;
};

}  // namespace semiq
