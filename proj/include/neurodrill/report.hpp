#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/event_io.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace neurodrill {

constexpr const char* kFailToken = "FAIL";

/// Shortest text that reads back to the same double; non-finite values become FAIL.
inline std::string format_number(double x) {
    if (!std::isfinite(x)) return kFailToken;
    char buf[40];
    if (x == std::trunc(x) && std::abs(x) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", x);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

inline std::string format_number(std::uint64_t x) { return std::to_string(x); }
inline std::string format_number(int x) { return std::to_string(x); }

/// Comma-separated table with one header row.
class Report {
public:
    explicit Report(std::vector<std::string> header) : header_(std::move(header)) {
        if (header_.empty()) fail(ErrorCode::InvalidArgument, "report needs at least one column");
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size())
            fail(ErrorCode::InvalidArgument, "row has " + std::to_string(cells.size()) + " cells, header has " +
                                                 std::to_string(header_.size()));
        rows_.push_back(std::move(cells));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name) return i;
        fail(ErrorCode::InvalidArgument, "no column " + name);
    }

    std::string to_csv() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += quote(cells[i]);
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    void write(const std::filesystem::path& path) const { write_atomic(path, to_csv()); }

private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace neurodrill
