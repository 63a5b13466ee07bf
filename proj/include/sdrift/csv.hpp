#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "sdrift/errors.hpp"

namespace sdrift {

/// Formats a double with 17 significant digits.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> header) : out_(path), columns_(header.size()) {
        if (!out_) throw UsageError("cannot open CSV output file: " + path);
        write_fields(header);
    }

    template <class... Ts>
    void row(const Ts&... values) {
        if (sizeof...(Ts) != columns_) throw UsageError("CSV row width does not match the header");
        std::vector<std::string> fields;
        fields.reserve(sizeof...(Ts));
        (fields.push_back(field(values)), ...);
        write_fields(fields);
    }

private:
    std::ofstream out_;
    std::size_t columns_;

    template <class T>
    static std::string field(const T& v) {
        if constexpr (std::is_same_v<T, bool>) {
            return v ? "1" : "0";
        } else if constexpr (std::is_floating_point_v<T>) {
            return format_real(static_cast<double>(v));
        } else if constexpr (std::is_integral_v<T>) {
            return std::to_string(v);
        } else {
            return std::string(v);
        }
    }

    void write_fields(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
        out_ << '\n';
    }
};

/// Header plus rows of raw string fields; no quoting (the writer never emits commas inside fields).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw UsageError("CSV has no column '" + name + "'");
    }

    double real(std::size_t row, const std::string& name) const {
        const auto& s = rows.at(row).at(column(name));
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw UsageError("CSV field '" + s + "' in column '" + name + "' is not a number");
        return v;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open CSV file: " + path);
    const auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) out.push_back(f);
        if (!line.empty() && line.back() == ',') out.emplace_back();
        return out;
    };
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw UsageError("empty CSV file: " + path);
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto r = split(line);
        if (r.size() != t.header.size()) throw UsageError("CSV row width mismatch in " + path);
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace sdrift
