#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eitsim/errors.hpp"

// CSV persistence with fixed 17-significant-digit formatting so identical runs
// diff byte-identical.

namespace eitsim::csv {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline void write(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    for (size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ",";
        out << table.columns[c];
    }
    out << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) {
            throw DimensionError("csv row width mismatch in " + path);
        }
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out << ",";
            out << format_number(row[c]);
        }
        out << "\n";
    }
}

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty csv: " + path);
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) t.columns.push_back(cell);
    if (t.columns.empty()) throw ConfigError("csv header has no columns: " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("non-numeric csv cell '" + cell + "' in " + path);
            }
        }
        if (row.size() != t.columns.size()) {
            throw ConfigError("ragged csv row in " + path);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace eitsim::csv
