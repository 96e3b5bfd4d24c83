#pragma once

// Minimal CSV writing and reading with fixed numeric formatting.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wsaw/error.hpp"

namespace wsaw {

/// %.12g, the precision used in every emitted table.
inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != header.size()) throw Error("CSV row width does not match header");
        rows.push_back(std::move(row));
    }

    std::string str() const {
        std::ostringstream out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out.str();
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write " + path);
        f << str();
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw Error("no column '" + name + "'");
    }

    std::vector<double> numeric_column(const std::string& name) const {
        const std::size_t k = column(name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(std::stod(r[k]));
        return out;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            t.header = split_csv_line(line);
            first = false;
        } else {
            t.add_row(split_csv_line(line));
        }
    }
    if (first) throw Error("CSV has no header");
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace wsaw
