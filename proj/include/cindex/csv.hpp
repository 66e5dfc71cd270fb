#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cindex/dataset.hpp"
#include "cindex/errors.hpp"

namespace cindex {

// Canonical dataset schema: header "x1,...,xd,t,delta", '#' comment lines,
// delta in {0,1}. Times are serialized with 17 significant digits so a
// write/read round trip is exact.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string()
                                             : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline double parse_double(const std::string& s, const std::string& what,
                           std::size_t line_no) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError("line " + std::to_string(line_no) + ": bad " + what +
                          " value '" + s + "'");
    }
}

}  // namespace detail

inline Dataset read_csv(std::istream& in) {
    Dataset data;
    std::string line;
    std::size_t line_no = 0;
    int d = -1;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        auto fields = detail::split_csv_line(line);
        if (!header_seen) {
            if (fields.size() < 3 || fields.back() != "delta" ||
                fields[fields.size() - 2] != "t")
                throw SchemaError("expected header x1,...,xd,t,delta");
            d = static_cast<int>(fields.size()) - 2;
            for (int j = 0; j < d; ++j) {
                if (fields[static_cast<std::size_t>(j)] !=
                    "x" + std::to_string(j + 1))
                    throw SchemaError("expected covariate column x" +
                                      std::to_string(j + 1));
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != static_cast<std::size_t>(d) + 2)
            throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(d + 2) + " fields, got " +
                              std::to_string(fields.size()));
        ObservedTriple obs;
        obs.x.resize(d);
        for (int j = 0; j < d; ++j)
            obs.x[j] = detail::parse_double(fields[static_cast<std::size_t>(j)],
                                            "covariate", line_no);
        obs.t = detail::parse_double(fields[static_cast<std::size_t>(d)], "time",
                                     line_no);
        const std::string& ds = fields[static_cast<std::size_t>(d) + 1];
        if (ds == "0")
            obs.delta = 0;
        else if (ds == "1")
            obs.delta = 1;
        else
            throw SchemaError("line " + std::to_string(line_no) +
                              ": delta must be 0 or 1, got '" + ds + "'");
        data.push_back(std::move(obs));
    }
    if (!header_seen) throw SchemaError("empty CSV: no header found");
    if (data.empty()) throw SchemaError("CSV contains a header but no rows");
    dataset_dim(data);
    return data;
}

inline Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open input file: " + path);
    return read_csv(in);
}

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const Dataset& data,
                      const std::vector<std::string>& comments = {}) {
    const int d = dataset_dim(data);
    for (const auto& c : comments) out << "# " << c << "\n";
    for (int j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
    out << "t,delta\n";
    for (const auto& obs : data) {
        for (int j = 0; j < d; ++j) out << format_g17(obs.x[j]) << ",";
        out << format_g17(obs.t) << "," << obs.delta << "\n";
    }
}

inline void write_csv_file(const std::string& path, const Dataset& data,
                           const std::vector<std::string>& comments = {}) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot open output file: " + path);
    write_csv(out, data, comments);
}

}  // namespace cindex
