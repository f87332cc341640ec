/*
 * morphoscope — deformation-based morphometry toolkit
 *
 * Copyright 2026 the morphoscope authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MORPHO_CSV_HPP
#define MORPHO_CSV_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "morpho/volume.hpp"

namespace morpho {

// Numbers are rendered with 6 significant digits everywhere so repeated
// runs produce byte-identical CSVs.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

namespace csv {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::vector<std::vector<std::string>> read_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path + ": cannot open for reading");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split(line));
    }
    return rows;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw validation_error("cannot parse " + what + " from '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw validation_error("cannot parse " + what + " from '" + s + "'");
    }
}

// Column lookup for a fixed-schema header row.
inline std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header,
                                                       const std::vector<std::string>& required,
                                                       const std::string& path) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.size(); ++i) idx[header[i]] = i;
    for (const auto& col : required)
        if (idx.find(col) == idx.end())
            throw validation_error(path + ": missing column '" + col + "'");
    return idx;
}

} // namespace csv

enum class Group { CN, AD };

inline std::string to_string(Group g) { return g == Group::CN ? "CN" : "AD"; }

inline Group group_from_string(const std::string& s) {
    if (s == "CN") return Group::CN;
    if (s == "AD") return Group::AD;
    throw validation_error("unknown group '" + s + "' (expected CN or AD)");
}

struct CohortRow {
    std::string subject_id;
    std::string scan_id;
    double age = 0.0;
    Group group = Group::CN;
    double cdr = 0.0;
    std::string path;
};

struct CohortTable {
    std::vector<CohortRow> rows;

    void validate() const {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& r : rows) {
            if (!seen.insert({r.subject_id, r.scan_id}).second)
                throw validation_error("duplicate (subject_id, scan_id): " + r.subject_id +
                                       ", " + r.scan_id);
            if (!(r.age > 0.0))
                throw validation_error("scan " + r.scan_id + ": age must be positive");
            if (r.cdr != 0.0 && r.cdr != 0.5 && r.cdr != 1.0 && r.cdr != 2.0)
                throw validation_error("scan " + r.scan_id + ": cdr must be one of 0, 0.5, 1, 2");
            if (r.group == Group::CN && r.cdr != 0.0)
                throw validation_error("scan " + r.scan_id + ": CN rows must have cdr = 0");
        }
    }
};

inline const std::vector<std::string>& cohort_columns() {
    static const std::vector<std::string> cols = {"subject_id", "scan_id", "age",
                                                  "group",      "cdr",     "path"};
    return cols;
}

inline CohortTable read_cohort_csv(const std::string& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty()) throw validation_error(path + ": empty cohort file");
    const auto idx = csv::header_index(rows[0], cohort_columns(), path);
    CohortTable table;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < rows[0].size())
            throw validation_error(path + ": row " + std::to_string(i + 1) + " has too few fields");
        CohortRow row;
        row.subject_id = r[idx.at("subject_id")];
        row.scan_id = r[idx.at("scan_id")];
        row.age = csv::parse_double(r[idx.at("age")], "age");
        row.group = group_from_string(r[idx.at("group")]);
        row.cdr = csv::parse_double(r[idx.at("cdr")], "cdr");
        row.path = r[idx.at("path")];
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

inline void write_cohort_csv(const CohortTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps LF endings everywhere
    if (!out) throw io_error(path + ": cannot open for writing");
    out << "subject_id,scan_id,age,group,cdr,path\n";
    for (const auto& r : table.rows)
        out << r.subject_id << ',' << r.scan_id << ',' << format_number(r.age) << ','
            << to_string(r.group) << ',' << format_number(r.cdr) << ',' << r.path << '\n';
    if (!out) throw io_error(path + ": write failed");
}

struct RegionScoreRow {
    std::string scan_id;
    std::string region_name;
    std::string score_kind; // "AS" or "ADS"
    double value = 0.0;
    int n_voxels = 0;
    double quantile = 0.0;
};

inline void write_scores_csv(const std::vector<RegionScoreRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << "scan_id,region_name,score_kind,value,n_voxels,quantile\n";
    for (const auto& r : rows) {
        if (r.n_voxels <= 0)
            throw validation_error("score row " + r.scan_id + "/" + r.region_name +
                                   ": n_voxels must be positive");
        if (r.quantile < 0.0 || r.quantile > 0.9)
            throw validation_error("score row " + r.scan_id + "/" + r.region_name +
                                   ": quantile outside [0, 0.9]");
        out << r.scan_id << ',' << r.region_name << ',' << r.score_kind << ','
            << format_number(r.value) << ',' << r.n_voxels << ','
            << format_number(r.quantile) << '\n';
    }
    if (!out) throw io_error(path + ": write failed");
}

inline std::vector<RegionScoreRow> read_scores_csv(const std::string& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty()) throw validation_error(path + ": empty scores file");
    static const std::vector<std::string> cols = {"scan_id", "region_name", "score_kind",
                                                  "value",   "n_voxels",    "quantile"};
    const auto idx = csv::header_index(rows[0], cols, path);
    std::vector<RegionScoreRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        RegionScoreRow row;
        row.scan_id = r[idx.at("scan_id")];
        row.region_name = r[idx.at("region_name")];
        row.score_kind = r[idx.at("score_kind")];
        row.value = csv::parse_double(r[idx.at("value")], "value");
        row.n_voxels = csv::parse_int(r[idx.at("n_voxels")], "n_voxels");
        row.quantile = csv::parse_double(r[idx.at("quantile")], "quantile");
        out.push_back(std::move(row));
    }
    return out;
}

// Plot-ready statistics outputs.
struct FitRow {
    std::string region;
    double q = 0.0;
    double slope = 0.0, intercept = 0.0, r2 = 0.0, p = 1.0;
};

inline void write_fits_csv(const std::vector<FitRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << "region,q,slope,intercept,r2,p\n";
    for (const auto& r : rows)
        out << r.region << ',' << format_number(r.q) << ',' << format_number(r.slope) << ','
            << format_number(r.intercept) << ',' << format_number(r.r2) << ','
            << format_number(r.p) << '\n';
    if (!out) throw io_error(path + ": write failed");
}

struct ComparisonRow {
    std::string region;
    std::string score_kind;
    std::string pair; // e.g. "CN_vs_CDR0.5"
    double t = 0.0, p_raw = 1.0, p_bonf = 1.0;
    std::string stars;
    double d = 0.0;
    std::string band;
};

inline void write_comparisons_csv(const std::vector<ComparisonRow>& rows,
                                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << "region,score_kind,pair,t,p_raw,p_bonf,stars,d,band\n";
    for (const auto& r : rows)
        out << r.region << ',' << r.score_kind << ',' << r.pair << ',' << format_number(r.t)
            << ',' << format_number(r.p_raw) << ',' << format_number(r.p_bonf) << ','
            << r.stars << ',' << format_number(r.d) << ',' << r.band << '\n';
    if (!out) throw io_error(path + ": write failed");
}

} // namespace morpho

#endif // MORPHO_CSV_HPP
