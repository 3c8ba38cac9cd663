#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mimo_crlb/errors.hpp"
#include "mimo_crlb/fisher.hpp"
#include "mimo_crlb/geometry.hpp"
#include "mimo_crlb/montecarlo.hpp"

namespace mimo_crlb::io {

using nlohmann::json;

inline constexpr int kCsvSchemaVersion = 1;

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw IoError("format_double: conversion failed");
    return std::string(buf.data(), end);
}

namespace detail {

inline Vec3 vec3_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(where + ": expected an array of 3 numbers");
    Vec3 v;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ValidationError(where + ": expected an array of 3 numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline PlatformState platform_from(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("pos")) throw ValidationError(where + ": expected {pos, vel}");
    PlatformState p;
    p.position = vec3_from(j.at("pos"), where + ".pos");
    p.velocity = j.contains("vel") ? vec3_from(j.at("vel"), where + ".vel") : Vec3::Zero();
    return p;
}

inline std::vector<PlatformState> platforms_from(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw ValidationError("scenario: missing array '" + key + "'");
    std::vector<PlatformState> out;
    for (std::size_t i = 0; i < j.at(key).size(); ++i) {
        out.push_back(platform_from(j.at(key)[i], key + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json platform_to_json(const PlatformState& p) {
    return json{{"pos", vec_to_json(p.position)}, {"vel", vec_to_json(p.velocity)}};
}

}  // namespace detail

/// Parses `{txs, rxs, target, sigma0, R}`. Syntax errors surface as
/// ValidationError carrying nlohmann's line/column message.
inline Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("scenario JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("scenario: top level must be an object");
    Scenario s;
    s.txs = detail::platforms_from(j, "txs");
    s.rxs = detail::platforms_from(j, "rxs");
    if (!j.contains("target")) throw ValidationError("scenario: missing 'target'");
    s.target = detail::platform_from(j.at("target"), "target");
    if (j.contains("sigma0")) {
        if (!j.at("sigma0").is_number()) throw ValidationError("scenario: sigma0 must be a number");
        s.sigma0 = j.at("sigma0").get<double>();
    }
    if (!j.contains("R") || !j.at("R").is_number()) throw ValidationError("scenario: missing number 'R'");
    s.surveillance_radius = j.at("R").get<double>();
    validate(s);
    return s;
}

inline json scenario_to_json(const Scenario& s) {
    json txs = json::array(), rxs = json::array();
    for (const auto& p : s.txs) txs.push_back(detail::platform_to_json(p));
    for (const auto& p : s.rxs) rxs.push_back(detail::platform_to_json(p));
    return json{{"txs", txs},
                {"rxs", rxs},
                {"target", detail::platform_to_json(s.target)},
                {"sigma0", s.sigma0},
                {"R", s.surveillance_radius}};
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Scenario load_scenario(const std::string& path) { return scenario_from_json(read_file(path)); }

inline json matrix_to_json(const Mat6& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < 6; ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < 6; ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline const char* kStudyHeader =
    "trial,w,f_alpha0,f_local,f_opt,X_local,Y_local,X_opt,Y_opt,cluster,evals_pso";

inline void write_study_csv(std::ostream& out, const std::vector<StudyRecord>& records) {
    out << "# schema=" << kCsvSchemaVersion << '\n' << kStudyHeader << '\n';
    for (const auto& r : records) {
        out << r.trial << ',' << format_double(r.w) << ',' << format_double(r.f_alpha0) << ','
            << format_double(r.f_local) << ',' << format_double(r.f_opt) << ',' << format_double(r.x_local) << ','
            << format_double(r.y_local) << ',' << format_double(r.x_opt) << ',' << format_double(r.y_opt) << ','
            << to_string(r.cluster.label) << ',' << r.evals_pso << '\n';
    }
}

/// Rows `w,variable,value,fraction` for X/Y of the local and global
/// solutions, one CDF per (w, variable).
inline void write_cdf_csv(std::ostream& out, const std::vector<StudyRecord>& records,
                          const std::vector<double>& w_values) {
    out << "# schema=" << kCsvSchemaVersion << '\n' << "w,variable,value,fraction\n";
    struct Column {
        const char* name;
        double StudyRecord::*field;
    };
    static constexpr Column columns[] = {{"X_local", &StudyRecord::x_local},
                                         {"Y_local", &StudyRecord::y_local},
                                         {"X_opt", &StudyRecord::x_opt},
                                         {"Y_opt", &StudyRecord::y_opt}};
    for (double w : w_values) {
        for (const auto& col : columns) {
            std::vector<double> vals;
            for (const auto& r : records) {
                if (r.w == w) vals.push_back(r.*col.field);
            }
            if (vals.empty()) continue;
            for (const auto& [v, frac] : cdf(std::move(vals))) {
                out << format_double(w) << ',' << col.name << ',' << format_double(v) << ','
                    << format_double(frac) << '\n';
            }
        }
    }
}

/// Rows `w,cluster,count,fraction`.
inline void write_cluster_csv(std::ostream& out, const std::vector<StudyRecord>& records,
                              const std::vector<double>& w_values) {
    out << "# schema=" << kCsvSchemaVersion << '\n' << "w,cluster,count,fraction\n";
    for (double w : w_values) {
        const auto counts = cluster_counts(records, w);
        std::size_t total = 0;
        for (auto c : counts) total += c;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double frac = total ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
            out << format_double(w) << ",C" << (i + 1) << ',' << counts[i] << ',' << format_double(frac) << '\n';
        }
    }
}

/// "out/study.csv" -> "out/study_cdf.csv".
inline std::string companion_path(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix + ".csv";
    return path.substr(0, dot) + suffix + path.substr(dot);
}

}  // namespace mimo_crlb::io
