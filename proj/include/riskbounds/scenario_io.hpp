#pragma once

#include "riskbounds/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace riskbounds {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadOptions {
    bool auto_normalize = false; // rescale non-unit obstacle normals instead of failing
    bool strict_plan = false;    // plan drift becomes an error instead of a warning
};

struct LoadResult {
    Scenario scenario;
    std::vector<std::string> warnings;
};

namespace detail {

using nlohmann::json;

inline const json& require_field(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError("missing field '" + key + "' in " + where);
    return *it;
}

inline Eigen::MatrixXd parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw ParseError(where + " must be a non-empty array of rows");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            throw ParseError(where + " row " + std::to_string(r) + " has inconsistent length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) {
                throw ParseError(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                                 "] is not a number");
            }
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

inline Eigen::VectorXd parse_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + " must be an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(where + "[" + std::to_string(i) + "] is not a number");
        v(i) = j[i].get<double>();
    }
    return v;
}

inline std::vector<Eigen::MatrixXd> parse_matrix_sequence(const json& j, const std::string& name,
                                                          bool time_invariant, int T) {
    std::vector<Eigen::MatrixXd> seq;
    if (time_invariant) {
        seq.assign(T, parse_matrix(j, "system." + name));
    } else {
        if (!j.is_array() || static_cast<int>(j.size()) != T) {
            throw ParseError("system." + name + " must be an array of T matrices");
        }
        seq.reserve(T);
        for (int t = 0; t < T; ++t) {
            seq.push_back(parse_matrix(j[t], "system." + name + "[" + std::to_string(t) + "]"));
        }
    }
    return seq;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

} // namespace detail

inline LoadResult parse_scenario_json(const nlohmann::json& doc, const LoadOptions& opts = {}) {
    using detail::require_field;
    LoadResult result;
    Scenario& sc = result.scenario;

    const auto& plan = require_field(doc, "plan", "document");
    const auto& positions = require_field(plan, "positions", "plan");
    if (!positions.is_array() || positions.size() < 2) {
        throw ParseError("plan.positions must hold at least 2 points");
    }
    for (std::size_t t = 0; t < positions.size(); ++t) {
        sc.plan.positions.push_back(
            detail::parse_vector(positions[t], "plan.positions[" + std::to_string(t) + "]"));
    }
    const auto& inputs = require_field(plan, "inputs", "plan");
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        sc.plan.inputs.push_back(
            detail::parse_vector(inputs[t], "plan.inputs[" + std::to_string(t) + "]"));
    }
    const int T = static_cast<int>(sc.plan.positions.size()) - 1;
    if (static_cast<int>(sc.plan.inputs.size()) != T) {
        throw ParseError("plan.inputs must have one fewer entry than plan.positions");
    }

    const auto& system = require_field(doc, "system", "document");
    bool time_invariant = system.value("time_invariant", false);
    if (system.contains("T")) {
        int declared = system["T"].get<int>();
        if (declared != T) {
            throw ParseError("system.T = " + std::to_string(declared) +
                             " disagrees with plan length T = " + std::to_string(T));
        }
    }
    sc.system.A = detail::parse_matrix_sequence(require_field(system, "A", "system"), "A", time_invariant, T);
    sc.system.B = detail::parse_matrix_sequence(require_field(system, "B", "system"), "B", time_invariant, T);
    sc.system.C = detail::parse_matrix_sequence(require_field(system, "C", "system"), "C", time_invariant, T);
    sc.system.W = detail::parse_matrix_sequence(require_field(system, "W", "system"), "W", time_invariant, T);
    sc.system.V = detail::parse_matrix_sequence(require_field(system, "V", "system"), "V", time_invariant, T);
    sc.system.Q = detail::parse_matrix_sequence(require_field(system, "Q", "system"), "Q", time_invariant, T);
    sc.system.R = detail::parse_matrix_sequence(require_field(system, "R", "system"), "R", time_invariant, T);

    if (doc.contains("obstacles")) {
        const auto& obstacles = doc["obstacles"];
        if (!obstacles.is_array()) throw ParseError("obstacles must be an array");
        for (std::size_t l = 0; l < obstacles.size(); ++l) {
            std::string where = "obstacles[" + std::to_string(l) + "]";
            Polytope poly;
            poly.normals = detail::parse_matrix(require_field(obstacles[l], "A", where), where + ".A");
            poly.offsets = detail::parse_vector(require_field(obstacles[l], "b", where), where + ".b");
            if (poly.normals.rows() != poly.offsets.size()) {
                throw ParseError(where + ": A and b row counts differ");
            }
            if (opts.auto_normalize) poly.normalize();
            poly.validate();
            sc.obstacles.polytopes.push_back(std::move(poly));
        }
    }

    if (doc.contains("bbox")) {
        const auto& bbox = doc["bbox"];
        sc.bbox = std::make_pair(detail::parse_vector(require_field(bbox, "min", "bbox"), "bbox.min"),
                                 detail::parse_vector(require_field(bbox, "max", "bbox"), "bbox.max"));
    }

    if (doc.contains("waypoints")) {
        const auto& wp = doc["waypoints"];
        WaypointPlan plan_meta;
        const auto& pts = require_field(wp, "points", "waypoints");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            Eigen::VectorXd p = detail::parse_vector(pts[i], "waypoints.points[" + std::to_string(i) + "]");
            if (p.size() != 2) throw ParseError("waypoints.points must be planar");
            plan_meta.points.emplace_back(p(0), p(1));
        }
        plan_meta.steps_per_segment = require_field(wp, "steps_per_segment", "waypoints").get<int>();
        plan_meta.z_scale = require_field(wp, "z_scale", "waypoints").get<double>();
        sc.waypoints = std::move(plan_meta);
    }

    Scenario::ValidateOptions vopts;
    vopts.strict_plan = opts.strict_plan;
    vopts.warnings = &result.warnings;
    sc.validate(vopts);
    return result;
}

inline LoadResult load_scenario(const std::string& path, const LoadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("scenario file " + path + ": " + e.what());
    }
    return parse_scenario_json(doc, opts);
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    using detail::matrix_to_json;
    using detail::vector_to_json;
    nlohmann::json doc;

    nlohmann::json system;
    system["time_invariant"] = false;
    auto dump_seq = [&](const char* name, const std::vector<Eigen::MatrixXd>& seq) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& m : seq) arr.push_back(matrix_to_json(m));
        system[name] = std::move(arr);
    };
    dump_seq("A", sc.system.A);
    dump_seq("B", sc.system.B);
    dump_seq("C", sc.system.C);
    dump_seq("W", sc.system.W);
    dump_seq("V", sc.system.V);
    dump_seq("Q", sc.system.Q);
    dump_seq("R", sc.system.R);
    doc["system"] = std::move(system);

    nlohmann::json plan;
    plan["positions"] = nlohmann::json::array();
    for (const auto& p : sc.plan.positions) plan["positions"].push_back(vector_to_json(p));
    plan["inputs"] = nlohmann::json::array();
    for (const auto& u : sc.plan.inputs) plan["inputs"].push_back(vector_to_json(u));
    doc["plan"] = std::move(plan);

    doc["obstacles"] = nlohmann::json::array();
    for (const auto& poly : sc.obstacles.polytopes) {
        nlohmann::json entry;
        entry["A"] = matrix_to_json(poly.normals);
        entry["b"] = vector_to_json(poly.offsets);
        doc["obstacles"].push_back(std::move(entry));
    }

    if (sc.bbox) {
        doc["bbox"] = {{"min", vector_to_json(sc.bbox->first)},
                       {"max", vector_to_json(sc.bbox->second)}};
    }
    if (sc.waypoints) {
        nlohmann::json wp;
        wp["points"] = nlohmann::json::array();
        for (const auto& p : sc.waypoints->points) {
            wp["points"].push_back({p.x(), p.y()});
        }
        wp["steps_per_segment"] = sc.waypoints->steps_per_segment;
        wp["z_scale"] = sc.waypoints->z_scale;
        doc["waypoints"] = std::move(wp);
    }
    return doc;
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write scenario file: " + path);
    out << scenario_to_json(sc).dump(2) << "\n";
}

} // namespace riskbounds
