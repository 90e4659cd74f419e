#pragma once

#include "riskbounds/collision_probabilities.hpp"
#include "riskbounds/lqg.hpp"
#include "riskbounds/monte_carlo.hpp"
#include "riskbounds/scenario.hpp"
#include "riskbounds/scenario_io.hpp"
#include "riskbounds/trajectory_distribution.hpp"
#include "riskbounds/union_bounds.hpp"

#include <json.hpp>

#include <chrono>
#include <limits>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace riskbounds {

struct EvaluateOptions {
    std::uint64_t seed = 0;
    double tolerance = 1e-4;      // absolute orthant tolerance used by the pipeline
    double rel_tolerance = 0.02;  // relative stop target; achieved errors are bookkept
    double skip_threshold = 1e-9;
    PairMode pair_mode = PairMode::all;
    int threads = 0;
    std::int64_t mc_samples = 0; // 0 disables the Monte Carlo reference
    std::int64_t sample_cap = 2'000'000;

    CollisionOptions collision_options() const {
        CollisionOptions c;
        c.integration.tolerance = tolerance;
        c.integration.rel_tolerance = rel_tolerance;
        c.integration.seed = seed;
        c.integration.sample_cap = sample_cap;
        c.skip_threshold = skip_threshold;
        c.pair_mode = pair_mode;
        c.threads = threads;
        return c;
    }
};

struct EvaluationResult {
    CollisionProbabilities probabilities;
    BoundReport report;
    double eps_int = 0.0; // bookkept integration error across all entries

    double lqg_seconds = 0.0;     // controller synthesis + covariance propagation
    double assembly_seconds = 0.0;
    double bound_seconds = 0.0;   // lqg + singles + pairs + assembly

    std::optional<McResult> mc;
    double speedup = std::numeric_limits<double>::quiet_NaN(); // mc time / bound time
};

inline EvaluationResult evaluate_scenario(const Scenario& sc, const EvaluateOptions& opts = {}) {
    using clock = std::chrono::steady_clock;
    EvaluationResult result;

    auto t0 = clock::now();
    LqrSolution lqr = solve_lqr(sc.system);
    KalmanSolution kalman = solve_kalman(sc.system);
    ClosedLoopModel model = build_closed_loop(sc.system, lqr, kalman);
    TrajectoryDistribution dist = TrajectoryDistribution::propagate(model, sc.plan);
    result.lqg_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    result.probabilities = all_collision_probs(dist, sc.obstacles, opts.collision_options());

    auto t1 = clock::now();
    result.report = compute_report(result.probabilities);
    result.assembly_seconds = std::chrono::duration<double>(clock::now() - t1).count();

    result.eps_int = result.probabilities.total_integration_error();
    result.bound_seconds = result.lqg_seconds + result.probabilities.singles_seconds +
                           result.probabilities.pairs_seconds + result.assembly_seconds;

    if (opts.mc_samples > 0) {
        TrajectoryBatch batch =
            sample_executions(model, sc.plan, opts.mc_samples, opts.seed, opts.threads);
        McResult mc = estimate_failure(batch, sc.obstacles, opts.threads);
        mc.seconds += batch.sample_seconds;
        result.mc = mc;
        result.speedup = mc.seconds / result.bound_seconds;
    }
    return result;
}

inline const char* pair_mode_name(PairMode mode) {
    switch (mode) {
        case PairMode::all: return "all";
        case PairMode::chain: return "chain";
        case PairMode::none: return "none";
    }
    return "all";
}

inline nlohmann::json report_to_json(const EvaluationResult& result, const EvaluateOptions& opts) {
    nlohmann::json doc;
    doc["seed"] = opts.seed;
    doc["tolerance"] = opts.tolerance;
    doc["rel_tolerance"] = opts.rel_tolerance;
    doc["skip_threshold"] = opts.skip_threshold;
    doc["pair_mode"] = pair_mode_name(opts.pair_mode);

    const BoundReport& rep = result.report;
    doc["s1"] = rep.s1;
    if (!std::isnan(rep.s2)) doc["s2"] = rep.s2;

    nlohmann::json bounds;
    auto put = [&](const char* name, double v) {
        if (!std::isnan(v)) bounds[name] = v;
    };
    put("boole", rep.boole);
    put("kwerel", rep.kwerel);
    put("kounias", rep.kounias);
    put("hunter_opt", rep.hunter_optimal);
    put("hunter_chain", rep.hunter_chain);
    put("frechet", rep.frechet);
    put("bonferroni2", rep.bonferroni2);
    put("dawson", rep.dawson_sankoff);
    doc["bounds"] = std::move(bounds);

    if (!rep.hunter_tree.empty()) {
        nlohmann::json tree = nlohmann::json::array();
        for (auto [s, t] : rep.hunter_tree) tree.push_back({s, t});
        doc["hunter_tree"] = std::move(tree);
    }

    const CollisionProbabilities& cp = result.probabilities;
    nlohmann::json probs;
    probs["p"] = cp.p;
    probs["p_error"] = cp.p_error;
    std::int64_t computed = 0, skipped = 0;
    for (PairStatus s : cp.pairs.status) {
        computed += s == PairStatus::computed;
        skipped += s == PairStatus::skipped;
    }
    probs["pairs_computed"] = computed;
    probs["pairs_skipped"] = skipped;
    probs["eps_int"] = result.eps_int;
    doc["probabilities"] = std::move(probs);

    nlohmann::json timings;
    timings["lqg_s"] = result.lqg_seconds;
    timings["singles_s"] = cp.singles_seconds;
    timings["pairs_s"] = cp.pairs_seconds;
    timings["assembly_s"] = result.assembly_seconds;
    timings["bound_total_s"] = result.bound_seconds;
    timings["bounds_first_order_s"] = rep.time_first_order_s;
    timings["bounds_scalar_s"] = rep.time_scalar_s;
    timings["bounds_tree_s"] = rep.time_tree_s;
    doc["timings"] = std::move(timings);

    if (result.mc) {
        nlohmann::json mc;
        mc["estimate"] = result.mc->estimate;
        mc["std_error"] = result.mc->std_error;
        mc["samples"] = result.mc->samples;
        mc["seconds"] = result.mc->seconds;
        doc["mc"] = std::move(mc);
        doc["speedup"] = result.speedup;
    }
    return doc;
}

struct SweepSpec {
    std::vector<int> factors;

    void validate() const {
        if (factors.empty()) throw ValidationError("sweep needs at least one factor");
        for (std::size_t i = 0; i < factors.size(); ++i) {
            if (factors[i] < 1) throw ValidationError("sweep factors must be >= 1");
            if (i > 0 && factors[i] <= factors[i - 1]) {
                throw ValidationError("sweep factors must be strictly increasing");
            }
        }
    }
};

struct SweepRow {
    int factor = 1;
    int steps = 0;
    BoundReport report;
    std::optional<McResult> mc;
};

/// Re-discretizes the waypoint plan at factor x the base rate. The fixture
/// generator rescales each W_t with the new segment lengths; V_t additionally
/// scales with the factor so the sensor's information per unit path length is
/// rate-independent and the rows describe one underlying continuous system.
inline Scenario refine_scenario(const Scenario& base, int factor) {
    if (!base.waypoints) throw ValidationError("sweep requires waypoint plan");
    Scenario refined = make_ground_robot_scenario(
        base.waypoints->points, base.waypoints->steps_per_segment * factor, base.waypoints->z_scale);
    for (auto& v : refined.system.V) v *= static_cast<double>(factor);
    refined.obstacles = base.obstacles;
    refined.bbox = base.bbox;
    return refined;
}

inline std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& spec,
                                       const EvaluateOptions& opts) {
    spec.validate();
    if (!base.waypoints) throw ValidationError("sweep requires waypoint plan");

    std::vector<SweepRow> rows;
    rows.reserve(spec.factors.size());
    for (int factor : spec.factors) {
        Scenario refined = refine_scenario(base, factor);
        EvaluateOptions row_opts = opts;
        row_opts.pair_mode = PairMode::all;
        EvaluationResult result = evaluate_scenario(refined, row_opts);
        SweepRow row;
        row.factor = factor;
        row.steps = refined.horizon();
        row.report = result.report;
        row.mc = result.mc;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string csv =
        "factor,steps,boole,kwerel,kounias,hunter_opt,hunter_chain,frechet,bonferroni2,dawson,mc,mc_se\n";
    for (const SweepRow& row : rows) {
        csv += std::to_string(row.factor) + "," + std::to_string(row.steps);
        const BoundReport& r = row.report;
        for (double v : {r.boole, r.kwerel, r.kounias, r.hunter_optimal, r.hunter_chain, r.frechet,
                         r.bonferroni2, r.dawson_sankoff}) {
            csv += "," + detail::format_double(v);
        }
        if (row.mc) {
            csv += "," + detail::format_double(row.mc->estimate) + "," +
                   detail::format_double(row.mc->std_error);
        } else {
            csv += ",nan,nan";
        }
        csv += "\n";
    }
    return csv;
}

} // namespace riskbounds
