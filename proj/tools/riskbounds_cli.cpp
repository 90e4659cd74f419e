// Command-line front end: evaluate bounds, run the Monte Carlo reference,
// sweep discretization factors, and generate waypoint fixtures.

#include "riskbounds/riskbounds.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::vector<double> parse_number_list(const std::string& text, char sep) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, sep)) {
        if (token.empty()) continue;
        out.push_back(std::stod(token));
    }
    return out;
}

std::vector<Eigen::Vector2d> parse_point_list(const std::string& text) {
    std::vector<Eigen::Vector2d> points;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ';')) {
        if (token.empty()) continue;
        auto coords = parse_number_list(token, ',');
        if (coords.size() != 2) {
            throw riskbounds::ParseError("expected 'x,y' pairs separated by ';': " + token);
        }
        points.emplace_back(coords[0], coords[1]);
    }
    return points;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw riskbounds::ParseError("cannot write output file: " + path);
    out << text;
}

std::string csv_row_for(const riskbounds::EvaluationResult& result, int factor, int steps) {
    riskbounds::SweepRow row;
    row.factor = factor;
    row.steps = steps;
    row.report = result.report;
    row.mc = result.mc;
    return riskbounds::sweep_to_csv({row});
}

struct CommonFlags {
    std::uint64_t seed = 0;
    double tolerance = 1e-4;
    double rel_tolerance = 0.02;
    double skip_threshold = 1e-9;
    int threads = 0;
    std::int64_t with_mc = 0;
    std::string pairs = "all";
    bool auto_normalize = false;
    bool strict_plan = false;

    void attach(CLI::App* cmd, bool with_pairs = true) {
        cmd->add_option("--seed", seed, "global RNG seed (default 0)");
        cmd->add_option("--tolerance", tolerance, "absolute orthant tolerance");
        cmd->add_option("--rel-tolerance", rel_tolerance, "relative orthant stop target");
        cmd->add_option("--skip-threshold", skip_threshold,
                        "record pairs with min(p_s,p_t) below this as 0");
        cmd->add_option("--threads", threads, "worker cap (0 = hardware)");
        cmd->add_option("--with-mc", with_mc, "also run a Monte Carlo reference of n samples");
        if (with_pairs) {
            cmd->add_option("--pairs", pairs, "pair integrals: all, chain, or none")
                ->check(CLI::IsMember({"all", "chain", "none"}));
        }
        cmd->add_flag("--auto-normalize", auto_normalize, "rescale non-unit obstacle normals");
        cmd->add_flag("--strict-plan", strict_plan, "treat planned-trajectory drift as an error");
    }

    riskbounds::EvaluateOptions evaluate_options() const {
        riskbounds::EvaluateOptions opts;
        opts.seed = seed;
        opts.tolerance = tolerance;
        opts.rel_tolerance = rel_tolerance;
        opts.skip_threshold = skip_threshold;
        opts.threads = threads;
        opts.mc_samples = with_mc;
        if (pairs == "chain") opts.pair_mode = riskbounds::PairMode::chain;
        else if (pairs == "none") opts.pair_mode = riskbounds::PairMode::none;
        return opts;
    }

    riskbounds::LoadOptions load_options() const {
        return riskbounds::LoadOptions{auto_normalize, strict_plan};
    }
};

riskbounds::Scenario load_with_warnings(const std::string& path, const riskbounds::LoadOptions& opts) {
    riskbounds::LoadResult loaded = riskbounds::load_scenario(path, opts);
    for (const auto& warning : loaded.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    return std::move(loaded.scenario);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"collision-risk bounds for tracked trajectories"};
    app.require_subcommand(1);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "compute all bounds for a scenario");
    std::string eval_path, eval_out, eval_csv;
    CommonFlags eval_flags;
    evaluate->add_option("scenario", eval_path, "scenario JSON file")->required();
    evaluate->add_option("-o,--output", eval_out, "report JSON path (default stdout)");
    evaluate->add_option("--csv", eval_csv, "also write the report as one CSV row");
    eval_flags.attach(evaluate);

    // mc
    auto* mc = app.add_subcommand("mc", "Monte Carlo failure estimate only");
    std::string mc_path, mc_out;
    std::int64_t mc_n = 100000;
    CommonFlags mc_flags;
    mc->add_option("scenario", mc_path, "scenario JSON file")->required();
    mc->add_option("-n,--samples", mc_n, "number of simulated executions");
    mc->add_option("-o,--output", mc_out, "report JSON path (default stdout)");
    mc_flags.attach(mc, false);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "re-discretize a waypoint scenario and tabulate bounds");
    std::string sweep_path, sweep_out, factors_text = "1,2,4,8";
    CommonFlags sweep_flags;
    sweep->add_option("scenario", sweep_path, "scenario JSON file (must carry waypoints)")->required();
    sweep->add_option("--factors", factors_text, "comma-separated refinement factors");
    sweep->add_option("-o,--output", sweep_out, "CSV path (default stdout)");
    sweep_flags.attach(sweep, false);

    // gen-fixture
    auto* gen = app.add_subcommand("gen-fixture", "generate a ground-robot waypoint scenario");
    std::string gen_out, waypoints_text;
    int gen_steps = 8;
    double gen_z = 1e-3;
    std::vector<std::string> gen_boxes, gen_polys;
    gen->add_option("--waypoints", waypoints_text, "waypoints as 'x,y;x,y;...'")->required();
    gen->add_option("--steps", gen_steps, "steps per segment");
    gen->add_option("--z-scale", gen_z, "noise scale Z");
    gen->add_option("--box", gen_boxes, "axis-aligned obstacle 'xmin,ymin,xmax,ymax' (repeatable)");
    gen->add_option("--poly", gen_polys, "convex polygon obstacle 'x,y;x,y;...' (repeatable)");
    gen->add_option("-o,--output", gen_out, "scenario JSON path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*evaluate) {
            riskbounds::Scenario sc = load_with_warnings(eval_path, eval_flags.load_options());
            auto opts = eval_flags.evaluate_options();
            auto result = riskbounds::evaluate_scenario(sc, opts);
            write_text(eval_out, riskbounds::report_to_json(result, opts).dump(2) + "\n");
            if (!eval_csv.empty()) {
                write_text(eval_csv, csv_row_for(result, 1, sc.horizon()));
            }
        } else if (*mc) {
            riskbounds::Scenario sc = load_with_warnings(mc_path, mc_flags.load_options());
            auto lqr = riskbounds::solve_lqr(sc.system);
            auto kalman = riskbounds::solve_kalman(sc.system);
            auto model = riskbounds::build_closed_loop(sc.system, lqr, kalman);
            auto batch = riskbounds::sample_executions(model, sc.plan, mc_n, mc_flags.seed,
                                                       mc_flags.threads);
            auto mc_result = riskbounds::estimate_failure(batch, sc.obstacles, mc_flags.threads);
            mc_result.seconds += batch.sample_seconds;
            nlohmann::json doc;
            doc["estimate"] = mc_result.estimate;
            doc["std_error"] = mc_result.std_error;
            doc["samples"] = mc_result.samples;
            doc["seed"] = mc_flags.seed;
            doc["seconds"] = mc_result.seconds;
            write_text(mc_out, doc.dump(2) + "\n");
        } else if (*sweep) {
            riskbounds::Scenario sc = load_with_warnings(sweep_path, sweep_flags.load_options());
            riskbounds::SweepSpec spec;
            for (double f : parse_number_list(factors_text, ',')) {
                spec.factors.push_back(static_cast<int>(f));
            }
            auto rows = riskbounds::run_sweep(sc, spec, sweep_flags.evaluate_options());
            write_text(sweep_out, riskbounds::sweep_to_csv(rows));
        } else if (*gen) {
            auto waypoints = parse_point_list(waypoints_text);
            riskbounds::Scenario sc = riskbounds::make_ground_robot_scenario(waypoints, gen_steps, gen_z);
            for (const auto& box : gen_boxes) {
                auto coords = parse_number_list(box, ',');
                if (coords.size() != 4) {
                    throw riskbounds::ParseError("--box expects 'xmin,ymin,xmax,ymax'");
                }
                Eigen::Vector2d lo(coords[0], coords[1]), hi(coords[2], coords[3]);
                sc.obstacles.polytopes.push_back(riskbounds::Polytope::axis_box(lo, hi));
            }
            for (const auto& poly : gen_polys) {
                sc.obstacles.polytopes.push_back(
                    riskbounds::Polytope::from_vertices(parse_point_list(poly)));
            }
            sc.validate();
            write_text(gen_out, riskbounds::scenario_to_json(sc).dump(2) + "\n");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
