#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace riskbounds;

namespace {

/// Distribution with constant planned position and a prescribed per-step
/// position covariance growth: Abar = blkdiag-free identity, position noise
/// var per step in the deviation block only.
TrajectoryDistribution iso_walk_dist(int T, double step_var, const Eigen::Vector2d& mean_pos,
                                     bool decouple_steps = false) {
    ClosedLoopModel model;
    Eigen::MatrixXd abar = decouple_steps ? Eigen::MatrixXd(Eigen::MatrixXd::Zero(4, 4))
                                          : Eigen::MatrixXd(Eigen::MatrixXd::Identity(4, 4));
    Eigen::MatrixXd wbar = Eigen::MatrixXd::Zero(4, 4);
    wbar(0, 0) = wbar(1, 1) = step_var;
    model.Abar.assign(T, abar);
    model.Wbar.assign(T, wbar);

    PlannedTrajectory plan;
    plan.positions.assign(T + 1, Eigen::VectorXd(mean_pos));
    plan.inputs.assign(T, Eigen::VectorXd::Zero(2));
    return TrajectoryDistribution::propagate(model, plan);
}

ObstacleSet single_box(double lo_x, double lo_y, double hi_x, double hi_y) {
    ObstacleSet obs;
    obs.polytopes.push_back(
        Polytope::axis_box(Eigen::Vector2d(lo_x, lo_y), Eigen::Vector2d(hi_x, hi_y)));
    return obs;
}

IntegrationOptions quick_opts(std::uint64_t seed = 0, double tol = 1e-4) {
    IntegrationOptions opts;
    opts.tolerance = tol;
    opts.rel_tolerance = 0.0;
    opts.seed = seed;
    return opts;
}

} // namespace

TEST_CASE("deterministic start outside obstacles has zero collision mass") {
    auto dist = iso_walk_dist(4, 1e-2, Eigen::Vector2d(0.1, 0.1));
    ObstacleSet obs = single_box(0.4, 0.4, 0.6, 0.6);

    auto p0 = step_collision_prob(dist, obs, 0, quick_opts());
    REQUIRE(p0.value == 0.0);
    REQUIRE(p0.error == 0.0);

    auto pair0 = pair_collision_prob(dist, obs, 0, 3, quick_opts());
    REQUIRE(pair0.value == 0.0);
    REQUIRE(pair0.error == 0.0);
}

TEST_CASE("square obstacle at one sigma gives the interval-product mass") {
    // After one step the position is N((0.5, 0.5), 0.01 I); the box
    // [0.4, 0.6]^2 captures (2 Phi(1) - 1)^2 of it.
    auto dist = iso_walk_dist(1, 0.01, Eigen::Vector2d(0.5, 0.5));
    ObstacleSet obs = single_box(0.4, 0.4, 0.6, 0.6);
    auto pt = step_collision_prob(dist, obs, 1, quick_opts(3));
    double exact = std::pow(2.0 * riskbounds::detail::norm_cdf(1.0) - 1.0, 2);
    REQUIRE(std::abs(pt.value - exact) <= pt.error + 2e-3);
}

TEST_CASE("far-away obstacles contribute nothing measurable") {
    auto dist = iso_walk_dist(1, 1e-4, Eigen::Vector2d(0.1, 0.1)); // sigma = 0.01
    ObstacleSet obs = single_box(0.5, 0.5, 0.7, 0.7);              // 40 sigma away
    auto pt = step_collision_prob(dist, obs, 1, quick_opts());
    REQUIRE(pt.value < 1e-6);
}

TEST_CASE("uncorrelated steps factorize for a single half-space") {
    const double sigma = 0.1;
    auto dist = iso_walk_dist(3, sigma * sigma, Eigen::Vector2d(0.5, 0.5), true);
    ObstacleSet obs;
    Polytope half;
    half.normals = Eigen::MatrixXd(1, 2);
    half.normals << 1.0, 0.0;
    half.offsets = Eigen::VectorXd::Constant(1, 0.7);
    obs.polytopes.push_back(half);

    auto ps = step_collision_prob(dist, obs, 1, quick_opts());
    auto pt = step_collision_prob(dist, obs, 2, quick_opts());
    auto pair = pair_collision_prob(dist, obs, 1, 2, quick_opts());

    double expected_single = riskbounds::detail::norm_cdf((0.5 - 0.7) / sigma);
    REQUIRE_THAT(ps.value, Catch::Matchers::WithinAbs(expected_single, 1e-12));
    REQUIRE_THAT(pair.value, Catch::Matchers::WithinAbs(ps.value * pt.value, 1e-10));
}

TEST_CASE("pairwise mass matches a Monte Carlo oracle on the joint Gaussian") {
    testhelp::Rng rng(8);
    Scenario sc = testhelp::random_unit_square_scenario(21);
    auto model = build_closed_loop(sc.system, solve_lqr(sc.system), solve_kalman(sc.system));
    auto dist = TrajectoryDistribution::propagate(model, sc.plan);

    ObstacleSet one;
    one.polytopes.push_back(sc.obstacles.polytopes[0]);

    // Pick the riskiest step against obstacle 0 and pair it with a neighbor.
    int best_t = 1;
    double best_p = 0.0;
    for (int t = 1; t <= dist.horizon(); ++t) {
        auto pt = step_collision_prob(dist, one, t, quick_opts(0, 1e-5));
        if (pt.value > best_p) {
            best_p = pt.value;
            best_t = t;
        }
    }
    int s = best_t > 1 ? best_t - 1 : 1;
    int t = best_t > 1 ? best_t : 2;

    auto pair = pair_collision_prob(dist, one, s, t, quick_opts(17, 1e-5));

    Gaussian joint = dist.position_joint(s, t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(joint.cov);
    Eigen::MatrixXd factor =
        es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::int64_t n = 1'000'000;
    std::int64_t hits = 0;
    Eigen::VectorXd z(4);
    const Polytope& poly = one.polytopes[0];
    for (std::int64_t i = 0; i < n; ++i) {
        for (int j = 0; j < 4; ++j) z(j) = normal(rng);
        Eigen::VectorXd x = joint.mean + factor * z;
        if (poly.contains(x.head(2)) && poly.contains(x.tail(2))) ++hits;
    }
    double oracle = static_cast<double>(hits) / static_cast<double>(n);
    double se = std::sqrt(oracle * (1.0 - oracle) / static_cast<double>(n));
    double combined = std::sqrt(se * se + std::pow(pair.error / 3.0, 2));
    REQUIRE(std::abs(pair.value - oracle) <= 3.0 * combined + 1e-9);
}

TEST_CASE("obstacle-free scenarios yield all-zero tables") {
    auto dist = iso_walk_dist(5, 1e-3, Eigen::Vector2d(0.5, 0.5));
    CollisionOptions opts;
    CollisionProbabilities cp = all_collision_probs(dist, ObstacleSet{}, opts);
    for (double p : cp.p) REQUIRE(p == 0.0);
    for (double v : cp.pairs.value) REQUIRE(v == 0.0);
    REQUIRE(cp.total_integration_error() == 0.0);
}

TEST_CASE("zero skip threshold reproduces entry-by-entry results bit-identically") {
    Scenario sc = testhelp::random_unit_square_scenario(33);
    auto model = build_closed_loop(sc.system, solve_lqr(sc.system), solve_kalman(sc.system));
    auto dist = TrajectoryDistribution::propagate(model, sc.plan);

    CollisionOptions opts;
    opts.integration = quick_opts(7, 1e-3);
    opts.skip_threshold = 0.0;
    opts.threads = 2;
    CollisionProbabilities cp = all_collision_probs(dist, sc.obstacles, opts);

    const int T = dist.horizon();
    for (int t = 0; t <= T; t += 7) {
        auto direct = step_collision_prob(dist, sc.obstacles, t, opts.integration);
        REQUIRE(cp.p[t] == direct.value);
        REQUIRE(cp.p_error[t] == direct.error);
    }
    for (int s = 0; s <= T; s += 9) {
        for (int t = s + 1; t <= T; t += 6) {
            auto direct = pair_collision_prob(dist, sc.obstacles, s, t, opts.integration);
            REQUIRE(cp.pairs(s, t) == direct.value);
        }
    }
}

TEST_CASE("pair table obeys the structural invariants") {
    Scenario sc = testhelp::random_unit_square_scenario(101);
    auto model = build_closed_loop(sc.system, solve_lqr(sc.system), solve_kalman(sc.system));
    auto dist = TrajectoryDistribution::propagate(model, sc.plan);

    CollisionOptions opts;
    opts.integration = quick_opts(1, 1e-3);
    CollisionProbabilities cp = all_collision_probs(dist, sc.obstacles, opts);

    const int T = dist.horizon();
    double frechet = 0.0, total = 0.0;
    for (int t = 0; t <= T; ++t) {
        REQUIRE(cp.p[t] >= 0.0);
        REQUIRE(cp.p[t] <= 1.0);
        frechet = std::max(frechet, cp.p[t]);
        total += cp.p[t];
    }
    REQUIRE(frechet <= total + 1e-15);

    for (int s = 0; s <= T; ++s) {
        for (int t = s + 1; t <= T; ++t) {
            double cap = std::min(cp.p[s], cp.p[t]);
            std::size_t idx = cp.pairs.index(s, t);
            double err = cp.pairs.error[idx] + cp.p_error[s] + cp.p_error[t];
            REQUIRE(cp.pairs(s, t) == cp.pairs(t, s));
            REQUIRE(cp.pairs(s, t) >= 0.0);
            REQUIRE(cp.pairs(s, t) <= cap + 3.0 * err + 1e-9);
        }
    }
}

TEST_CASE("skipped pairs carry their sound error budget") {
    Scenario sc = testhelp::random_unit_square_scenario(3);
    auto model = build_closed_loop(sc.system, solve_lqr(sc.system), solve_kalman(sc.system));
    auto dist = TrajectoryDistribution::propagate(model, sc.plan);

    CollisionOptions opts;
    opts.integration = quick_opts(5, 1e-3);
    opts.skip_threshold = 10.0; // force every pair to be skipped
    CollisionProbabilities cp = all_collision_probs(dist, sc.obstacles, opts);

    const int T = dist.horizon();
    for (int s = 0; s <= T; ++s) {
        for (int t = s + 1; t <= T; ++t) {
            std::size_t idx = cp.pairs.index(s, t);
            REQUIRE(cp.pairs.status[idx] == PairStatus::skipped);
            REQUIRE(cp.pairs.value[idx] == 0.0);
            REQUIRE(cp.pairs.error[idx] == std::min(cp.p[s], cp.p[t]));
        }
    }
}

TEST_CASE("per-step probabilities track per-step Monte Carlo frequencies") {
    Scenario sc = testhelp::random_unit_square_scenario(23);
    auto model = build_closed_loop(sc.system, solve_lqr(sc.system), solve_kalman(sc.system));
    auto dist = TrajectoryDistribution::propagate(model, sc.plan);

    CollisionOptions opts;
    opts.integration = quick_opts(2, 1e-4);
    opts.pair_mode = PairMode::none;
    CollisionProbabilities cp = all_collision_probs(dist, sc.obstacles, opts);

    const std::int64_t n = 100000;
    TrajectoryBatch batch = sample_executions(model, sc.plan, n, 77, 2);
    const int T = dist.horizon();
    for (int t = 0; t <= T; ++t) {
        std::int64_t hits = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            Eigen::VectorXd x = batch.positions.row(i).segment(2 * t, 2);
            if (sc.obstacles.contains(x)) ++hits;
        }
        double freq = static_cast<double>(hits) / static_cast<double>(n);
        double se = std::sqrt(std::max(freq * (1.0 - freq), 1e-5 / n) / n);
        REQUIRE(std::abs(cp.p[t] - freq) <= 3.0 * (se + cp.p_error[t]) + 1e-6);
    }
}

TEST_CASE("chain mode computes exactly the adjacent pairs") {
    Scenario sc = testhelp::random_unit_square_scenario(9);
    auto model = build_closed_loop(sc.system, solve_lqr(sc.system), solve_kalman(sc.system));
    auto dist = TrajectoryDistribution::propagate(model, sc.plan);

    CollisionOptions opts;
    opts.integration = quick_opts(5, 1e-3);
    opts.pair_mode = PairMode::chain;
    CollisionProbabilities cp = all_collision_probs(dist, sc.obstacles, opts);

    const int T = dist.horizon();
    for (int s = 0; s <= T; ++s) {
        for (int t = s + 1; t <= T; ++t) {
            std::size_t idx = cp.pairs.index(s, t);
            if (t == s + 1) {
                REQUIRE(cp.pairs.status[idx] != PairStatus::not_requested);
            } else {
                REQUIRE(cp.pairs.status[idx] == PairStatus::not_requested);
            }
        }
    }
}
