#pragma once

// Shared generators and oracles for the test suites. Everything here is
// deterministic given the seed passed in.

#include "riskbounds/riskbounds.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace testhelp {

using Rng = std::mt19937_64;

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = scale * u(rng);
    }
    return m;
}

inline Eigen::MatrixXd random_psd(Rng& rng, int n, double scale = 1.0) {
    Eigen::MatrixXd a = random_matrix(rng, n, n);
    return scale / n * (a * a.transpose());
}

inline Eigen::MatrixXd random_pd(Rng& rng, int n, double scale = 1.0) {
    return random_psd(rng, n, scale) + 0.05 * scale * Eigen::MatrixXd::Identity(n, n);
}

inline riskbounds::LinearSystem random_system(Rng& rng, int d, int m, int q, int T,
                                              double noise_scale = 0.1) {
    riskbounds::LinearSystem sys;
    for (int t = 0; t < T; ++t) {
        sys.A.push_back(random_matrix(rng, d, d, 0.8));
        sys.B.push_back(random_matrix(rng, d, m, 0.8));
        sys.C.push_back(random_matrix(rng, q, d, 0.8));
        sys.W.push_back(random_psd(rng, d, noise_scale));
        sys.V.push_back(random_pd(rng, q, noise_scale));
        sys.Q.push_back(random_psd(rng, d, 1.0));
        sys.R.push_back(random_pd(rng, m, 1.0));
    }
    return sys;
}

inline riskbounds::Polytope regular_polygon(const Eigen::Vector2d& center, double radius,
                                            int nverts, double rotation) {
    std::vector<Eigen::Vector2d> verts;
    for (int i = 0; i < nverts; ++i) {
        double a = rotation + 2.0 * std::numbers::pi * i / nverts;
        verts.emplace_back(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a));
    }
    return riskbounds::Polytope::from_vertices(verts);
}

/// Random unit-square tracking scenario: 2-5 convex polygon obstacles in the
/// middle of the square, a waypoint path from the left edge to the right edge
/// routed close past one obstacle, T in [15, 40], Z = 1e-3 I.
inline riskbounds::Scenario random_unit_square_scenario(std::uint64_t seed,
                                                        bool require_plan_safe = true) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (int attempt = 0; attempt < 400; ++attempt) {
        const int n_obstacles = 2 + static_cast<int>(rng() % 4); // 2..5
        std::vector<Eigen::Vector2d> centers;
        std::vector<double> radii;
        riskbounds::ObstacleSet obstacles;
        bool placed = true;
        for (int l = 0; l < n_obstacles && placed; ++l) {
            bool ok = false;
            for (int tries = 0; tries < 50 && !ok; ++tries) {
                Eigen::Vector2d c(0.25 + 0.5 * u01(rng), 0.25 + 0.5 * u01(rng));
                double r = 0.06 + 0.09 * u01(rng);
                ok = true;
                for (std::size_t o = 0; o < centers.size(); ++o) {
                    if ((centers[o] - c).norm() < radii[o] + r + 0.02) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    centers.push_back(c);
                    radii.push_back(r);
                    obstacles.polytopes.push_back(regular_polygon(
                        c, r, 3 + static_cast<int>(rng() % 4), 2.0 * std::numbers::pi * u01(rng)));
                }
            }
            placed = static_cast<int>(centers.size()) == l + 1;
        }
        if (!placed) continue;

        // Route past obstacle 0 at a small clearance so the risk is nontrivial.
        double clearance = 0.005 + 0.045 * u01(rng);
        double angle = 2.0 * std::numbers::pi * u01(rng);
        Eigen::Vector2d via = centers[0] + (radii[0] + clearance) *
                                               Eigen::Vector2d(std::cos(angle), std::sin(angle));
        if (via.x() < 0.02 || via.x() > 0.98 || via.y() < 0.02 || via.y() > 0.98) continue;

        std::vector<Eigen::Vector2d> waypoints{
            {0.02, 0.2 + 0.6 * u01(rng)}, via, {0.98, 0.2 + 0.6 * u01(rng)}};
        const int steps = 8 + static_cast<int>(rng() % 13); // two segments: T in [16, 40]
        riskbounds::Scenario sc;
        try {
            sc = riskbounds::make_ground_robot_scenario(waypoints, steps, 1e-3);
            sc.obstacles = obstacles;
            sc.validate();
        } catch (const riskbounds::ValidationError&) {
            continue;
        }
        if (require_plan_safe) {
            bool safe = true;
            for (const auto& pos : sc.plan.positions) {
                if (sc.obstacles.contains(pos)) {
                    safe = false;
                    break;
                }
            }
            if (!safe) continue;
        }
        return sc;
    }
    throw std::runtime_error("failed to generate a random scenario");
}

/// Explicit finite probability space with named events: the enumeration
/// oracle behind the union-bound checks.
struct DiscreteEvents {
    std::vector<double> outcome_prob;               // sums to 1
    std::vector<std::vector<bool>> membership;      // event x outcome

    int n_events() const { return static_cast<int>(membership.size()); }

    std::vector<double> p() const {
        std::vector<double> out(membership.size(), 0.0);
        for (std::size_t e = 0; e < membership.size(); ++e) {
            for (std::size_t o = 0; o < outcome_prob.size(); ++o) {
                if (membership[e][o]) out[e] += outcome_prob[o];
            }
        }
        return out;
    }

    Eigen::MatrixXd pairs() const {
        const int n = n_events();
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                double joint = 0.0;
                for (std::size_t o = 0; o < outcome_prob.size(); ++o) {
                    if (membership[a][o] && membership[b][o]) joint += outcome_prob[o];
                }
                m(a, b) = m(b, a) = joint;
            }
        }
        return m;
    }

    double exact_union() const {
        double total = 0.0;
        for (std::size_t o = 0; o < outcome_prob.size(); ++o) {
            for (const auto& event : membership) {
                if (event[o]) {
                    total += outcome_prob[o];
                    break;
                }
            }
        }
        return total;
    }
};

inline DiscreteEvents random_event_space(Rng& rng, int max_events = 6, int max_outcomes = 12) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    DiscreteEvents space;
    const int n_outcomes = 2 + static_cast<int>(rng() % (max_outcomes - 1));
    const int n_events = 2 + static_cast<int>(rng() % (max_events - 1));

    space.outcome_prob.resize(n_outcomes);
    double total = 0.0;
    for (double& p : space.outcome_prob) {
        p = -std::log(u01(rng));
        total += p;
    }
    for (double& p : space.outcome_prob) p /= total;

    space.membership.assign(n_events, std::vector<bool>(n_outcomes, false));
    for (auto& event : space.membership) {
        for (int o = 0; o < n_outcomes; ++o) event[o] = u01(rng) < 0.4;
    }
    return space;
}

/// Plain Monte Carlo orthant oracle, independent of the evaluator under test.
inline double mc_orthant(std::uint64_t seed, const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                         std::int64_t n, double* std_error) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::MatrixXd factor =
        es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const int k = static_cast<int>(mu.size());

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(k);
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) z(j) = normal(rng);
        Eigen::VectorXd h = mu + factor * z;
        if ((h.array() >= 0.0).all()) ++hits;
    }
    double p = static_cast<double>(hits) / static_cast<double>(n);
    if (std_error) *std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return p;
}

/// Simulates the coupled filter/controller equations and the augmented
/// closed-loop recursion with matched noise draws; returns the largest
/// state discrepancy over the horizon.
inline double closed_loop_sim_gap(const riskbounds::LinearSystem& sys,
                                  const riskbounds::LqrSolution& lqr,
                                  const riskbounds::KalmanSolution& kalman,
                                  const riskbounds::ClosedLoopModel& model, std::uint64_t seed) {
    const int T = sys.horizon();
    const int d = sys.state_dim();

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto sample = [&](const Eigen::MatrixXd& cov) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        Eigen::MatrixXd factor =
            es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        Eigen::VectorXd z(cov.rows());
        for (int j = 0; j < cov.rows(); ++j) z(j) = normal(rng);
        return Eigen::VectorXd(factor * z);
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd xhat_pred = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(2 * d);
    double gap = 0.0;
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd w = sample(sys.W[t]);
        Eigen::VectorXd v = sample(sys.V[t]);

        // Coupled equations: measurement update, control, state and predictor.
        Eigen::VectorXd y = sys.C[t] * x + v;
        Eigen::VectorXd xhat_post = xhat_pred + kalman.G[t] * (y - sys.C[t] * xhat_pred);
        Eigen::VectorXd u = lqr.F[t] * xhat_post;
        Eigen::VectorXd x_next = sys.A[t] * x + sys.B[t] * u + w;
        Eigen::VectorXd pred_next = sys.A[t] * xhat_post + sys.B[t] * u;

        // Augmented recursion with the same (w, v).
        Eigen::VectorXd wbar(2 * d);
        wbar.head(d) = sys.B[t] * lqr.F[t] * kalman.G[t] * v + w;
        wbar.tail(d) = (sys.A[t] + sys.B[t] * lqr.F[t]) * kalman.G[t] * v;
        xbar = model.Abar[t] * xbar + wbar;

        x = x_next;
        xhat_pred = pred_next;
        gap = std::max(gap, (xbar.head(d) - x).cwiseAbs().maxCoeff());
        gap = std::max(gap, (xbar.tail(d) - xhat_pred).cwiseAbs().maxCoeff());
    }
    return gap;
}

} // namespace testhelp
