#pragma once

#include "riskbounds/collision_probabilities.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace riskbounds {

struct FirstOrderBounds {
    double boole = 0.0;   // min(S1, 1)
    double frechet = 0.0; // max_t p_t
};

struct SecondOrderScalarBounds {
    double kwerel = 0.0;
    double bonferroni2 = 0.0;
    double dawson_sankoff = 0.0;
};

struct TreeBounds {
    double kounias = 0.0;
    double hunter_optimal = 0.0;
    double hunter_chain = 0.0;
    std::vector<std::pair<int, int>> tree; // edges of the maximizing spanning tree
};

inline FirstOrderBounds first_order_bounds(const std::vector<double>& p) {
    if (p.empty()) throw std::invalid_argument("need at least one event probability");
    double s1 = std::accumulate(p.begin(), p.end(), 0.0);
    double pmax = *std::max_element(p.begin(), p.end());
    return FirstOrderBounds{std::clamp(s1, 0.0, 1.0), std::clamp(pmax, 0.0, 1.0)};
}

/// Bounds that need only the scalars S1, S2 and the event count n:
///   Kwerel      P <= S1 - (2/n) S2
///   Bonferroni  P >= S1 - S2
///   Dawson      P >= (2/(k+1)) S1 - (2/(k(k+1))) S2, k = 1 + floor(2 S2 / S1)
inline SecondOrderScalarBounds second_order_scalar_bounds(double s1, double s2, int n_events) {
    if (n_events < 1) throw std::invalid_argument("n_events must be >= 1");
    SecondOrderScalarBounds out;
    out.kwerel = std::clamp(s1 - (2.0 / n_events) * s2, 0.0, 1.0);
    out.bonferroni2 = std::clamp(s1 - s2, 0.0, 1.0);
    if (s1 > 0.0) {
        double ratio = 2.0 * s2 / s1;
        if (ratio < 4.5e15) {
            double k = 1.0 + std::floor(ratio);
            out.dawson_sankoff =
                std::clamp(2.0 / (k + 1.0) * s1 - 2.0 / (k * (k + 1.0)) * s2, 0.0, 1.0);
        }
    }
    return out;
}

/// Bounds built from the pairwise matrix:
///   Kounias  subtracts the best star (one row sum),
///   Hunter   subtracts the max-weight spanning tree (Kruskal),
///   chain    subtracts the fixed path 0-1, 1-2, ..., (T-1)-T.
/// Kruskal runs on negated weights with ties broken by lexicographic (s, t),
/// so the reported tree is deterministic.
inline TreeBounds tree_bounds(const std::vector<double>& p, const Eigen::MatrixXd& pairs) {
    const int n = static_cast<int>(p.size());
    if (n < 1) throw std::invalid_argument("need at least one event probability");
    if (pairs.rows() != n || pairs.cols() != n) {
        throw std::invalid_argument("pair matrix must be (T+1) x (T+1)");
    }
    double s1 = std::accumulate(p.begin(), p.end(), 0.0);

    TreeBounds out;
    if (n == 1) {
        out.kounias = out.hunter_optimal = out.hunter_chain = std::clamp(s1, 0.0, 1.0);
        return out;
    }

    double best_star = 0.0;
    for (int s = 0; s < n; ++s) {
        double row = 0.0;
        for (int t = 0; t < n; ++t) {
            if (t != s) row += pairs(s, t);
        }
        best_star = std::max(best_star, row);
    }
    out.kounias = std::clamp(s1 - best_star, 0.0, 1.0);

    struct Edge {
        double w;
        int s, t;
    };
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int s = 0; s < n; ++s) {
        for (int t = s + 1; t < n; ++t) edges.push_back({pairs(s, t), s, t});
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        if (a.w != b.w) return a.w > b.w;
        if (a.s != b.s) return a.s < b.s;
        return a.t < b.t;
    });

    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    double tree_weight = 0.0;
    for (const Edge& e : edges) {
        int rs = find(e.s), rt = find(e.t);
        if (rs == rt) continue;
        parent[rs] = rt;
        tree_weight += e.w;
        out.tree.emplace_back(e.s, e.t);
        if (static_cast<int>(out.tree.size()) == n - 1) break;
    }
    std::sort(out.tree.begin(), out.tree.end());
    out.hunter_optimal = std::clamp(s1 - tree_weight, 0.0, 1.0);

    double chain_weight = 0.0;
    for (int t = 1; t < n; ++t) chain_weight += pairs(t - 1, t);
    out.hunter_chain = std::clamp(s1 - chain_weight, 0.0, 1.0);
    return out;
}

/// All bounds plus S1, S2 and per-bound wall-clock times. With chain-only
/// pair data just Boole, Frechet and the chain Hunter bound are defined; the
/// rest stay NaN.
struct BoundReport {
    double s1 = 0.0;
    double s2 = std::numeric_limits<double>::quiet_NaN();
    double boole = std::numeric_limits<double>::quiet_NaN();
    double kwerel = std::numeric_limits<double>::quiet_NaN();
    double kounias = std::numeric_limits<double>::quiet_NaN();
    double hunter_optimal = std::numeric_limits<double>::quiet_NaN();
    double hunter_chain = std::numeric_limits<double>::quiet_NaN();
    double frechet = std::numeric_limits<double>::quiet_NaN();
    double bonferroni2 = std::numeric_limits<double>::quiet_NaN();
    double dawson_sankoff = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<int, int>> hunter_tree;
    PairMode mode = PairMode::all;

    double time_first_order_s = 0.0;
    double time_scalar_s = 0.0;
    double time_tree_s = 0.0;

    bool pairs_complete() const { return mode == PairMode::all; }
};

inline BoundReport compute_report(const CollisionProbabilities& cp) {
    using clock = std::chrono::steady_clock;
    const int n = static_cast<int>(cp.p.size());
    BoundReport report;
    report.mode = cp.mode;
    report.s1 = std::accumulate(cp.p.begin(), cp.p.end(), 0.0);

    auto t0 = clock::now();
    FirstOrderBounds first = first_order_bounds(cp.p);
    report.boole = first.boole;
    report.frechet = first.frechet;
    auto t1 = clock::now();
    report.time_first_order_s = std::chrono::duration<double>(t1 - t0).count();

    if (cp.mode == PairMode::none) return report;

    if (cp.mode == PairMode::chain) {
        double chain_weight = 0.0;
        for (int t = 1; t < n; ++t) chain_weight += cp.pairs(t - 1, t);
        report.hunter_chain = std::clamp(report.s1 - chain_weight, 0.0, 1.0);
        report.time_tree_s = std::chrono::duration<double>(clock::now() - t1).count();
        return report;
    }

    double s2 = 0.0;
    for (int s = 0; s < n; ++s) {
        for (int t = s + 1; t < n; ++t) s2 += cp.pairs(s, t);
    }
    report.s2 = s2;

    auto t2 = clock::now();
    SecondOrderScalarBounds scalar = second_order_scalar_bounds(report.s1, s2, n);
    report.kwerel = scalar.kwerel;
    report.bonferroni2 = scalar.bonferroni2;
    report.dawson_sankoff = scalar.dawson_sankoff;
    auto t3 = clock::now();
    report.time_scalar_s = std::chrono::duration<double>(t3 - t2).count();

    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (int t = s + 1; t < n; ++t) {
            dense(s, t) = dense(t, s) = cp.pairs(s, t);
        }
    }
    TreeBounds tree = tree_bounds(cp.p, dense);
    report.kounias = tree.kounias;
    report.hunter_optimal = tree.hunter_optimal;
    report.hunter_chain = tree.hunter_chain;
    report.hunter_tree = std::move(tree.tree);
    report.time_tree_s = std::chrono::duration<double>(clock::now() - t3).count();
    return report;
}

} // namespace riskbounds
