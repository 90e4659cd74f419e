#pragma once

#include "riskbounds/detail/parallel.hpp"
#include "riskbounds/detail/random.hpp"
#include "riskbounds/orthant.hpp"
#include "riskbounds/scenario.hpp"
#include "riskbounds/trajectory_distribution.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

namespace riskbounds {

struct IntegrationOptions {
    double tolerance = 1e-4;     // absolute error target per orthant evaluation
    double rel_tolerance = 0.02; // relative stop target; errors stay bookkept
    std::uint64_t seed = 0;
    std::int64_t sample_cap = 2'000'000;
};

enum class PairMode { all, chain, none };

enum class PairStatus : std::uint8_t { computed, skipped, not_requested };

/// Strict upper triangle of the symmetric pair matrix, with the per-entry
/// integration error and how the entry was obtained.
struct PairTable {
    int n = 0; // number of events (T+1)
    std::vector<double> value;
    std::vector<double> error;
    std::vector<PairStatus> status;

    static PairTable empty(int n_events) {
        PairTable t;
        t.n = n_events;
        std::size_t len = static_cast<std::size_t>(n_events) * (n_events - 1) / 2;
        t.value.assign(len, 0.0);
        t.error.assign(len, 0.0);
        t.status.assign(len, PairStatus::not_requested);
        return t;
    }

    std::size_t index(int s, int t) const {
        if (s > t) std::swap(s, t);
        return static_cast<std::size_t>(s) * (2 * n - s - 1) / 2 + (t - s - 1);
    }

    double operator()(int s, int t) const { return s == t ? 0.0 : value[index(s, t)]; }
};

struct StepProbability {
    double value = 0.0;
    double error = 0.0;
};

struct CollisionProbabilities {
    std::vector<double> p;       // T+1
    std::vector<double> p_error; // T+1
    PairTable pairs;
    PairMode mode = PairMode::all;
    double singles_seconds = 0.0;
    double pairs_seconds = 0.0;

    int horizon() const { return static_cast<int>(p.size()) - 1; }

    /// Total bookkept integration error: single-step errors plus every pair
    /// entry's error (skipped entries carry min(p_s, p_t)).
    double total_integration_error() const {
        double total = 0.0;
        for (double e : p_error) total += e;
        for (std::size_t i = 0; i < pairs.error.size(); ++i) {
            if (pairs.status[i] != PairStatus::not_requested) total += pairs.error[i];
        }
        return total;
    }
};

struct CollisionOptions {
    IntegrationOptions integration;
    double skip_threshold = 1e-9; // pairs below it recorded as 0 with error min(p_s, p_t)
    PairMode pair_mode = PairMode::all;
    int threads = 0; // 0 = hardware concurrency
};

namespace detail {

inline std::uint64_t entry_seed(std::uint64_t seed, int s, int t, int l, int m) {
    return mix_seed(seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(t),
                           static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(m)});
}

/// Pre-digested deflation/screen facts for one (step, polytope) margin set,
/// mirroring exactly what deflate_degenerate plus the far-field screen would
/// conclude inside orthant_probability.
struct MarginScreen {
    bool definite_zero = false; // some deterministic margin is negative
    int live_dims = 0;          // margins that survive deflation
    double min_prob = 1.0;      // smallest single-margin probability among them
};

inline MarginScreen screen_of(const OrthantQuery& q) {
    MarginScreen s;
    for (int i = 0; i < q.mean.size(); ++i) {
        if (q.cov(i, i) < 1e-14) {
            if (q.mean(i) < 0.0) s.definite_zero = true;
        } else {
            ++s.live_dims;
            s.min_prob = std::min(s.min_prob, norm_cdf(q.mean(i) / std::sqrt(q.cov(i, i))));
        }
    }
    return s;
}

inline OrthantQuery step_query(const TrajectoryDistribution& dist, const Polytope& poly, int t,
                               const IntegrationOptions& opts, std::uint64_t seed) {
    OrthantQuery q;
    q.mean = poly.normals * dist.planned_position(t) - poly.offsets;
    q.cov = poly.normals * dist.position_cov(t) * poly.normals.transpose();
    q.tolerance = opts.tolerance;
    q.rel_tolerance = opts.rel_tolerance;
    q.sample_cap = opts.sample_cap;
    q.seed = seed;
    return q;
}

inline OrthantQuery pair_query(const TrajectoryDistribution& dist, const Polytope& pl,
                               const Polytope& pm, int s, int t, const Eigen::MatrixXd& k_st,
                               const IntegrationOptions& opts, std::uint64_t seed) {
    const int il = pl.num_constraints();
    const int im = pm.num_constraints();
    OrthantQuery q;
    q.mean.resize(il + im);
    q.mean.head(il) = pl.normals * dist.planned_position(s) - pl.offsets;
    q.mean.tail(im) = pm.normals * dist.planned_position(t) - pm.offsets;
    q.cov.resize(il + im, il + im);
    q.cov.topLeftCorner(il, il) = pl.normals * dist.position_cov(s) * pl.normals.transpose();
    q.cov.bottomRightCorner(im, im) = pm.normals * dist.position_cov(t) * pm.normals.transpose();
    Eigen::MatrixXd cross = pl.normals * k_st * pm.normals.transpose();
    q.cov.topRightCorner(il, im) = cross;
    q.cov.bottomLeftCorner(im, il) = cross.transpose();
    q.tolerance = opts.tolerance;
    q.rel_tolerance = opts.rel_tolerance;
    q.sample_cap = opts.sample_cap;
    q.seed = seed;
    return q;
}

} // namespace detail

/// p_t = sum over obstacles of the orthant probability of the constraint
/// margins at step t; errors add across obstacles.
inline StepProbability step_collision_prob(const TrajectoryDistribution& dist,
                                           const ObstacleSet& obstacles, int t,
                                           const IntegrationOptions& opts = {}) {
    StepProbability out;
    for (int l = 0; l < obstacles.size(); ++l) {
        auto q = detail::step_query(dist, obstacles.polytopes[l], t, opts,
                                    detail::entry_seed(opts.seed, t, t, l, l));
        ProbabilityEstimate est = orthant_probability(q);
        out.value += est.value;
        out.error += est.error;
    }
    out.value = std::clamp(out.value, 0.0, 1.0);
    return out;
}

/// p_{s,t} summed over all ordered obstacle pairs (l, m); the stacked query
/// couples the two steps through the position cross-covariance K_st.
inline StepProbability pair_collision_prob(const TrajectoryDistribution& dist,
                                           const ObstacleSet& obstacles, int s, int t,
                                           const IntegrationOptions& opts = {}) {
    Eigen::MatrixXd k_st = dist.position_cross(s, t);
    StepProbability out;
    for (int l = 0; l < obstacles.size(); ++l) {
        for (int m = 0; m < obstacles.size(); ++m) {
            auto q = detail::pair_query(dist, obstacles.polytopes[l], obstacles.polytopes[m], s, t,
                                        k_st, opts, detail::entry_seed(opts.seed, s, t, l, m));
            ProbabilityEstimate est = orthant_probability(q);
            out.value += est.value;
            out.error += est.error;
        }
    }
    out.value = std::clamp(out.value, 0.0, 1.0);
    return out;
}

/// Computes every p_t, then the pair matrix for the requested mode. Pairs
/// with min(p_s, p_t) below the skip threshold are recorded as zero with
/// error min(p_s, p_t), which is sound because p_{s,t} <= min(p_s, p_t).
/// Pair evaluations run in parallel; per-entry seeding keeps the result
/// independent of the schedule.
inline CollisionProbabilities all_collision_probs(const TrajectoryDistribution& dist,
                                                  const ObstacleSet& obstacles,
                                                  const CollisionOptions& opts = {}) {
    using clock = std::chrono::steady_clock;
    const int T = dist.horizon();

    CollisionProbabilities cp;
    cp.mode = opts.pair_mode;
    cp.p.assign(T + 1, 0.0);
    cp.p_error.assign(T + 1, 0.0);
    cp.pairs = PairTable::empty(T + 1);

    const int L = obstacles.size();
    std::vector<detail::MarginScreen> screens(static_cast<std::size_t>(T + 1) * std::max(L, 1));

    auto t0 = clock::now();
    detail::parallel_for(T + 1, opts.threads, [&](std::int64_t t) {
        StepProbability sp = step_collision_prob(dist, obstacles, static_cast<int>(t),
                                                 opts.integration);
        cp.p[t] = sp.value;
        cp.p_error[t] = sp.error;
        for (int l = 0; l < L; ++l) {
            auto q = detail::step_query(dist, obstacles.polytopes[l], static_cast<int>(t),
                                        opts.integration, 0);
            screens[static_cast<std::size_t>(t) * L + l] = detail::screen_of(q);
        }
    });
    auto t1 = clock::now();
    cp.singles_seconds = std::chrono::duration<double>(t1 - t0).count();

    struct PairJob {
        int s, t;
        Eigen::MatrixXd k_st;
    };
    std::vector<PairJob> jobs;
    auto classify = [&](int s, int t) {
        std::size_t idx = cp.pairs.index(s, t);
        double cap = std::min(cp.p[s], cp.p[t]);
        if (cap < opts.skip_threshold) {
            cp.pairs.status[idx] = PairStatus::skipped;
            cp.pairs.value[idx] = 0.0;
            cp.pairs.error[idx] = cap;
            return false;
        }
        return true;
    };

    if (opts.pair_mode == PairMode::all) {
        dist.for_each_position_pair([&](int s, int t, Eigen::MatrixXd k_st) {
            if (classify(s, t)) jobs.push_back({s, t, std::move(k_st)});
        });
    } else if (opts.pair_mode == PairMode::chain) {
        for (int t = 1; t <= T; ++t) {
            if (classify(t - 1, t)) jobs.push_back({t - 1, t, dist.position_cross(t - 1, t)});
        }
    }

    detail::parallel_for(static_cast<std::int64_t>(jobs.size()), opts.threads, [&](std::int64_t i) {
        const PairJob& job = jobs[i];
        StepProbability out;
        for (int l = 0; l < L; ++l) {
            const auto& ms = screens[static_cast<std::size_t>(job.s) * L + l];
            for (int m = 0; m < L; ++m) {
                const auto& mt = screens[static_cast<std::size_t>(job.t) * L + m];
                // Shortcuts that reproduce orthant_probability's own deflation
                // and far-field screen without materializing the query.
                if (ms.definite_zero || mt.definite_zero) continue;
                if (ms.live_dims + mt.live_dims == 0) {
                    out.value += 1.0;
                    continue;
                }
                if (ms.live_dims + mt.live_dims >= 3) {
                    double half = 0.5 * std::min(ms.min_prob, mt.min_prob);
                    if (half <= std::max(opts.integration.tolerance,
                                         opts.integration.rel_tolerance * half)) {
                        out.value += half;
                        out.error += half;
                        continue;
                    }
                }
                auto q = detail::pair_query(dist, obstacles.polytopes[l], obstacles.polytopes[m],
                                            job.s, job.t, job.k_st, opts.integration,
                                            detail::entry_seed(opts.integration.seed, job.s, job.t,
                                                               l, m));
                ProbabilityEstimate est = orthant_probability(q);
                out.value += est.value;
                out.error += est.error;
            }
        }
        std::size_t idx = cp.pairs.index(job.s, job.t);
        cp.pairs.value[idx] = std::clamp(out.value, 0.0, 1.0);
        cp.pairs.error[idx] = out.error;
        cp.pairs.status[idx] = PairStatus::computed;
    });
    cp.pairs_seconds = std::chrono::duration<double>(clock::now() - t1).count();
    return cp;
}

} // namespace riskbounds
