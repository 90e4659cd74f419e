#pragma once

#include "riskbounds/detail/parallel.hpp"
#include "riskbounds/detail/random.hpp"
#include "riskbounds/lqg.hpp"
#include "riskbounds/scenario.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

namespace riskbounds {

/// Sampled executions; row i holds trajectory i's true positions, stacked
/// [x_0, x_1, ..., x_T] with d entries per step.
struct TrajectoryBatch {
    int horizon = 0;
    int dim = 0;
    Eigen::MatrixXd positions;
    std::uint64_t seed = 0;
    double sample_seconds = 0.0;

    std::int64_t size() const { return positions.rows(); }
};

struct McResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    double seconds = 0.0;
};

/// Simulates xbar_{t+1} = Abar_t xbar_t + wbar_t from xbar_0 = 0, drawing
/// wbar_t through a PSD square-root factor of Wbar_t. Each trajectory owns a
/// stream seeded by its index, so batches are reproducible and independent of
/// the thread schedule.
inline TrajectoryBatch sample_executions(const ClosedLoopModel& model,
                                         const PlannedTrajectory& plan, std::int64_t n,
                                         std::uint64_t seed, int threads = 0) {
    using clock = std::chrono::steady_clock;
    if (n < 1) throw ValidationError("need at least one sample");
    const int T = model.horizon();
    const int na = model.augmented_dim();
    const int d = na / 2;
    if (static_cast<int>(plan.positions.size()) != T + 1) {
        throw ValidationError("plan length must match the closed-loop horizon");
    }

    auto t0 = clock::now();
    std::vector<Eigen::MatrixXd> noise_factor;
    noise_factor.reserve(T);
    for (int t = 0; t < T; ++t) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.Wbar[t]);
        double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
            throw NumericError("closed-loop noise covariance not PSD at step " + std::to_string(t));
        }
        noise_factor.push_back(es.eigenvectors() *
                               es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
    }

    TrajectoryBatch batch;
    batch.horizon = T;
    batch.dim = d;
    batch.seed = seed;
    batch.positions.resize(n, static_cast<Eigen::Index>(T + 1) * d);

    detail::parallel_for(n, threads, [&](std::int64_t i) {
        detail::SplitMixStream stream(
            detail::mix_seed(seed, {0x6d63u, static_cast<std::uint64_t>(i)}));
        Eigen::VectorXd xbar = Eigen::VectorXd::Zero(na);
        Eigen::VectorXd xi(na);
        Eigen::VectorXd next(na);
        auto row = batch.positions.row(i);
        for (int t = 0; t < T; ++t) {
            row.segment(static_cast<Eigen::Index>(t) * d, d) =
                plan.positions[t] + xbar.head(d);
            for (int j = 0; j + 1 < na; j += 2) stream.next_normal_pair(xi(j), xi(j + 1));
            if (na % 2 == 1) {
                double z0, z1;
                stream.next_normal_pair(z0, z1);
                xi(na - 1) = z0;
            }
            next.noalias() = model.Abar[t] * xbar;
            next.noalias() += noise_factor[t] * xi;
            xbar.swap(next);
        }
        row.segment(static_cast<Eigen::Index>(T) * d, d) = plan.positions[T] + xbar.head(d);
    });
    batch.sample_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return batch;
}

/// A trajectory fails when any step's position lies inside any obstacle
/// (boundary included). estimate = failures / n exactly.
inline McResult estimate_failure(const TrajectoryBatch& batch, const ObstacleSet& obstacles,
                                 int threads = 0) {
    using clock = std::chrono::steady_clock;
    if (batch.size() < 1) throw ValidationError("empty trajectory batch");
    auto t0 = clock::now();

    const std::int64_t n = batch.size();
    const int d = batch.dim;
    std::vector<std::uint8_t> failed(n, 0);
    detail::parallel_for(n, threads, [&](std::int64_t i) {
        for (int t = 0; t <= batch.horizon; ++t) {
            Eigen::VectorXd x = batch.positions.row(i).segment(static_cast<Eigen::Index>(t) * d, d);
            if (obstacles.contains(x)) {
                failed[i] = 1;
                return;
            }
        }
    });

    std::int64_t failures = 0;
    for (std::uint8_t f : failed) failures += f;

    McResult res;
    res.samples = n;
    res.seed = batch.seed;
    res.estimate = static_cast<double>(failures) / static_cast<double>(n);
    res.std_error = std::sqrt(res.estimate * (1.0 - res.estimate) / static_cast<double>(n));
    res.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return res;
}

} // namespace riskbounds
