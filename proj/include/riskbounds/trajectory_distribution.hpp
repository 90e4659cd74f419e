#pragma once

#include "riskbounds/lqg.hpp"
#include "riskbounds/scenario.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace riskbounds {

struct Gaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Zero-mean joint Gaussian of the augmented closed-loop states, held as
/// per-step covariances Sigma_t plus the transition factors needed for
/// cross-covariances; the full stacked trajectory covariance is never formed.
class TrajectoryDistribution {
public:
    /// Sigma_{t+1} = Abar_t Sigma_t Abar_t' + Wbar_t with Sigma_0 = 0;
    /// identical to the corresponding blocks of the stacked-noise form.
    static TrajectoryDistribution propagate(const ClosedLoopModel& model,
                                            const PlannedTrajectory& plan) {
        const int T = model.horizon();
        if (static_cast<int>(plan.positions.size()) != T + 1) {
            throw ValidationError("plan length must match the closed-loop horizon");
        }
        const int n = model.augmented_dim();

        TrajectoryDistribution dist;
        dist.transitions_ = model.Abar;
        dist.planned_ = plan.positions;
        dist.sigma_.reserve(T + 1);
        dist.sigma_.push_back(Eigen::MatrixXd::Zero(n, n));
        for (int t = 0; t < T; ++t) {
            Eigen::MatrixXd next =
                model.Abar[t] * dist.sigma_.back() * model.Abar[t].transpose() + model.Wbar[t];
            dist.sigma_.push_back(detail::symmetrized(next));
        }
        return dist;
    }

    int horizon() const { return static_cast<int>(sigma_.size()) - 1; }
    int augmented_dim() const { return static_cast<int>(sigma_[0].rows()); }
    int position_dim() const { return augmented_dim() / 2; }

    const Eigen::MatrixXd& sigma(int t) const { return sigma_.at(t); }
    const Eigen::MatrixXd& transition(int t) const { return transitions_.at(t); }
    const Eigen::VectorXd& planned_position(int t) const { return planned_.at(t); }

    /// Lambda_{s,t} = Cov(xbar_s, xbar_t) = Sigma_s (Abar_{t-1} ... Abar_s)'
    /// built by chaining the per-step factors; no transition is inverted.
    Eigen::MatrixXd cross_sigma(int s, int t) const {
        check_pair(s, t);
        Eigen::MatrixXd lambda = sigma_[s];
        for (int r = s; r < t; ++r) lambda = lambda * transitions_[r].transpose();
        return lambda;
    }

    /// Position deviation lives in the upper half of the augmented state.
    Eigen::MatrixXd position_cov(int t) const {
        const int d = position_dim();
        return sigma_.at(t).topLeftCorner(d, d);
    }

    Eigen::MatrixXd position_cross(int s, int t) const {
        const int d = position_dim();
        return cross_sigma(s, t).topLeftCorner(d, d);
    }

    Gaussian position_marginal(int t) const {
        return Gaussian{planned_.at(t), position_cov(t)};
    }

    Gaussian position_joint(int s, int t) const {
        check_pair(s, t);
        const int d = position_dim();
        Gaussian g;
        g.mean.resize(2 * d);
        g.mean.head(d) = planned_.at(s);
        g.mean.tail(d) = planned_.at(t);
        g.cov.resize(2 * d, 2 * d);
        g.cov.topLeftCorner(d, d) = position_cov(s);
        g.cov.bottomRightCorner(d, d) = position_cov(t);
        Eigen::MatrixXd k = position_cross(s, t);
        g.cov.topRightCorner(d, d) = k;
        g.cov.bottomLeftCorner(d, d) = k.transpose();
        return g;
    }

    /// Visits pairs (s, t), s < t, in row-major order, handing each the
    /// position cross-covariance K_st. The running product makes the whole
    /// sweep O(T^2) small-matrix multiplies with O(1) extra storage.
    template <typename F>
    void for_each_position_pair(F&& f) const {
        const int T = horizon();
        for (int s = 0; s <= T; ++s) {
            Eigen::MatrixXd lambda = sigma_[s];
            for (int t = s + 1; t <= T; ++t) {
                lambda = lambda * transitions_[t - 1].transpose();
                f(s, t, Eigen::MatrixXd(lambda.topLeftCorner(position_dim(), position_dim())));
            }
        }
    }

private:
    void check_pair(int s, int t) const {
        if (s < 0 || t > horizon() || s >= t) {
            throw std::out_of_range("require 0 <= s < t <= T");
        }
    }

    std::vector<Eigen::MatrixXd> sigma_;       // T+1 entries
    std::vector<Eigen::MatrixXd> transitions_; // T entries
    std::vector<Eigen::VectorXd> planned_;     // T+1 entries
};

} // namespace riskbounds
