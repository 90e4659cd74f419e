#pragma once

#include "riskbounds/scenario.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace riskbounds {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LqrSolution {
    std::vector<Eigen::MatrixXd> F; // m x d gains, t = 0..T-1
    std::vector<Eigen::MatrixXd> H; // d x d Riccati matrices, t = 0..T-1
};

struct KalmanSolution {
    std::vector<Eigen::MatrixXd> G;      // d x q gains, t = 0..T-1
    std::vector<Eigen::MatrixXd> P_pred; // P_{t|t-1}, with P_{0|-1} = 0
    std::vector<Eigen::MatrixXd> P_post; // P_{t|t}
};

/// Joint recursion of the deviation and its one-step prediction:
/// xbar_{t+1} = Abar_t xbar_t + wbar_t, wbar_t ~ N(0, Wbar_t).
struct ClosedLoopModel {
    std::vector<Eigen::MatrixXd> Abar; // 2d x 2d
    std::vector<Eigen::MatrixXd> Wbar; // 2d x 2d, symmetric PSD

    int horizon() const { return static_cast<int>(Abar.size()); }
    int augmented_dim() const { return Abar.empty() ? 0 : static_cast<int>(Abar[0].rows()); }
};

namespace detail {

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

} // namespace detail

/// Finite-horizon LQR gains via the backward Riccati recursion
/// H_{T-1} = Q_{T-1},
/// H_{t-1} = Q_{t-1} + A_t' H_t A_t - A_t' H_t B_t (B_t' H_t B_t + R_t)^-1 B_t' H_t A_t,
/// F_t = -(B_t' H_t B_t + R_t)^-1 B_t' H_t A_t.
inline LqrSolution solve_lqr(const LinearSystem& sys) {
    const int T = sys.horizon();
    if (T < 1) throw ValidationError("horizon must be >= 1");

    LqrSolution sol;
    sol.H.assign(T, Eigen::MatrixXd());
    sol.F.assign(T, Eigen::MatrixXd());

    sol.H[T - 1] = detail::symmetrized(sys.Q[T - 1]);
    for (int t = T - 1; t >= 1; --t) {
        const Eigen::MatrixXd& H = sol.H[t];
        Eigen::MatrixXd gram = sys.B[t].transpose() * H * sys.B[t] + sys.R[t];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::symmetrized(gram),
                                                          Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
            throw NumericError("ill-conditioned input-weight matrix at step " + std::to_string(t));
        }
        Eigen::MatrixXd cross = sys.B[t].transpose() * H * sys.A[t];
        Eigen::MatrixXd correction = cross.transpose() * gram.ldlt().solve(cross);
        sol.H[t - 1] = detail::symmetrized(sys.Q[t - 1] + sys.A[t].transpose() * H * sys.A[t] -
                                           correction);
    }
    for (int t = 0; t < T; ++t) {
        Eigen::MatrixXd gram =
            detail::symmetrized(sys.B[t].transpose() * sol.H[t] * sys.B[t] + sys.R[t]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
            throw NumericError("ill-conditioned input-weight matrix at step " + std::to_string(t));
        }
        sol.F[t] = -gram.ldlt().solve(sys.B[t].transpose() * sol.H[t] * sys.A[t]);
        if (!sol.F[t].allFinite()) throw NumericError("non-finite LQR gain at step " + std::to_string(t));
    }
    return sol;
}

/// Forward Riccati / Kalman recursion with the deterministic start
/// P_{0|0} = 0 (so also P_{0|-1} = 0 and G_0 = 0). The covariance update is
/// the gain (Joseph) form, which stays defined when P_{t|t-1} is singular and
/// agrees with the information-form update P_{t|t}^-1 = P_{t|t-1}^-1 + C'V^-1C
/// wherever the latter exists.
inline KalmanSolution solve_kalman(const LinearSystem& sys) {
    const int T = sys.horizon();
    if (T < 1) throw ValidationError("horizon must be >= 1");
    const int d = sys.state_dim();

    KalmanSolution sol;
    sol.G.assign(T, Eigen::MatrixXd());
    sol.P_pred.assign(T, Eigen::MatrixXd());
    sol.P_post.assign(T, Eigen::MatrixXd());

    Eigen::MatrixXd post = Eigen::MatrixXd::Zero(d, d);
    for (int t = 0; t < T; ++t) {
        Eigen::MatrixXd pred =
            t == 0 ? Eigen::MatrixXd::Zero(d, d)
                   : detail::symmetrized(sys.A[t - 1] * post * sys.A[t - 1].transpose() +
                                         sys.W[t - 1]);
        Eigen::MatrixXd innovation =
            detail::symmetrized(sys.C[t] * pred * sys.C[t].transpose() + sys.V[t]);
        Eigen::LLT<Eigen::MatrixXd> llt(innovation);
        if (llt.info() != Eigen::Success) {
            throw NumericError("innovation covariance not positive definite at step " +
                               std::to_string(t));
        }
        Eigen::MatrixXd gain = llt.solve(sys.C[t] * pred).transpose();

        Eigen::MatrixXd closed = Eigen::MatrixXd::Identity(d, d) - gain * sys.C[t];
        post = detail::symmetrized(closed * pred * closed.transpose() +
                                   gain * sys.V[t] * gain.transpose());

        sol.P_pred[t] = std::move(pred);
        sol.G[t] = std::move(gain);
        sol.P_post[t] = post;
    }
    return sol;
}

/// Augmented closed-loop matrices:
///   Abar_t = [ A + BFGC          BF(I - GC)        ]
///            [ (A + BF)GC        (A + BF)(I - GC)  ]
///   Wbar_t = [ BFG V G'F'B' + W  BFG V G'(A+BF)'   ]
///            [ (A+BF)G V G'F'B'  (A+BF)G V G'(A+BF)' ]
inline ClosedLoopModel build_closed_loop(const LinearSystem& sys, const LqrSolution& lqr,
                                         const KalmanSolution& kalman) {
    const int T = sys.horizon();
    const int d = sys.state_dim();
    if (static_cast<int>(lqr.F.size()) != T || static_cast<int>(kalman.G.size()) != T) {
        throw ValidationError("gain sequences must match the horizon");
    }

    ClosedLoopModel model;
    model.Abar.reserve(T);
    model.Wbar.reserve(T);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    for (int t = 0; t < T; ++t) {
        const Eigen::MatrixXd BF = sys.B[t] * lqr.F[t];
        const Eigen::MatrixXd ABF = sys.A[t] + BF;
        const Eigen::MatrixXd GC = kalman.G[t] * sys.C[t];

        Eigen::MatrixXd Abar(2 * d, 2 * d);
        Abar.topLeftCorner(d, d) = sys.A[t] + BF * GC;
        Abar.topRightCorner(d, d) = BF * (I - GC);
        Abar.bottomLeftCorner(d, d) = ABF * GC;
        Abar.bottomRightCorner(d, d) = ABF * (I - GC);

        const Eigen::MatrixXd BFG = BF * kalman.G[t];
        const Eigen::MatrixXd ABFG = ABF * kalman.G[t];
        Eigen::MatrixXd Wbar(2 * d, 2 * d);
        Wbar.topLeftCorner(d, d) = BFG * sys.V[t] * BFG.transpose() + sys.W[t];
        Wbar.topRightCorner(d, d) = BFG * sys.V[t] * ABFG.transpose();
        Wbar.bottomLeftCorner(d, d) = ABFG * sys.V[t] * BFG.transpose();
        Wbar.bottomRightCorner(d, d) = ABFG * sys.V[t] * ABFG.transpose();

        model.Abar.push_back(std::move(Abar));
        model.Wbar.push_back(detail::symmetrized(Wbar));
    }
    return model;
}

} // namespace riskbounds
