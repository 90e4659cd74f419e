#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace riskbounds::detail {

struct ChebyshevResult {
    Eigen::VectorXd center;
    double radius = 0.0;
    bool converged = false;
};

/// Chebyshev center of { x : a_i^T x >= b_i } with unit rows a_i: the (x, r)
/// maximizing r subject to a_i^T x - r >= b_i. A box |x_j| <= B and r <= B,
/// with B derived from the offsets, keeps the LP bounded even for half-space
/// regions; the solver is a dense tableau simplex with Bland's rule.
inline ChebyshevResult chebyshev_center(const Eigen::MatrixXd& normals,
                                        const Eigen::VectorXd& offsets) {
    const int ncon = static_cast<int>(normals.rows());
    const int d = static_cast<int>(normals.cols());
    const double box = 10.0 * (1.0 + offsets.cwiseAbs().maxCoeff());

    // Rows of M v <= rhs with v = (x, r).
    const int m = ncon + 2 * d + 1;
    const int nv = d + 1;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, nv);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < ncon; ++i) {
        M.row(i).head(d) = -normals.row(i);
        M(i, d) = 1.0;
        rhs(i) = -offsets(i);
    }
    for (int j = 0; j < d; ++j) {
        M(ncon + 2 * j, j) = 1.0;
        rhs(ncon + 2 * j) = box;
        M(ncon + 2 * j + 1, j) = -1.0;
        rhs(ncon + 2 * j + 1) = box;
    }
    M(m - 1, d) = 1.0;
    rhs(m - 1) = box;

    // Shift to a strictly feasible origin so the slack basis starts feasible.
    double r0 = box;
    for (int i = 0; i < ncon; ++i) r0 = std::min(r0, -offsets(i));
    r0 -= 1.0;
    Eigen::VectorXd v0 = Eigen::VectorXd::Zero(nv);
    v0(d) = r0;
    Eigen::VectorXd b = rhs - M * v0;

    // Free variables split as u - w.
    const int n = 2 * nv;
    Eigen::MatrixXd tab(m, n + m);
    tab.setZero();
    tab.block(0, 0, m, nv) = M;
    tab.block(0, nv, m, nv) = -M;
    tab.block(0, n, m, m).setIdentity();

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + m);
    cost(d) = 1.0;
    cost(nv + d) = -1.0;

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    const double eps_cost = 1e-9;
    const double eps_pivot = 1e-11;
    bool converged = false;
    for (int iter = 0; iter < 5000; ++iter) {
        int enter = -1;
        for (int j = 0; j < n + m; ++j) {
            if (cost(j) > eps_cost) {
                enter = j;
                break; // Bland: smallest improving index
            }
        }
        if (enter < 0) {
            converged = true;
            break;
        }
        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            double a = tab(i, enter);
            if (a <= eps_pivot) continue;
            double ratio = b(i) / a;
            if (leave < 0 || ratio < best_ratio - 1e-12 ||
                (std::abs(ratio - best_ratio) <= 1e-12 && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave < 0) break; // unbounded; cannot happen with the box
        double piv = tab(leave, enter);
        tab.row(leave) /= piv;
        b(leave) /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == leave) continue;
            double f = tab(i, enter);
            if (f == 0.0) continue;
            tab.row(i) -= f * tab.row(leave);
            b(i) -= f * b(leave);
        }
        double fc = cost(enter);
        cost -= fc * tab.row(leave).transpose();
        basis[leave] = enter;
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n) y(basis[i]) = b(i);
    }
    Eigen::VectorXd v = v0 + y.head(nv) - y.tail(nv);

    ChebyshevResult res;
    res.center = v.head(d);
    res.radius = v(d);
    res.converged = converged;
    return res;
}

} // namespace riskbounds::detail
