#pragma once

#include "riskbounds/detail/simplex.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskbounds {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Convex region { x : a_i^T x >= b_i, i = 1..I } with unit normals a_i
/// pointing into the region. An infeasible constraint set is allowed and
/// simply carries zero probability mass.
struct Polytope {
    Eigen::MatrixXd normals; // I x d, unit rows
    Eigen::VectorXd offsets; // I

    int num_constraints() const { return static_cast<int>(normals.rows()); }
    int dim() const { return static_cast<int>(normals.cols()); }

    /// Membership test; a point exactly on a face counts as inside.
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        for (int i = 0; i < normals.rows(); ++i) {
            if (normals.row(i).dot(x) < offsets(i)) return false;
        }
        return normals.rows() > 0;
    }

    double min_margin(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < normals.rows(); ++i) {
            m = std::min(m, normals.row(i).dot(x) - offsets(i));
        }
        return m;
    }

    void validate() const {
        if (normals.rows() < 1) throw ValidationError("polytope must have at least one constraint");
        if (normals.rows() != offsets.size()) {
            throw ValidationError("polytope normals/offsets length mismatch");
        }
        for (int i = 0; i < normals.rows(); ++i) {
            if (std::abs(normals.row(i).norm() - 1.0) > 1e-9) {
                throw ValidationError("polytope normal " + std::to_string(i) +
                                      " is not unit length (pass auto_normalize to rescale)");
            }
        }
    }

    /// Rescales each row to unit length; offsets divide by the same norm so
    /// the half-spaces are unchanged.
    void normalize() {
        for (int i = 0; i < normals.rows(); ++i) {
            double n = normals.row(i).norm();
            if (n <= 0.0) throw ValidationError("polytope normal " + std::to_string(i) + " is zero");
            normals.row(i) /= n;
            offsets(i) /= n;
        }
    }

    /// Convex polygon in the plane from its vertices (any order); edges
    /// become half-space constraints with inward normals.
    static Polytope from_vertices(const std::vector<Eigen::Vector2d>& verts) {
        if (verts.size() < 3) throw ValidationError("polygon needs at least 3 vertices");
        Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
        for (const auto& v : verts) centroid += v;
        centroid /= static_cast<double>(verts.size());

        std::vector<Eigen::Vector2d> ordered = verts;
        std::sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
            return std::atan2(a.y() - centroid.y(), a.x() - centroid.x()) <
                   std::atan2(b.y() - centroid.y(), b.x() - centroid.x());
        });

        const int n = static_cast<int>(ordered.size());
        Polytope poly;
        poly.normals.resize(n, 2);
        poly.offsets.resize(n);
        for (int i = 0; i < n; ++i) {
            Eigen::Vector2d e = ordered[(i + 1) % n] - ordered[i];
            Eigen::Vector2d normal(-e.y(), e.x()); // CCW ordering puts this inward
            double len = normal.norm();
            if (len < 1e-12) throw ValidationError("degenerate polygon edge");
            normal /= len;
            if (normal.dot(centroid - ordered[i]) < 0.0) normal = -normal;
            poly.normals.row(i) = normal;
            poly.offsets(i) = normal.dot(ordered[i]);
        }
        return poly;
    }

    static Polytope axis_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        const int d = static_cast<int>(lo.size());
        Polytope poly;
        poly.normals = Eigen::MatrixXd::Zero(2 * d, d);
        poly.offsets.resize(2 * d);
        for (int j = 0; j < d; ++j) {
            poly.normals(2 * j, j) = 1.0;
            poly.offsets(2 * j) = lo(j);
            poly.normals(2 * j + 1, j) = -1.0;
            poly.offsets(2 * j + 1) = -hi(j);
        }
        return poly;
    }
};

struct ObstacleSet {
    std::vector<Polytope> polytopes;

    int size() const { return static_cast<int>(polytopes.size()); }

    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        for (const auto& poly : polytopes) {
            if (poly.contains(x)) return true;
        }
        return false;
    }

    void validate(int dim) const {
        for (std::size_t l = 0; l < polytopes.size(); ++l) {
            polytopes[l].validate();
            if (polytopes[l].dim() != dim) {
                throw ValidationError("obstacle " + std::to_string(l) + " dimension mismatch");
            }
        }
        // Disjointness is assumed, not verified: the cheap heuristic rejects
        // a pair when one Chebyshev center lies inside the other polytope.
        std::vector<Eigen::VectorXd> centers(polytopes.size());
        std::vector<bool> nonempty(polytopes.size(), false);
        for (std::size_t l = 0; l < polytopes.size(); ++l) {
            auto c = detail::chebyshev_center(polytopes[l].normals, polytopes[l].offsets);
            centers[l] = c.center;
            nonempty[l] = c.converged && c.radius > 1e-12;
        }
        for (std::size_t l = 0; l < polytopes.size(); ++l) {
            if (!nonempty[l]) continue;
            for (std::size_t m = 0; m < polytopes.size(); ++m) {
                if (m == l) continue;
                if (polytopes[m].contains(centers[l])) {
                    throw ValidationError("obstacles " + std::to_string(l) + " and " +
                                          std::to_string(m) + " overlap (center-containment check)");
                }
            }
        }
    }
};

/// Discrete-time system x_{t+1} = A_t x + B_t u + w, y = C_t x + v with
/// per-step matrices for t = 0..T-1 and quadratic tracking weights Q_t, R_t.
struct LinearSystem {
    std::vector<Eigen::MatrixXd> A, B, C, W, V, Q, R;

    int horizon() const { return static_cast<int>(A.size()); }
    int state_dim() const { return A.empty() ? 0 : static_cast<int>(A[0].rows()); }
    int input_dim() const { return B.empty() ? 0 : static_cast<int>(B[0].cols()); }
    int output_dim() const { return C.empty() ? 0 : static_cast<int>(C[0].rows()); }

    static LinearSystem time_invariant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& C, const Eigen::MatrixXd& W,
                                       const Eigen::MatrixXd& V, const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R, int T) {
        LinearSystem sys;
        sys.A.assign(T, A);
        sys.B.assign(T, B);
        sys.C.assign(T, C);
        sys.W.assign(T, W);
        sys.V.assign(T, V);
        sys.Q.assign(T, Q);
        sys.R.assign(T, R);
        return sys;
    }

    void validate() const;
};

struct PlannedTrajectory {
    std::vector<Eigen::VectorXd> positions; // T+1
    std::vector<Eigen::VectorXd> inputs;    // T

    int horizon() const { return static_cast<int>(inputs.size()); }
};

/// Waypoint recipe a scenario was interpolated from; kept so the plan can be
/// re-discretized at other rates.
struct WaypointPlan {
    std::vector<Eigen::Vector2d> points;
    int steps_per_segment = 1;
    double z_scale = 1e-3;
};

struct Scenario {
    LinearSystem system;
    PlannedTrajectory plan;
    ObstacleSet obstacles;
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> bbox;
    std::optional<WaypointPlan> waypoints;

    int horizon() const { return system.horizon(); }
    int dim() const { return system.state_dim(); }

    struct ValidateOptions {
        bool strict_plan = false;             // plan drift becomes an error
        std::vector<std::string>* warnings = nullptr;
    };

    void validate(const ValidateOptions& opts) const;
    void validate() const { validate(ValidateOptions{}); }
};

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& m, const std::string& name) {
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ValidationError(name + " is not symmetric");
    }
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline void require_psd(const Eigen::MatrixXd& m, const std::string& name) {
    require_symmetric(m, name);
    if (min_eigenvalue(m) < -1e-10) throw ValidationError(name + " is not positive semidefinite");
}

inline void require_pd(const Eigen::MatrixXd& m, const std::string& name) {
    require_symmetric(m, name);
    if (min_eigenvalue(m) <= 0.0) throw ValidationError(name + " is not positive definite");
}

} // namespace detail

inline void LinearSystem::validate() const {
    const int T = horizon();
    if (T < 1) throw ValidationError("horizon T must be >= 1");
    if (state_dim() < 2) throw ValidationError("state dimension d must be >= 2");
    auto check_len = [&](std::size_t len, const char* name) {
        if (static_cast<int>(len) != T) {
            throw ValidationError(std::string(name) + " sequence length != T");
        }
    };
    check_len(B.size(), "B");
    check_len(C.size(), "C");
    check_len(W.size(), "W");
    check_len(V.size(), "V");
    check_len(Q.size(), "Q");
    check_len(R.size(), "R");

    const int d = state_dim();
    const int m = input_dim();
    const int q = output_dim();
    for (int t = 0; t < T; ++t) {
        auto tag = [&](const char* name) { return std::string(name) + "[" + std::to_string(t) + "]"; };
        if (A[t].rows() != d || A[t].cols() != d) throw ValidationError(tag("A") + " must be d x d");
        if (B[t].rows() != d || B[t].cols() != m) throw ValidationError(tag("B") + " must be d x m");
        if (C[t].rows() != q || C[t].cols() != d) throw ValidationError(tag("C") + " must be q x d");
        if (W[t].rows() != d || W[t].cols() != d) throw ValidationError(tag("W") + " must be d x d");
        if (V[t].rows() != q || V[t].cols() != q) throw ValidationError(tag("V") + " must be q x q");
        if (Q[t].rows() != d || Q[t].cols() != d) throw ValidationError(tag("Q") + " must be d x d");
        if (R[t].rows() != m || R[t].cols() != m) throw ValidationError(tag("R") + " must be m x m");
        detail::require_psd(W[t], tag("W"));
        detail::require_psd(Q[t], tag("Q"));
        detail::require_pd(V[t], tag("V"));
        detail::require_pd(R[t], tag("R"));
    }
}

inline void Scenario::validate(const ValidateOptions& opts) const {
    system.validate();
    const int T = system.horizon();
    const int d = system.state_dim();
    const int m = system.input_dim();

    if (static_cast<int>(plan.positions.size()) != T + 1) {
        throw ValidationError("plan must have T+1 positions");
    }
    if (static_cast<int>(plan.inputs.size()) != T) {
        throw ValidationError("plan must have T inputs");
    }
    for (int t = 0; t <= T; ++t) {
        if (plan.positions[t].size() != d) throw ValidationError("plan position dimension mismatch");
    }
    for (int t = 0; t < T; ++t) {
        if (plan.inputs[t].size() != m) throw ValidationError("plan input dimension mismatch");
    }

    // Dynamic consistency x_{t+1} = A_t x_t + B_t u_t; imported plans may
    // carry small drift, so the default is a warning.
    double drift = 0.0;
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd predicted = system.A[t] * plan.positions[t] + system.B[t] * plan.inputs[t];
        drift = std::max(drift, (plan.positions[t + 1] - predicted).cwiseAbs().maxCoeff());
    }
    if (drift > 1e-9) {
        std::string msg = "planned trajectory violates the dynamics by " + std::to_string(drift);
        if (opts.strict_plan) throw ValidationError(msg);
        if (opts.warnings) opts.warnings->push_back(msg);
    }

    obstacles.validate(d);
    for (int l = 0; l < obstacles.size(); ++l) {
        if (obstacles.polytopes[l].contains(plan.positions[0])) {
            throw ValidationError("start inside obstacle " + std::to_string(l));
        }
    }

    if (bbox) {
        if (bbox->first.size() != d || bbox->second.size() != d) {
            throw ValidationError("bbox dimension mismatch");
        }
    }
}

/// Single-integrator planar fixture: A = B = C = I, inputs are the planned
/// steps, and the process noise grows with the distance traveled,
/// W_t = |x_{t+1} - x_t| * z_scale * I. Obstacles start empty.
inline Scenario make_ground_robot_scenario(const std::vector<Eigen::Vector2d>& waypoints,
                                           int steps_per_segment, double z_scale) {
    if (waypoints.size() < 2) throw ValidationError("need at least 2 waypoints");
    if (steps_per_segment < 1) throw ValidationError("steps_per_segment must be >= 1");
    if (!(z_scale > 0.0)) throw ValidationError("z_scale must be positive");
    for (const auto& w : waypoints) {
        if (w.x() < 0.0 || w.x() > 1.0 || w.y() < 0.0 || w.y() > 1.0) {
            throw ValidationError("waypoints must lie in the unit square");
        }
    }

    const int segments = static_cast<int>(waypoints.size()) - 1;
    const int T = segments * steps_per_segment;
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);

    Scenario sc;
    sc.plan.positions.reserve(T + 1);
    for (int s = 0; s < segments; ++s) {
        for (int j = 0; j < steps_per_segment; ++j) {
            double a = static_cast<double>(j) / steps_per_segment;
            sc.plan.positions.push_back((1.0 - a) * waypoints[s] + a * waypoints[s + 1]);
        }
    }
    sc.plan.positions.push_back(waypoints.back());

    sc.system.A.assign(T, I2);
    sc.system.B.assign(T, I2);
    sc.system.C.assign(T, I2);
    sc.system.Q.assign(T, I2);
    sc.system.R.assign(T, I2);
    sc.system.V.assign(T, z_scale * I2);
    sc.system.W.reserve(T);
    sc.plan.inputs.reserve(T);
    for (int t = 0; t < T; ++t) {
        Eigen::Vector2d step = sc.plan.positions[t + 1].head<2>() - sc.plan.positions[t].head<2>();
        sc.plan.inputs.push_back(step);
        sc.system.W.push_back(step.norm() * z_scale * I2);
    }

    sc.bbox = std::make_pair(Eigen::Vector2d::Zero().eval(), Eigen::Vector2d::Ones().eval());
    sc.waypoints = WaypointPlan{waypoints, steps_per_segment, z_scale};
    return sc;
}

} // namespace riskbounds
