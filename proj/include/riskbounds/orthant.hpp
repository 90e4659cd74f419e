#pragma once

#include "riskbounds/detail/fast_normal.hpp"
#include "riskbounds/detail/normal.hpp"
#include "riskbounds/detail/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace riskbounds {

/// Request for P(h >= 0 componentwise), h ~ N(mean, cov).
struct OrthantQuery {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double tolerance = 1e-6;          // absolute error target
    double rel_tolerance = 0.0;       // optional relative target; 0 disables
    std::uint64_t seed = 0;
    std::int64_t sample_cap = 2'000'000; // total QMC points across all shifts
};

struct ProbabilityEstimate {
    double value = 0.0;
    double error = 0.0;
    std::int64_t samples = 0;
    bool converged = true; // false when the cap was hit above tolerance
};

/// Outcome of removing numerically deterministic dimensions: either the
/// probability is fully resolved (0 or 1) or a strictly smaller query remains.
struct DeflateResult {
    std::optional<double> definite;
    OrthantQuery query;

    bool resolved() const { return definite.has_value(); }
};

/// Dimensions with variance < 1e-14 are deterministic: a negative mean there
/// forces probability 0, otherwise the dimension is dropped.
inline DeflateResult deflate_degenerate(const OrthantQuery& q) {
    const int k = static_cast<int>(q.mean.size());
    std::vector<int> keep;
    keep.reserve(k);
    for (int i = 0; i < k; ++i) {
        if (q.cov(i, i) < 1e-14) {
            if (q.mean(i) < 0.0) return DeflateResult{0.0, {}};
        } else {
            keep.push_back(i);
        }
    }
    if (keep.empty()) return DeflateResult{1.0, {}};

    DeflateResult res;
    res.query = q;
    if (static_cast<int>(keep.size()) != k) {
        const int r = static_cast<int>(keep.size());
        res.query.mean.resize(r);
        res.query.cov.resize(r, r);
        for (int i = 0; i < r; ++i) {
            res.query.mean(i) = q.mean(keep[i]);
            for (int j = 0; j < r; ++j) res.query.cov(i, j) = q.cov(keep[i], keep[j]);
        }
    }
    return res;
}

namespace detail {

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth, double fa, double fb,
                        double fm, double whole) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(f, a, m, 0.5 * tol, depth - 1, fa, fm, flm, left) +
           adaptive_simpson(f, m, b, 0.5 * tol, depth - 1, fm, fb, frm, right);
}

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, tol, 48, fa, fb, fm, whole);
}

/// P(Z1 <= x, Z2 <= y) for standard bivariate normals with correlation rho,
/// via the arcsin-substituted single integral of the correlation derivative.
inline double bivariate_cdf(double x, double y, double rho) {
    rho = std::clamp(rho, -1.0, 1.0);
    if (rho >= 1.0 - 1e-12) return norm_cdf(std::min(x, y));
    if (rho <= -1.0 + 1e-12) return std::max(0.0, norm_cdf(x) + norm_cdf(y) - 1.0);

    const double upper = std::asin(rho);
    auto integrand = [x, y](double theta) {
        double s = std::sin(theta);
        double c2 = std::cos(theta);
        c2 *= c2;
        return std::exp(-(x * x - 2.0 * x * y * s + y * y) / (2.0 * c2));
    };
    double integral = upper >= 0.0 ? adaptive_simpson(integrand, 0.0, upper, 1e-14)
                                   : -adaptive_simpson(integrand, upper, 0.0, 1e-14);
    double p = norm_cdf(x) * norm_cdf(y) + integral / (2.0 * std::numbers::pi);
    return std::clamp(p, 0.0, 1.0);
}

/// P(h1 >= 0, h2 >= 0) for h ~ N(mu, cov) with positive variances.
inline double bivariate_orthant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
    const double s1 = std::sqrt(cov(0, 0));
    const double s2 = std::sqrt(cov(1, 1));
    double rho = cov(0, 1) / (s1 * s2);
    if (std::abs(rho) > 1.0 + 1e-8) {
        throw std::invalid_argument("orthant covariance is not positive semidefinite");
    }
    // (h1 >= 0, h2 >= 0) maps to (Z1 <= mu1/s1, Z2 <= mu2/s2) with the same rho.
    return bivariate_cdf(mu(0) / s1, mu(1) / s2, rho);
}

/// Extra truncation folded into one z column: a conditionally deterministic
/// margin h = mean + coef . z + divisor * z_col >= 0 becomes a lower or upper
/// bound on z_col depending on the divisor's sign.
struct FoldedBound {
    double mean = 0.0;
    double divisor = 1.0;
    std::vector<double> coef; // over columns before the owning one
};

struct GenzColumn {
    double mean = 0.0;
    double sd = 1.0;
    bool draws_z = true; // false when no later evaluation references this z
    std::vector<double> coef;
    std::vector<FoldedBound> bounds;
};

struct GenzPlan {
    std::vector<GenzColumn> cols; // in sampling order
    int n_u = 0;                  // QMC dimensions actually drawn
    bool definitely_zero = false; // a constant margin is violated

    int n_z() const { return static_cast<int>(cols.size()); }
};

/// Sequential-conditioning factorization with the variables reordered by
/// smallest conditional variance first (ties by original index). Variables
/// whose conditional variance vanishes are exact linear functions of earlier
/// z's; their margins fold into the truncation interval of the last column
/// they reference, keeping the integrand a smooth product of interval
/// probabilities even for rank-deficient covariances.
inline GenzPlan build_genz_plan(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
    const int k = static_cast<int>(mu.size());
    Eigen::MatrixXd schur = cov;
    Eigen::MatrixXd lmat = Eigen::MatrixXd::Zero(k, k);

    const double scale = std::max(cov.diagonal().maxCoeff(), 0.0);
    const double eps_det = std::max(1e-12 * scale, 1e-300);
    const double neg_tol = -1e-10 * std::max(1.0, scale);

    GenzPlan plan;
    plan.cols.reserve(k);
    std::vector<bool> used(k, false);
    int ncol = 0;
    for (int step = 0; step < k; ++step) {
        int pick = -1;
        for (int j = 0; j < k; ++j) {
            if (used[j]) continue;
            if (pick < 0 || schur(j, j) < schur(pick, pick)) pick = j;
        }
        double var = schur(pick, pick);
        if (var < neg_tol) {
            throw std::invalid_argument("orthant covariance is not positive semidefinite");
        }
        used[pick] = true;

        std::vector<double> coef(ncol);
        double coef_max = 0.0;
        for (int c = 0; c < ncol; ++c) {
            coef[c] = lmat(pick, c);
            coef_max = std::max(coef_max, std::abs(coef[c]));
        }

        if (var <= eps_det) {
            // Deterministic margin: fold into the last referenced column.
            int owner = -1;
            for (int c = ncol - 1; c >= 0; --c) {
                if (std::abs(coef[c]) > 1e-9 * coef_max) {
                    owner = c;
                    break;
                }
            }
            if (owner < 0) {
                if (mu(pick) < -1e-12) plan.definitely_zero = true;
                continue;
            }
            FoldedBound bound;
            bound.mean = mu(pick);
            bound.divisor = coef[owner];
            bound.coef.assign(coef.begin(), coef.begin() + owner);
            plan.cols[owner].bounds.push_back(std::move(bound));
            continue;
        }

        GenzColumn col;
        col.mean = mu(pick);
        col.sd = std::sqrt(var);
        col.coef = std::move(coef);
        for (int j = 0; j < k; ++j) {
            if (used[j]) continue;
            lmat(j, ncol) = schur(j, pick) / col.sd;
        }
        for (int j = 0; j < k; ++j) {
            if (used[j]) continue;
            for (int j2 = 0; j2 < k; ++j2) {
                if (used[j2]) continue;
                schur(j, j2) -= lmat(j, ncol) * lmat(j2, ncol);
            }
        }
        plan.cols.push_back(std::move(col));
        ++ncol;
    }

    // A z needs drawing only when some later own-row or folded bound uses it.
    plan.n_u = 0;
    for (int c = 0; c < ncol; ++c) {
        bool referenced = false;
        for (int later = c + 1; later < ncol && !referenced; ++later) {
            const GenzColumn& col = plan.cols[later];
            if (static_cast<int>(col.coef.size()) > c && col.coef[c] != 0.0) referenced = true;
            for (const FoldedBound& b : col.bounds) {
                if (static_cast<int>(b.coef.size()) > c && b.coef[c] != 0.0) {
                    referenced = true;
                    break;
                }
            }
        }
        plan.cols[c].draws_z = referenced;
        plan.n_u += referenced ? 1 : 0;
    }
    return plan;
}

inline double tent(double x) {
    double u = 1.0 - std::abs(2.0 * (x - std::floor(x)) - 1.0);
    return std::clamp(u, 0x1p-53, 1.0 - 0x1p-53);
}

constexpr int kShiftReplicates = 12;
constexpr int kPointBlock = 64;

/// Mean integrand value for points n in (n_from, n_to] of one randomly
/// shifted Kronecker sequence. Each column contributes the probability of
/// its truncation interval and conditionally samples its z by inverse CDF.
inline double genz_accumulate(const GenzPlan& plan, const std::vector<double>& generators,
                              const std::vector<double>& shift, std::int64_t n_from,
                              std::int64_t n_to) {
    const int n_z = plan.n_z();
    double total = 0.0;
    std::vector<double> z(static_cast<std::size_t>(kPointBlock) * std::max(n_z, 1));
    std::vector<double> e(kPointBlock);

    for (std::int64_t base = n_from; base < n_to; base += kPointBlock) {
        const int count = static_cast<int>(std::min<std::int64_t>(kPointBlock, n_to - base));
        std::fill(e.begin(), e.begin() + count, 1.0);

        int udim = 0;
        for (std::size_t cidx = 0; cidx < plan.cols.size(); ++cidx) {
            const GenzColumn& col = plan.cols[cidx];
            const int ncoef = static_cast<int>(col.coef.size());
            for (int p = 0; p < count; ++p) {
                if (e[p] == 0.0) continue;
                double* zp = &z[static_cast<std::size_t>(p) * n_z];
                double s = col.mean;
                for (int c = 0; c < ncoef; ++c) s += col.coef[c] * zp[c];
                double p_low = fast_norm_cdf_complement(-s / col.sd);
                double p_high = 0.0;
                for (const FoldedBound& b : col.bounds) {
                    double sb = b.mean;
                    const int nb = static_cast<int>(b.coef.size());
                    for (int c = 0; c < nb; ++c) sb += b.coef[c] * zp[c];
                    double cut = -sb / b.divisor;
                    double pc = fast_norm_cdf_complement(cut);
                    if (b.divisor > 0.0) {
                        p_low = std::min(p_low, pc); // tighter lower bound on z
                    } else {
                        p_high = std::max(p_high, pc); // upper bound on z
                    }
                }
                const double width = p_low - p_high;
                if (width <= 0.0) {
                    e[p] = 0.0;
                    continue;
                }
                e[p] *= width;
                if (!col.draws_z) continue;
                const double n_index = static_cast<double>(base + 1 + p);
                const double u = tent(n_index * generators[udim] + shift[udim]);
                double q = p_high + (1.0 - u) * width;
                if (q < 1e-300) q = 1e-300;
                zp[cidx] = fast_norm_upper_quantile(q);
            }
            if (col.draws_z) ++udim;
        }
        for (int p = 0; p < count; ++p) total += e[p];
    }
    return total;
}

/// Genz-style sequential conditioning with randomized quasi-Monte Carlo:
/// 12 independently shifted Kronecker (sqrt-prime) sequences, tent
/// periodization, sample counts doubling until the spread of the replicate
/// means meets the tolerance or the cap is reached. Reported error is three
/// standard errors of the replicate means.
inline ProbabilityEstimate genz_orthant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                                        double tolerance, double rel_tolerance,
                                        std::uint64_t seed, std::int64_t sample_cap) {
    GenzPlan plan = build_genz_plan(mu, cov);
    auto effective_tol = [&](double value) {
        return std::max(tolerance, rel_tolerance * std::abs(value));
    };

    if (plan.definitely_zero) return ProbabilityEstimate{0.0, 0.0, 0, true};

    // Fully deterministic plans (no QMC dimension) evaluate in one pass.
    if (plan.n_u == 0) {
        std::vector<double> generators, shift;
        double value = genz_accumulate(plan, generators, shift, 0, 1);
        return ProbabilityEstimate{std::clamp(value, 0.0, 1.0), 1e-10, 1, true};
    }

    const std::vector<double> generators = richtmyer_generators(plan.n_u);
    std::vector<std::vector<double>> shifts(kShiftReplicates);
    for (int r = 0; r < kShiftReplicates; ++r) {
        SplitMixStream stream(mix_seed(seed, {0x5157u, static_cast<std::uint64_t>(r)}));
        shifts[r].resize(plan.n_u);
        for (int j = 0; j < plan.n_u; ++j) shifts[r][j] = stream.next_unit();
    }

    std::array<double, kShiftReplicates> sums{};
    std::int64_t n_per_replicate = 0;
    const std::int64_t cap_per_replicate = std::max<std::int64_t>(sample_cap / kShiftReplicates, 64);

    ProbabilityEstimate est;
    for (;;) {
        std::int64_t target = n_per_replicate == 0
                                  ? 64
                                  : std::min(2 * n_per_replicate, cap_per_replicate);
        for (int r = 0; r < kShiftReplicates; ++r) {
            sums[r] += genz_accumulate(plan, generators, shifts[r], n_per_replicate, target);
        }
        n_per_replicate = target;

        double mean = 0.0;
        for (double sr : sums) mean += sr / n_per_replicate;
        mean /= kShiftReplicates;
        double var = 0.0;
        for (double sr : sums) {
            double diff = sr / n_per_replicate - mean;
            var += diff * diff;
        }
        var /= (kShiftReplicates - 1);
        est.value = std::clamp(mean, 0.0, 1.0);
        est.error = 3.0 * std::sqrt(var / kShiftReplicates);
        est.samples = n_per_replicate * kShiftReplicates;
        if (est.error <= effective_tol(est.value)) {
            est.converged = true;
            break;
        }
        if (n_per_replicate >= cap_per_replicate) {
            est.converged = false;
            break;
        }
    }
    return est;
}

} // namespace detail

/// P(h_1 >= 0, ..., h_k >= 0). Deterministic dimensions are deflated first;
/// k = 1 uses the scalar CDF, k = 2 the closed-form bivariate reduction, and
/// k >= 3 the randomized QMC evaluator. A cheap upper bound (the smallest
/// single-constraint probability) resolves far-away queries immediately: when
/// bound/2 already meets the tolerance the result (bound/2 +- bound/2) is
/// returned, which brackets the truth since 0 <= P <= bound.
inline ProbabilityEstimate orthant_probability(const OrthantQuery& q) {
    const int k = static_cast<int>(q.mean.size());
    if (k < 1) throw std::invalid_argument("orthant query needs at least one dimension");
    if (q.cov.rows() != k || q.cov.cols() != k) {
        throw std::invalid_argument("orthant covariance must be k x k");
    }
    double scale = std::max(1.0, q.cov.cwiseAbs().maxCoeff());
    if ((q.cov - q.cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw std::invalid_argument("orthant covariance must be symmetric");
    }

    DeflateResult deflated = deflate_degenerate(q);
    if (deflated.resolved()) {
        return ProbabilityEstimate{*deflated.definite, 0.0, 0, true};
    }
    const OrthantQuery& red = deflated.query;
    const int kr = static_cast<int>(red.mean.size());

    if (kr == 1) {
        double p = detail::norm_cdf(red.mean(0) / std::sqrt(red.cov(0, 0)));
        return ProbabilityEstimate{p, 1e-15, 0, true};
    }
    if (kr == 2) {
        double p = detail::bivariate_orthant(red.mean, red.cov);
        return ProbabilityEstimate{p, 1e-12, 0, true};
    }

    double bound = 1.0;
    for (int i = 0; i < kr; ++i) {
        bound = std::min(bound, detail::norm_cdf(red.mean(i) / std::sqrt(red.cov(i, i))));
    }
    double half = 0.5 * bound;
    if (half <= std::max(red.tolerance, red.rel_tolerance * half)) {
        return ProbabilityEstimate{half, half, 0, true};
    }

    return detail::genz_orthant(red.mean, red.cov, red.tolerance, red.rel_tolerance, red.seed,
                                red.sample_cap);
}

} // namespace riskbounds
