#pragma once

#include "riskbounds/detail/normal.hpp"

#include <cmath>
#include <vector>

namespace riskbounds::detail {

// Cubic-Hermite tables for the two normal-law evaluations the QMC inner loop
// hammers on. Nodes and exact slopes are computed once from erfc/erfc_inv, so
// the tables carry no hard-coded coefficients; absolute error is ~1e-11,
// far below any integration tolerance in use.

inline double hermite(double t, double h, double y0, double m0, double y1, double m1) {
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 +
           (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * m1;
}

struct PhicTable {
    static constexpr double x_min = -8.0;
    static constexpr double x_max = 8.0;
    static constexpr int intervals = 2048;
    double step;
    std::vector<double> value;
    std::vector<double> slope;

    PhicTable() {
        step = (x_max - x_min) / intervals;
        value.resize(intervals + 1);
        slope.resize(intervals + 1);
        for (int i = 0; i <= intervals; ++i) {
            double x = x_min + i * step;
            value[i] = norm_cdf_complement(x);
            slope[i] = -norm_pdf(x);
        }
    }
};

/// P(Z >= x) to ~1e-11 absolute; the tails round to 0/1, which is exact to
/// within 6.3e-16.
inline double fast_norm_cdf_complement(double x) {
    static const PhicTable table;
    if (x <= PhicTable::x_min) return 1.0;
    if (x >= PhicTable::x_max) return 0.0;
    double pos = (x - PhicTable::x_min) / table.step;
    int i = static_cast<int>(pos);
    if (i >= PhicTable::intervals) i = PhicTable::intervals - 1;
    double t = pos - i;
    double v = hermite(t, table.step, table.value[i], table.slope[i], table.value[i + 1],
                       table.slope[i + 1]);
    if (v < 0.0) return 0.0;
    if (v > 1.0) return 1.0;
    return v;
}

struct TailQuantileTable {
    // z(s) with s = sqrt(-2 ln q) for q in (0, 0.5]. Beyond s_max the node
    // values would underflow; callers land there only when the running factor
    // is already ~1e-290, so clamping to the last node is harmless.
    static constexpr double s_min = 1.17741002251547466; // s at q = 0.5
    static constexpr double s_max = 37.5;
    static constexpr int intervals = 4096;
    double step;
    std::vector<double> value;
    std::vector<double> slope;

    TailQuantileTable() {
        step = (s_max - s_min) / intervals;
        value.resize(intervals + 1);
        slope.resize(intervals + 1);
        for (int i = 0; i <= intervals; ++i) {
            double s = s_min + i * step;
            double q = std::exp(-0.5 * s * s);
            double z = norm_upper_quantile(q);
            value[i] = z;
            slope[i] = q * s / norm_pdf(z); // dz/ds = (dq/ds) / (dq/dz)
        }
    }
};

/// Inverse of fast_norm_cdf_complement: z with P(Z >= z) = q, q in (0, 1).
inline double fast_norm_upper_quantile(double q) {
    static const TailQuantileTable table;
    bool flip = false;
    if (q > 0.5) {
        q = 1.0 - q;
        flip = true;
        if (q <= 0.0) return -37.5;
    }
    double s = std::sqrt(-2.0 * std::log(q));
    double z;
    if (s <= TailQuantileTable::s_min) {
        z = 0.0;
    } else if (s >= TailQuantileTable::s_max) {
        z = table.value.back();
    } else {
        double pos = (s - TailQuantileTable::s_min) / table.step;
        int i = static_cast<int>(pos);
        if (i >= TailQuantileTable::intervals) i = TailQuantileTable::intervals - 1;
        double t = pos - i;
        z = hermite(t, table.step, table.value[i], table.slope[i], table.value[i + 1],
                    table.slope[i + 1]);
    }
    return flip ? -z : z;
}

} // namespace riskbounds::detail
