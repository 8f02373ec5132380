#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace fstline::numerics {

/// Finite-difference weights for the `order`-th derivative at `z` from
/// arbitrarily spaced nodes (Fornberg's recursion).
inline std::vector<double> derivative_weights(std::span<const double> nodes, double z, int order = 1)
{
    const auto n = nodes.size();
    const auto m = static_cast<std::size_t>(order);
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k)
                    c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

/// Node-wise first derivative of sampled data using a local stencil of up to
/// `width` nodes (centred where possible, one-sided at the ends). Stencils
/// never reach across a time listed in `breaks`; at a node sitting on a break
/// the right-sided derivative is returned, or the left-sided one with
/// `left_at_breaks`.
inline std::vector<double> nodal_derivative(std::span<const double> t, std::span<const double> f,
                                            std::size_t width = 5, std::span<const double> breaks = {},
                                            bool left_at_breaks = false)
{
    const std::size_t n = t.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    for (std::size_t i = 0; i < n; ++i) {
        // node range [first, last] free of interior breaks around node i
        std::size_t first = 0, last = n - 1;
        for (double b : breaks) {
            if (b == t[i] && left_at_breaks) {
                last = std::min(last, i);
                continue;
            }
            if (b == t[i]) {
                first = std::max(first, i);
                continue;
            }
            if (b < t[i])
                first = std::max<std::size_t>(
                    first, static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), b) - t.begin()));
            else
                last = std::min<std::size_t>(
                    last, static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), b) - t.begin()) - 1);
        }
        const std::size_t avail = last - first + 1;
        const std::size_t w = std::min(width, avail);
        if (w < 2) continue;
        std::size_t lo = i >= first + w / 2 ? i - w / 2 : first;
        if (lo + w > last + 1) lo = last + 1 - w;
        const auto weights = derivative_weights(t.subspan(lo, w), t[i], 1);
        double acc = 0.0;
        for (std::size_t k = 0; k < w; ++k) acc += weights[k] * f[lo + k];
        d[i] = acc;
    }
    return d;
}

/// Node-wise first derivative from `width` nodes taken every `stride`-th
/// node (shifted inwards near the ends). A stride above 1 trades truncation
/// error for less amplification of node-level noise.
inline std::vector<double> strided_derivative(std::span<const double> t, std::span<const double> f,
                                              std::size_t stride, std::size_t width = 5)
{
    const std::size_t n = t.size();
    if (n < 2) return std::vector<double>(n, 0.0);
    width = std::min(width, n);
    stride = std::clamp<std::size_t>(stride, 1, std::max<std::size_t>(1, (n - 1) / (width - 1)));
    std::vector<double> d(n), nodes(width), values(width);
    const auto half = static_cast<std::ptrdiff_t>(width / 2);
    const auto k = static_cast<std::ptrdiff_t>(stride);
    const auto last = static_cast<std::ptrdiff_t>(n - 1);
    const auto span = static_cast<std::ptrdiff_t>(width - 1) * k;
    for (std::ptrdiff_t i = 0; i <= last; ++i) {
        std::ptrdiff_t lo = i - half * k;
        if (lo < 0) lo = i % k;
        if (lo + span > last) lo = i - ((i - (last - span)) + k - 1) / k * k;
        if (lo < 0) lo = 0;  // only when the stride cannot fit; falls back to the nearest nodes
        for (std::size_t j = 0; j < width; ++j) {
            const auto idx = static_cast<std::size_t>(std::min(lo + static_cast<std::ptrdiff_t>(j) * k, last));
            nodes[j] = t[idx];
            values[j] = f[idx];
        }
        const auto w = derivative_weights(nodes, t[static_cast<std::size_t>(i)], 1);
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) acc += w[j] * values[j];
        d[static_cast<std::size_t>(i)] = acc;
    }
    return d;
}

/// Cubic Hermite value and first two derivatives on one cell.
struct HermiteValue {
    double value;
    double slope;
    double curvature;
};

inline HermiteValue hermite_cell(double t0, double t1, double f0, double f1, double d0, double d1,
                                 double t)
{
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    const double value = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
    const double slope =
        ((6 * s2 - 6 * s) * (f0 - f1)) / h + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1;
    const double curvature =
        ((12 * s - 6) * (f0 - f1)) / (h * h) + ((6 * s - 4) * d0 + (6 * s - 2) * d1) / h;
    return {value, slope, curvature};
}

/// Quintic Hermite interpolant on one cell matching value, first and second
/// derivative at both ends, in monomial form in s = (t - t0)/h.
struct QuinticCell {
    double t0, h;
    double c[6];

    QuinticCell(double t0_, double t1, double f0, double f1, double d0, double d1, double a0, double a1)
        : t0(t0_), h(t1 - t0_)
    {
        const double delta = f1 - f0;
        const double p0 = h * d0, p1 = h * d1, q0 = h * h * a0, q1 = h * h * a1;
        c[0] = f0;
        c[1] = p0;
        c[2] = 0.5 * q0;
        c[3] = 10 * delta - 6 * p0 - 4 * p1 - 1.5 * q0 + 0.5 * q1;
        c[4] = -15 * delta + 8 * p0 + 7 * p1 + 1.5 * q0 - q1;
        c[5] = 6 * delta - 3 * p0 - 3 * p1 - 0.5 * q0 + 0.5 * q1;
    }

    [[nodiscard]] HermiteValue at(double t) const
    {
        const double s = (t - t0) / h;
        const double value = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        const double slope = c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])));
        const double curvature = 2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]));
        return {value, slope / h, curvature / (h * h)};
    }

    /// Largest |slope| on the cell.
    [[nodiscard]] double max_abs_slope() const
    {
        auto slope = [&](double s) {
            return c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])));
        };
        auto curv = [&](double s) { return 2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5])); };
        double m = std::max(std::abs(slope(0.0)), std::abs(slope(1.0)));
        constexpr int pieces = 16;
        for (int k = 0; k < pieces; ++k) {
            double lo = static_cast<double>(k) / pieces, hi = static_cast<double>(k + 1) / pieces;
            double flo = curv(lo);
            if (flo * curv(hi) > 0.0) continue;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = curv(mid);
                if ((fm <= 0.0) == (flo <= 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            m = std::max(m, std::abs(slope(0.5 * (lo + hi))));
        }
        return m / h;
    }
};

/// Index of the cell [t[i], t[i+1]] containing `t` (clamped to valid cells).
inline std::size_t locate_cell(std::span<const double> grid, double t)
{
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    return std::min(i, grid.size() - 2);
}

} // namespace fstline::numerics
