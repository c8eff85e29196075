#pragma once

// Slow, independent reference computations used by the unit and acceptance
// tests. Nothing here calls into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// q - 2 evenly spaced breakpoints on [1, m], end points repeated four times.
inline std::vector<double> knots(int m, int q) {
    std::vector<double> k{1.0, 1.0, 1.0};
    const int nb = q - 2;
    for (int i = 0; i < nb; ++i) k.push_back(1.0 + (m - 1.0) * i / (nb - 1));
    k.insert(k.end(), {double(m), double(m), double(m)});
    return k;
}

// Textbook Cox-de Boor recursion. The last non-empty span is closed on the
// right so that t = m gets a value.
inline double cox_de_boor(const std::vector<double>& k, int i, int p, double t) {
    if (p == 0) {
        const double lo = k[i], hi = k[i + 1];
        if (lo == hi) return 0.0;
        if (t >= lo && t < hi) return 1.0;
        return (t == k.back() && hi == k.back()) ? 1.0 : 0.0;
    }
    double out = 0.0;
    const double d1 = k[i + p] - k[i];
    const double d2 = k[i + p + 1] - k[i + 1];
    if (d1 > 0) out += (t - k[i]) / d1 * cox_de_boor(k, i, p - 1, t);
    if (d2 > 0) out += (k[i + p + 1] - t) / d2 * cox_de_boor(k, i + 1, p - 1, t);
    return out;
}

inline Eigen::MatrixXd design(int m, int q) {
    const auto k = knots(m, q);
    Eigen::MatrixXd x(m, q);
    for (int j = 0; j < m; ++j)
        for (int b = 0; b < q; ++b) x(j, b) = cox_de_boor(k, b, 3, j + 1.0);
    return x;
}

// S_kl = int b_k'' b_l'' over [1, m]: second derivatives by central differences
// on an n-point grid, products integrated with the trapezoid rule.
inline Eigen::MatrixXd penalty_by_quadrature(int m, int q, int n = 100000) {
    const auto k = knots(m, q);
    const double h = (m - 1.0) / (n - 1);
    // Step for the difference quotient; small enough that straddling a knot only
    // touches a handful of grid points.
    const double e = h * 0.5;
    Eigen::MatrixXd d2(n, q);
    for (int g = 0; g < n; ++g) {
        double t = 1.0 + g * h;
        // Keep the stencil inside [1, m]; one-sided near the ends.
        const double c = std::clamp(t, 1.0 + e, m - e);
        for (int b = 0; b < q; ++b) {
            if (c + e < k[b] || c - e > k[b + 4]) {
                d2(g, b) = 0.0;  // outside the support
                continue;
            }
            const double hi = std::min(c + e, double(m)), lo = std::max(c - e, 1.0);
            d2(g, b) = (cox_de_boor(k, b, 3, hi) - 2.0 * cox_de_boor(k, b, 3, c) + cox_de_boor(k, b, 3, lo)) / (e * e);
        }
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
    w(0) = w(n - 1) = 0.5 * h;
    return d2.transpose() * w.asDiagonal() * d2;
}

// S_kl computed exactly: on each knot span a cubic B-spline is the cubic through
// its values at four equally spaced points, so b'' is linear there and the
// product of two such lines integrates in closed form.
inline Eigen::MatrixXd penalty_exact(int m, int q) {
    const auto k = knots(m, q);
    LMatrix s = LMatrix::Zero(q, q);
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        const long double lo = k[i], hi = k[i + 1], h = hi - lo;
        if (h <= 0) continue;
        const long double d = h / 3;
        std::vector<long double> left(q), right(q);
        for (int b = 0; b < q; ++b) {
            long double v[4];
            for (int a = 0; a < 4; ++a) {
                // Evaluate just inside the span so the half-open rule picks it.
                const double t = a == 3 ? std::nextafter(double(hi), double(lo)) : double(lo + a * d);
                v[a] = cox_de_boor(k, b, 3, t);
            }
            left[b] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / (d * d);
            right[b] = (-v[0] + 4 * v[1] - 5 * v[2] + 2 * v[3]) / (d * d);
        }
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b)
                s(a, b) += h / 3 * (left[a] * left[b] + right[a] * right[b]) +
                           h / 6 * (left[a] * right[b] + right[a] * left[b]);
    }
    return s.cast<double>();
}

// beta = (X^T X + lambda S)^{-1} X^T z in long double.
inline LVector dense_coefficients(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s, double lambda,
                                  const Eigen::VectorXd& z) {
    const LMatrix xl = x.cast<long double>();
    const LMatrix a = xl.transpose() * xl + static_cast<long double>(lambda) * s.cast<long double>();
    return a.fullPivLu().solve(xl.transpose() * z.cast<long double>());
}

// Explicit m x m hat matrix X (X^T X + lambda S)^{-1} X^T, then its trace.
inline long double hat_trace(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s, double lambda) {
    const LMatrix xl = x.cast<long double>();
    const LMatrix a = xl.transpose() * xl + static_cast<long double>(lambda) * s.cast<long double>();
    const LMatrix hat = xl * a.fullPivLu().solve(xl.transpose());
    return hat.trace();
}

// log p_j = -m log D_j - log sum_i D_i^{-m} in 256-bit binary floating point,
// written as (l_j - l_max) - log1p(sum_{i != max} e^{l_i - l_max}) so that the
// winner's log-probability keeps its relative precision.
inline std::vector<double> log_posterior(std::span<const double> d, int m) {
    using big = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<256>>;
    std::vector<big> l;
    for (double v : d) l.push_back(-m * log(big(v)));
    const std::size_t lead = std::max_element(l.begin(), l.end()) - l.begin();
    big rest = 0;
    for (std::size_t j = 0; j < l.size(); ++j)
        if (j != lead) rest += exp(l[j] - l[lead]);
    const big tail = log1p(rest);
    std::vector<double> out;
    for (const auto& v : l) out.push_back(static_cast<double>(v - l[lead] - tail));
    return out;
}

// Two-pass sample standard deviation.
inline double sample_sd(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (v.size() - 1));
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

template <class A, class B>
double rel_err_max(const A& got, const B& want) {
    return (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff();
}

inline Eigen::VectorXd noisy_sine(int m, std::mt19937_64& rng, double cycles = 2.0, double noise = 0.1) {
    std::normal_distribution<double> n(0.0, noise);
    Eigen::VectorXd z(m);
    for (int j = 0; j < m; ++j) z(j) = std::sin(2 * M_PI * cycles * j / m) + n(rng);
    return z;
}

}  // namespace oracle
