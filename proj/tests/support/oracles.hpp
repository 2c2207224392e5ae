#pragma once

// Reference implementations used only by tests. Everything here is written
// as plain double loops, independent of the library under test.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline std::vector<double> matmul_ref(const std::vector<double>& a, const std::vector<double>& b,
                                      std::int64_t m, std::int64_t k, std::int64_t n) {
    std::vector<double> c(static_cast<std::size_t>(m * n), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t l = 0; l < k; ++l) {
                acc += a[static_cast<std::size_t>(i * k + l)] * b[static_cast<std::size_t>(l * n + j)];
            }
            c[static_cast<std::size_t>(i * n + j)] = acc;
        }
    }
    return c;
}

inline double cosine_ref(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0.0, sy = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i] * x[i];
        sy += y[i] * y[i];
        dot += x[i] * y[i];
    }
    if (sx == 0.0 || sy == 0.0) return 0.0;
    double c = dot / (std::sqrt(sx) * std::sqrt(sy));
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

/// Central finite differences of f at x.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b, double floor = 1e-8) {
    const double denom = std::max({std::fabs(a), std::fabs(b), floor});
    return std::fabs(a - b) / denom;
}

/// Forward pass of a bias-affine relu MLP, one input row.
/// layers[i] = {w (out x in, row-major), b (out)}.
struct DenseLayer {
    std::vector<double> w;
    std::vector<double> b;
    std::int64_t in = 0, out = 0;
};

inline std::vector<double> mlp_forward_ref(const std::vector<DenseLayer>& layers,
                                           std::vector<double> x, bool relu_last = false) {
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& L = layers[li];
        std::vector<double> y(static_cast<std::size_t>(L.out), 0.0);
        for (std::int64_t o = 0; o < L.out; ++o) {
            double acc = L.b[static_cast<std::size_t>(o)];
            for (std::int64_t i = 0; i < L.in; ++i) {
                acc += L.w[static_cast<std::size_t>(o * L.in + i)] * x[static_cast<std::size_t>(i)];
            }
            y[static_cast<std::size_t>(o)] = acc;
        }
        const bool apply_relu = relu_last || li + 1 < layers.size();
        if (apply_relu) {
            for (auto& v : y) v = v > 0.0 ? v : 0.0;
        }
        x = std::move(y);
    }
    return x;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (auto x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
    const double mu = mean_of(v);
    double s = 0.0;
    for (auto x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Pearson chi-square statistic for observed counts vs uniform expectation.
inline double chi_square_uniform(const std::vector<std::int64_t>& counts) {
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

}  // namespace oracle
