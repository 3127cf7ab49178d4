#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dynoframe/error.hpp"
#include "dynoframe/rng.hpp"

namespace df {

using Vec = std::vector<double>;

// Dense row-major matrix, rows = output dim, cols = input dim.
struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(size_t r, size_t c) { return a[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return a[r * cols + c]; }

    size_t size() const { return a.size(); }

    static Mat gaussian(size_t r, size_t c, double scale, SplitMix64& rng) {
        Mat m(r, c);
        for (auto& v : m.a) v = scale * rng.next_gaussian();
        return m;
    }
};

// y = M x, M is (out x in).
inline Vec mat_vec(const Mat& m, std::span<const double> x) {
    if (x.size() != m.cols)
        fail(errc::invalid_argument, "mat_vec: dimension mismatch");
    Vec y(m.rows, 0.0);
    for (size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = m.a.data() + r * m.cols;
        for (size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

// y += M^T g; accumulates input-side gradient.
inline void mat_tvec_add(const Mat& m, std::span<const double> g, Vec& y) {
    if (g.size() != m.rows || y.size() != m.cols)
        fail(errc::invalid_argument, "mat_tvec_add: dimension mismatch");
    for (size_t r = 0; r < m.rows; ++r) {
        const double gr = g[r];
        const double* row = m.a.data() + r * m.cols;
        for (size_t c = 0; c < m.cols; ++c) y[c] += row[c] * gr;
    }
}

// G += g x^T (outer product), G is (out x in).
inline void outer_add(Mat& grad, std::span<const double> g, std::span<const double> x) {
    if (g.size() != grad.rows || x.size() != grad.cols)
        fail(errc::invalid_argument, "outer_add: dimension mismatch");
    for (size_t r = 0; r < grad.rows; ++r) {
        const double gr = g[r];
        double* row = grad.a.data() + r * grad.cols;
        for (size_t c = 0; c < grad.cols; ++c) row[c] += gr * x[c];
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline void axpy(double alpha, std::span<const double> x, Vec& y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

} // namespace df
