#pragma once

// Hand-rolled reference implementations used only by tests. Everything here
// is deliberately naive and independent of the library's solve paths so the
// two routes can disagree.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssfl/types.hpp"

namespace oracle {

using ssfl::Matrix;
using ssfl::Vector;

// Gaussian elimination with partial pivoting. No Eigen decompositions.
inline Vector gauss_solve(Matrix a, Vector b) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n || b.size() != n) throw std::runtime_error("gauss_solve: bad shapes");
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == 0.0) throw std::runtime_error("gauss_solve: singular");
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            std::swap(b[pivot], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            a.row(r).tail(n - col) -= f * a.row(col).tail(n - col);
            b[r] -= f * b[col];
        }
    }
    Vector x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a(r, c) * x[c];
        x[r] = s / a(r, r);
    }
    return x;
}

// Dense inverse via Gauss-Jordan with partial pivoting.
inline Matrix gauss_inverse(Matrix a) {
    const int n = static_cast<int>(a.rows());
    Matrix inv = Matrix::Identity(n, n);
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == 0.0) throw std::runtime_error("gauss_inverse: singular");
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            inv.row(pivot).swap(inv.row(col));
        }
        const double d = a(col, col);
        a.row(col) /= d;
        inv.row(col) /= d;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f != 0.0) {
                a.row(r) -= f * a.row(col);
                inv.row(r) -= f * inv.row(col);
            }
        }
    }
    return inv;
}

// Ridge via explicit normal equations + gauss_solve.
struct RidgeRef {
    Vector beta;
    double residual_sq;
};

inline RidgeRef ridge_normal_equations(const Matrix& f, const Vector& x, double lambda) {
    const int m = static_cast<int>(f.cols());
    Matrix g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int r = 0; r < f.rows(); ++r) s += f(r, i) * f(r, j);
            g(i, j) = s + (i == j ? lambda : 0.0);
        }
    Vector rhs(m);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int r = 0; r < f.rows(); ++r) s += f(r, i) * x[r];
        rhs[i] = s;
    }
    RidgeRef ref;
    ref.beta = gauss_solve(g, rhs);
    double res = 0.0;
    for (int r = 0; r < f.rows(); ++r) {
        double fit = 0.0;
        for (int c = 0; c < m; ++c) fit += f(r, c) * ref.beta[c];
        const double d = x[r] - fit;
        res += d * d;
    }
    ref.residual_sq = res;
    return ref;
}

inline Matrix pairwise_loop(const Matrix& a, const Matrix& b) {
    Matrix d(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (int c = 0; c < a.cols(); ++c) {
                const double t = a(i, c) - b(j, c);
                s += t * t;
            }
            d(i, j) = s;
        }
    return d;
}

// Per-row -log softmax at the label, summed naively.
inline double cross_entropy_loop(const Matrix& logits, const std::vector<int>& labels) {
    double total = 0.0;
    for (int i = 0; i < logits.rows(); ++i) {
        double denom = 0.0;
        for (int c = 0; c < logits.cols(); ++c) denom += std::exp(logits(i, c));
        total += -std::log(std::exp(logits(i, labels[static_cast<size_t>(i)])) / denom);
    }
    return total / static_cast<double>(logits.rows());
}

// One Lloyd sweep: nearest-prototype assignment (optionally clamping labeled
// rows), then mean refit keeping empty prototypes in place.
inline std::vector<int> nearest_prototype_assign(const Matrix& points, const Matrix& protos,
                                                 const std::vector<int>& fixed_labels,
                                                 bool clamp) {
    std::vector<int> labels(static_cast<size_t>(points.rows()));
    for (int i = 0; i < points.rows(); ++i) {
        if (clamp && i < static_cast<int>(fixed_labels.size())) {
            labels[static_cast<size_t>(i)] = fixed_labels[static_cast<size_t>(i)];
            continue;
        }
        int best = 0;
        double best_d = (points.row(i) - protos.row(0)).squaredNorm();
        for (int c = 1; c < protos.rows(); ++c) {
            const double d = (points.row(i) - protos.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        labels[static_cast<size_t>(i)] = best;
    }
    return labels;
}

inline Matrix refit_means(const Matrix& points, const std::vector<int>& labels, Matrix protos) {
    for (int c = 0; c < protos.rows(); ++c) {
        Vector sum = Vector::Zero(points.cols());
        int count = 0;
        for (int i = 0; i < points.rows(); ++i)
            if (labels[static_cast<size_t>(i)] == c) {
                sum += points.row(i).transpose();
                ++count;
            }
        if (count > 0) protos.row(c) = (sum / count).transpose();
    }
    return protos;
}

}  // namespace oracle
