#pragma once

#include <Eigen/Cholesky>
#include <cmath>

#include "ssfl/types.hpp"

namespace ssfl {

// Ridge coefficients and the squared reconstruction residual they leave.
struct RidgeSolution {
    Vector beta;
    double residual_sq = 0.0;
};

// Factorization of (F^T F + lambda I) for repeated solves against one basis.
// lambda > 0 keeps the system positive definite regardless of F's rank.
class RidgeFactor {
public:
    RidgeFactor(const Matrix& basis, double lambda) : basis_(basis) {
        require(lambda > 0.0, "solve_ridge: lambda must be positive");
        require(basis.cols() >= 1, "solve_ridge: basis needs at least one column");
        check_finite(basis, "solve_ridge: basis");
        Matrix gram = basis.transpose() * basis;
        gram.diagonal().array() += lambda;
        llt_.compute(gram);
    }

    RidgeSolution solve(const Vector& x) const {
        require(x.size() == basis_.rows(), "solve_ridge: vector length does not match basis rows");
        check_finite(x, "solve_ridge: target");
        RidgeSolution sol;
        sol.beta = llt_.solve(basis_.transpose() * x);
        sol.residual_sq = (x - basis_ * sol.beta).squaredNorm();
        return sol;
    }

    const Matrix& basis() const { return basis_; }

private:
    Matrix basis_;
    Eigen::LLT<Matrix> llt_;
};

// argmin_beta ||x - F beta||^2 + lambda ||beta||^2 via the normal equations.
inline RidgeSolution solve_ridge(const Matrix& basis, const Vector& x, double lambda) {
    return RidgeFactor(basis, lambda).solve(x);
}

// Squared residual of the ridge projection of x onto the columns of `basis`.
inline double reconstruction_distance(const Matrix& basis, const Vector& x, double lambda) {
    return solve_ridge(basis, x, lambda).residual_sq;
}

// softmax(logits / tau), computed with max-subtraction. Output sums to 1.
inline Vector softmax_temperature(const Vector& logits, double tau) {
    require(tau > 0.0, "softmax_temperature: tau must be positive");
    check_finite(logits, "softmax_temperature: logits");
    require(logits.size() >= 1, "softmax_temperature: empty logits");
    const double top = logits.maxCoeff();
    Vector p = ((logits.array() - top) / tau).exp();
    p /= p.sum();
    return p;
}

// H(p) = -sum p ln p with 0 ln 0 := 0. Input must be a probability vector.
inline double entropy(const Vector& probs) {
    require(probs.size() >= 1, "entropy: empty vector");
    check_finite(probs, "entropy: probs");
    double sum = 0.0, h = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        require(p >= 0.0, "entropy: negative entry");
        sum += p;
        if (p > 0.0) h -= p * std::log(p);
    }
    require(std::abs(sum - 1.0) <= 1e-6, "entropy: entries do not sum to 1");
    return h;
}

// Entry (i, j) = ||A.row(i) - B.row(j)||^2.
inline Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
    check_same_dim(a, b, "pairwise_sq_distances");
    check_finite(a, "pairwise_sq_distances: A");
    check_finite(b, "pairwise_sq_distances: B");
    Matrix d(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        d.row(i) = (b.rowwise() - a.row(i)).rowwise().squaredNorm().transpose();
    return d;
}

}  // namespace ssfl
