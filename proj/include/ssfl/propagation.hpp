#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ssfl/numerics.hpp"
#include "ssfl/types.hpp"

namespace ssfl {

enum class SigmaMode { median_distance, fixed };

struct PropagationConfig {
    double alpha_ep = 0.5;   // smoothing strength for feature propagation
    double alpha_lp = 0.9;   // diffusion strength for label propagation
    int knn_k = 10;          // neighbors per node in the LP graph (capped at n-1)
    SigmaMode sigma_mode = SigmaMode::median_distance;
    double sigma = 1.0;      // used when sigma_mode == fixed

    void validate() const {
        require(alpha_ep >= 0.0 && alpha_ep < 1.0, "PropagationConfig: alpha_ep must be in [0,1)");
        require(alpha_lp >= 0.0 && alpha_lp < 1.0, "PropagationConfig: alpha_lp must be in [0,1)");
        require(knn_k >= 1, "PropagationConfig: knn_k must be >= 1");
        if (sigma_mode == SigmaMode::fixed)
            require(sigma > 0.0, "PropagationConfig: fixed sigma must be positive");
    }
};

namespace detail {

// Gaussian kernel width: median of the nonzero pairwise squared distances,
// or the configured fixed value. Falls back to 1 when every distance is zero.
inline double sigma_sq_for(const Matrix& sq_dists, const PropagationConfig& cfg) {
    if (cfg.sigma_mode == SigmaMode::fixed) return cfg.sigma * cfg.sigma;
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(sq_dists.size()));
    for (Eigen::Index i = 0; i < sq_dists.rows(); ++i)
        for (Eigen::Index j = i + 1; j < sq_dists.cols(); ++j)
            if (sq_dists(i, j) > 0.0) vals.push_back(sq_dists(i, j));
    if (vals.empty()) return 1.0;
    std::sort(vals.begin(), vals.end());
    const size_t n = vals.size();
    return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

// D^{-1/2} A D^{-1/2}; rows with zero degree stay zero.
inline Matrix symmetric_normalize(const Matrix& affinity) {
    Vector degree = affinity.rowwise().sum();
    Vector inv_sqrt(degree.size());
    for (Eigen::Index i = 0; i < degree.size(); ++i)
        inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
    return inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();
}

// Solve (I - alpha * S) Z = B; the system is SPD for alpha < 1.
inline Matrix propagate(const Matrix& normalized_affinity, double alpha, const Matrix& rhs) {
    Matrix system = -alpha * normalized_affinity;
    system.diagonal().array() += 1.0;
    return Eigen::LLT<Matrix>(system).solve(rhs);
}

}  // namespace detail

// Manifold smoothing: rows of X are replaced by linear combinations of all
// rows through the propagator (I - alpha * S)^{-1} built from a zero-diagonal
// Gaussian affinity. alpha_ep = 0 is the identity map.
inline Matrix embedding_propagation(const Matrix& x, const PropagationConfig& cfg) {
    cfg.validate();
    require(x.rows() >= 1, "embedding_propagation: empty input");
    check_finite(x, "embedding_propagation: X");
    if (cfg.alpha_ep == 0.0) return x;

    Matrix sq = pairwise_sq_distances(x, x);
    const double sigma_sq = detail::sigma_sq_for(sq, cfg);
    Matrix affinity = (-sq / sigma_sq).array().exp();
    affinity.diagonal().setZero();
    return detail::propagate(detail::symmetric_normalize(affinity), cfg.alpha_ep, x);
}

// Symmetric k-nearest-neighbor affinity with Gaussian weights. An edge (i,j)
// exists when either endpoint lists the other among its k closest.
inline Matrix knn_affinity(const Matrix& x, const PropagationConfig& cfg) {
    const Eigen::Index n = x.rows();
    Matrix sq = pairwise_sq_distances(x, x);
    const double sigma_sq = detail::sigma_sq_for(sq, cfg);
    const int k = std::min<int>(cfg.knn_k, static_cast<int>(n) - 1);

    Matrix affinity = Matrix::Zero(n, n);
    std::vector<int> order(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) order[static_cast<size_t>(j)] = static_cast<int>(j);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return std::make_pair(sq(i, a), a) < std::make_pair(sq(i, b), b);
        });
        int taken = 0;
        for (int idx : order) {
            if (idx == static_cast<int>(i)) continue;
            const double w = std::exp(-sq(i, idx) / sigma_sq);
            affinity(i, idx) = w;
            affinity(idx, i) = w;
            if (++taken == k) break;
        }
    }
    return affinity;
}

// Balanced graph label diffusion. Anchor rows seed one-hot labels (scaled to
// equal per-class mass when `balanced`); scores diffuse through the knn graph
// and are row-normalized, with a uniform fallback for rows no anchor reaches.
inline SoftLabels label_propagation(const Matrix& x,
                                    const std::vector<std::pair<int, int>>& anchors,
                                    int num_classes, const PropagationConfig& cfg,
                                    bool balanced, bool normalize = true) {
    cfg.validate();
    check_finite(x, "label_propagation: X");
    require(!anchors.empty(), "label_propagation: at least one anchor required");
    require(num_classes >= 1, "label_propagation: num_classes must be >= 1");
    const Eigen::Index n = x.rows();

    std::vector<double> class_count(static_cast<size_t>(num_classes), 0.0);
    for (const auto& [row, cls] : anchors) {
        require(row >= 0 && row < n, "label_propagation: anchor row out of range");
        require(cls >= 0 && cls < num_classes, "label_propagation: anchor class out of range");
        class_count[static_cast<size_t>(cls)] += 1.0;
    }

    Matrix seeds = Matrix::Zero(n, num_classes);
    for (const auto& [row, cls] : anchors)
        seeds(row, cls) = balanced ? 1.0 / class_count[static_cast<size_t>(cls)] : 1.0;

    Matrix scores;
    if (cfg.alpha_lp == 0.0) {
        scores = seeds;
    } else {
        Matrix s = detail::symmetric_normalize(knn_affinity(x, cfg));
        scores = detail::propagate(s, cfg.alpha_lp, seeds);
    }

    SoftLabels out;
    if (!normalize) {
        out.scores = std::move(scores);
        out.normalized = false;
        return out;
    }
    out.scores = Matrix(n, num_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double row_sum = scores.row(i).sum();
        if (row_sum > 0.0)
            out.scores.row(i) = scores.row(i) / row_sum;
        else
            out.scores.row(i).setConstant(1.0 / num_classes);
    }
    out.normalized = true;
    return out;
}

// Row argmax with lowest-index tie break.
inline std::vector<int> hard_labels(const Matrix& scores) {
    std::vector<int> labels(static_cast<size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best)) best = static_cast<int>(c);
        labels[static_cast<size_t>(i)] = best;
    }
    return labels;
}

}  // namespace ssfl
