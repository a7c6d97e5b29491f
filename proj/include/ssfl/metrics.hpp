#pragma once

#include <cmath>
#include <vector>

#include "ssfl/types.hpp"

namespace ssfl {

struct LossWeights {
    double w_cls = 1.0;
    double w_fs = 1.0;
    double eta = 0.5;

    void validate() const {
        require(w_cls >= 0.0 && w_fs >= 0.0, "LossWeights: negative weight");
        require(eta >= 0.0 && eta <= 1.0, "LossWeights: eta must be in [0,1]");
    }
};

// Mean over rows of -log softmax(logits)[label], via log-sum-exp.
inline double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    require(static_cast<Eigen::Index>(labels.size()) == logits.rows(),
            "cross_entropy: label count mismatch");
    require(logits.rows() >= 1, "cross_entropy: empty input");
    check_finite(logits, "cross_entropy: logits");
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const int y = labels[static_cast<size_t>(i)];
        require(y >= 0 && y < logits.cols(), "cross_entropy: label out of range");
        const double top = logits.row(i).maxCoeff();
        const double lse = top + std::log((logits.row(i).array() - top).exp().sum());
        total += lse - logits(i, y);
    }
    return total / static_cast<double>(logits.rows());
}

// w_cls * L_cls + w_fs * (eta * L_cvoc + (1 - eta) * L_lp)
inline double episodic_loss(double l_cvoc, double l_lp, double l_cls, const LossWeights& w) {
    w.validate();
    require(std::isfinite(l_cvoc) && std::isfinite(l_lp) && std::isfinite(l_cls),
            "episodic_loss: non-finite loss");
    return w.w_cls * l_cls + w.w_fs * (w.eta * l_cvoc + (1.0 - w.eta) * l_lp);
}

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& truth) {
    require(preds.size() == truth.size(), "accuracy: length mismatch");
    require(!preds.empty(), "accuracy: empty input");
    int hits = 0;
    for (size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;  // 1.96 * sample stddev / sqrt(n)
};

inline MeanCi mean_ci95(const std::vector<double>& values) {
    require(values.size() >= 2, "mean_ci95: need at least two values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double stddev = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * stddev / std::sqrt(n)};
}

}  // namespace ssfl
