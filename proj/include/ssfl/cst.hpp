#pragma once

#include <cmath>
#include <vector>

#include "ssfl/rng.hpp"
#include "ssfl/types.hpp"

namespace ssfl {

// Cluster separation tuner parameters. One iteration is the production
// setting; more than ~3 lets prototypes drift off their support clouds.
struct CstConfig {
    double eps_margin = 2.0;    // prototypes closer than this are penalized
    double beta0 = 0.05;        // maximum attraction toward a brighter prototype
    double gamma = 0.005;       // spatial decay of the attraction
    double alpha0 = 0.02;       // amplitude of the uniform exploration noise
    double alpha_decay = 0.995; // per-iteration noise annealing
    int iterations = 1;
    double w_intra = 0.5;       // shared with the clustering distance weights
    double w_inter = 0.5;

    bool enabled() const { return iterations > 0; }

    void validate() const {
        require(eps_margin > 0.0, "CstConfig: eps_margin must be positive");
        require(beta0 >= 0.0 && gamma >= 0.0 && alpha0 >= 0.0, "CstConfig: negative parameter");
        require(iterations >= 0, "CstConfig: iterations must be >= 0");
        require(w_intra >= 0.0 && w_inter >= 0.0, "CstConfig: negative weight");
    }
};

// Brightness of class c: compact classes far from other prototypes score
// high; prototypes inside another's margin pay a quadratic penalty on the
// unsquared gap. Classes without support stay dim at -1e6.
inline double brightness(int c, const PrototypeSet& protos, const Matrix& support,
                         const std::vector<int>& labels, const CstConfig& cfg) {
    const int num_classes = protos.num_classes();
    double intra_sum = 0.0;
    double inter_sum = 0.0;
    int members = 0;
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
        if (labels[static_cast<size_t>(i)] != c) continue;
        ++members;
        intra_sum += (support.row(i) - protos.prototypes.row(c)).squaredNorm();
        for (int j = 0; j < num_classes; ++j)
            if (j != c) inter_sum += (support.row(i) - protos.prototypes.row(j)).squaredNorm();
    }
    if (members == 0) return -1e6;

    const double l_intra = intra_sum / members;
    const double l_inter =
        num_classes > 1 ? inter_sum / (static_cast<double>(members) * (num_classes - 1)) : 0.0;

    double penalty = 0.0;
    for (int j = 0; j < num_classes; ++j) {
        if (j == c) continue;
        const double gap = (protos.prototypes.row(c) - protos.prototypes.row(j)).norm();
        if (gap < cfg.eps_margin) {
            const double short_by = cfg.eps_margin - gap;
            penalty += short_by * short_by;
        }
    }
    return -cfg.w_intra * l_intra + cfg.w_inter * l_inter - penalty;
}

struct CstStepResult {
    PrototypeSet prototypes;
    double final_alpha = 0.0;
};

// One full tuner pass: per iteration, freeze brightness, then sweep ordered
// pairs moving each dimmer prototype toward every brighter one with
// exponentially decaying attraction plus uniform noise in [-1/2, 1/2] per
// coordinate. Updates are applied in place, so later pairs see moved
// prototypes; the noise amplitude anneals after each sweep.
inline CstStepResult cst_step(const PrototypeSet& protos, const Matrix& support,
                              const std::vector<int>& labels, const CstConfig& cfg, Rng& rng) {
    cfg.validate();
    require(static_cast<Eigen::Index>(labels.size()) == support.rows(),
            "cst_step: label count does not match support rows");
    CstStepResult result;
    result.prototypes = protos;
    Matrix& p = result.prototypes.prototypes;
    const int num_classes = protos.num_classes();
    const Eigen::Index dim = p.cols();

    double alpha = cfg.alpha0;
    for (int t = 0; t < cfg.iterations; ++t) {
        std::vector<double> bright(static_cast<size_t>(num_classes));
        for (int c = 0; c < num_classes; ++c)
            bright[static_cast<size_t>(c)] = brightness(c, result.prototypes, support, labels, cfg);

        for (int i = 0; i < num_classes; ++i) {
            for (int j = 0; j < num_classes; ++j) {
                if (!(bright[static_cast<size_t>(i)] < bright[static_cast<size_t>(j)])) continue;
                const double attract =
                    cfg.beta0 * std::exp(-cfg.gamma * (p.row(i) - p.row(j)).squaredNorm());
                Vector noise(dim);
                for (Eigen::Index k = 0; k < dim; ++k) noise[k] = rng.uniform() - 0.5;
                p.row(i) += attract * (p.row(j) - p.row(i)) + alpha * noise.transpose();
            }
        }
        alpha *= cfg.alpha_decay;
    }
    result.final_alpha = alpha;
    return result;
}

}  // namespace ssfl
