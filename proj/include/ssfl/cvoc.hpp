#pragma once

#include <cmath>
#include <vector>

#include "ssfl/cst.hpp"
#include "ssfl/numerics.hpp"
#include "ssfl/rng.hpp"
#include "ssfl/types.hpp"

namespace ssfl {

// Reconstruction basis of one class: its support embeddings plus the current
// prototype as the last column.
struct FactorDictionary {
    int class_id = 0;
    Matrix columns;  // d x (K_c + 1)

    int num_columns() const { return static_cast<int>(columns.cols()); }
};

enum class VarianceMode { classwise, episode };

struct CvocConfig {
    double lambda = 0.01;
    double w_intra = 0.5;
    double w_inter = 0.5;
    int max_iters = 10;
    VarianceMode variance_mode = VarianceMode::classwise;
    bool clamp_support = true;   // keep ground-truth labels on support rows
    double tol = 1e-4;           // early exit on max prototype displacement
    double eps_log = 1e-8;       // floor inside the logit transform
    double tau = 0.1;            // softmax temperature
    bool prototype_only_dictionaries = false;  // drop support columns (k-means-like limit)

    void validate() const {
        require(lambda > 0.0, "CvocConfig: lambda must be positive");
        require(w_intra >= 0.0 && w_inter >= 0.0, "CvocConfig: negative weight");
        require(max_iters >= 1, "CvocConfig: max_iters must be >= 1");
        require(tol > 0.0, "CvocConfig: tol must be positive");
        require(eps_log > 0.0, "CvocConfig: eps_log must be positive");
        require(tau > 0.0, "CvocConfig: tau must be positive");
    }
};

// Intra/inter distance terms consumed by the combined assignment distance.
// In classwise mode entry c is the statistic of class c; in episode mode every
// entry holds the same episode-level scalar, which therefore cancels in any
// argmin over classes.
struct VarianceTerms {
    Vector intra;
    Vector inter;
    VarianceMode mode = VarianceMode::classwise;
};

struct CvocResult {
    PrototypeSet prototypes;
    std::vector<FactorDictionary> dictionaries;  // rebuilt with the final prototypes
    std::vector<int> assignments;                // support rows first, then pool rows
    Matrix query_logits;                         // pool x C
    SoftLabels query_probs;
    int iters_run = 0;
};

inline FactorDictionary build_factor_dictionary(const Matrix& support_of_class,
                                                const Vector& prototype, int class_id = 0) {
    require(support_of_class.rows() >= 1, "build_factor_dictionary: class has no support rows");
    require(support_of_class.cols() == prototype.size(),
            "build_factor_dictionary: prototype dimension mismatch");
    FactorDictionary dict;
    dict.class_id = class_id;
    dict.columns = Matrix(prototype.size(), support_of_class.rows() + 1);
    for (Eigen::Index i = 0; i < support_of_class.rows(); ++i)
        dict.columns.col(i) = support_of_class.row(i).transpose();
    dict.columns.col(support_of_class.rows()) = prototype;
    return dict;
}

namespace detail {

inline std::vector<std::vector<int>> rows_by_class(const std::vector<int>& labels,
                                                   int num_classes) {
    std::vector<std::vector<int>> by_class(static_cast<size_t>(num_classes));
    for (size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] >= 0 && labels[i] < num_classes, "label out of class range");
        by_class[static_cast<size_t>(labels[i])].push_back(static_cast<int>(i));
    }
    return by_class;
}

inline Matrix class_rows(const Matrix& support, const std::vector<int>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), support.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = support.row(rows[i]);
    return out;
}

}  // namespace detail

// Dictionaries for all classes against the given prototypes. With
// prototype_only_dictionaries the support columns are omitted.
inline std::vector<FactorDictionary> build_dictionaries(const Matrix& support,
                                                        const std::vector<int>& support_labels,
                                                        const PrototypeSet& protos,
                                                        bool prototype_only = false) {
    const int num_classes = protos.num_classes();
    auto by_class = detail::rows_by_class(support_labels, num_classes);
    std::vector<FactorDictionary> dicts;
    dicts.reserve(static_cast<size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        require(!by_class[static_cast<size_t>(c)].empty(),
                "build_dictionaries: class " + std::to_string(c) + " has no support");
        if (prototype_only) {
            FactorDictionary dict;
            dict.class_id = c;
            dict.columns = protos.prototypes.row(c).transpose();
            dicts.push_back(std::move(dict));
        } else {
            dicts.push_back(build_factor_dictionary(
                detail::class_rows(support, by_class[static_cast<size_t>(c)]),
                protos.prototypes.row(c).transpose(), c));
        }
    }
    return dicts;
}

// points x C matrix of squared ridge residuals against each class dictionary.
inline Matrix reconstruction_distances(const std::vector<FactorDictionary>& dicts,
                                       const Matrix& points, double lambda) {
    Matrix d(points.rows(), static_cast<Eigen::Index>(dicts.size()));
    for (size_t c = 0; c < dicts.size(); ++c) {
        RidgeFactor factor(dicts[c].columns, lambda);
        for (Eigen::Index i = 0; i < points.rows(); ++i)
            d(i, static_cast<Eigen::Index>(c)) = factor.solve(points.row(i).transpose()).residual_sq;
    }
    return d;
}

// Intra/inter statistics of the support set against the current prototypes.
inline VarianceTerms class_variance_terms(const Matrix& support,
                                          const std::vector<int>& labels,
                                          const PrototypeSet& protos, VarianceMode mode) {
    const int num_classes = protos.num_classes();
    require(num_classes >= 2, "class_variance_terms: need at least two classes");
    require(static_cast<Eigen::Index>(labels.size()) == support.rows(),
            "class_variance_terms: label count mismatch");
    auto by_class = detail::rows_by_class(labels, num_classes);

    Vector intra_c = Vector::Zero(num_classes);
    Vector inter_c = Vector::Zero(num_classes);
    for (int c = 0; c < num_classes; ++c) {
        const auto& rows = by_class[static_cast<size_t>(c)];
        require(!rows.empty(), "class_variance_terms: class " + std::to_string(c) + " has no support");
        double intra = 0.0, inter = 0.0;
        for (int r : rows) {
            intra += (support.row(r) - protos.prototypes.row(c)).squaredNorm();
            for (int j = 0; j < num_classes; ++j)
                if (j != c) inter += (support.row(r) - protos.prototypes.row(j)).squaredNorm();
        }
        intra_c[c] = intra / static_cast<double>(rows.size());
        inter_c[c] = inter / (static_cast<double>(rows.size()) * (num_classes - 1));
    }

    VarianceTerms terms;
    terms.mode = mode;
    if (mode == VarianceMode::classwise) {
        terms.intra = intra_c;
        terms.inter = inter_c;
    } else {
        // episode scalars: support-count-weighted means of the classwise values
        double intra = 0.0, inter = 0.0;
        for (int c = 0; c < num_classes; ++c) {
            const double w = static_cast<double>(by_class[static_cast<size_t>(c)].size());
            intra += w * intra_c[c];
            inter += w * inter_c[c];
        }
        const double n = static_cast<double>(support.rows());
        terms.intra = Vector::Constant(num_classes, intra / n);
        terms.inter = Vector::Constant(num_classes, inter / n);
    }
    return terms;
}

// d(x, c) = d_rec + w_intra * L_intra(c) - w_inter * L_inter(c). May be
// negative; only its argmin is used.
inline double combined_distance(double d_rec, double l_intra_c, double l_inter_c,
                                double w_intra, double w_inter) {
    return d_rec + w_intra * l_intra_c - w_inter * l_inter_c;
}

// Label every point with the class minimizing the combined distance. The
// first `support_labels.size()` rows are support; with clamp_support they
// keep their ground-truth labels. Ties break toward the lowest class index.
inline std::vector<int> assign_step(const Matrix& points,
                                    const std::vector<FactorDictionary>& dicts,
                                    const VarianceTerms& terms, const CvocConfig& cfg,
                                    const std::vector<int>& support_labels) {
    const int num_classes = static_cast<int>(dicts.size());
    Matrix d_rec = reconstruction_distances(dicts, points, cfg.lambda);
    std::vector<int> labels(static_cast<size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (cfg.clamp_support && i < static_cast<Eigen::Index>(support_labels.size())) {
            labels[static_cast<size_t>(i)] = support_labels[static_cast<size_t>(i)];
            continue;
        }
        int best = 0;
        double best_d = combined_distance(d_rec(i, 0), terms.intra[0], terms.inter[0],
                                          cfg.w_intra, cfg.w_inter);
        for (int c = 1; c < num_classes; ++c) {
            const double d = combined_distance(d_rec(i, c), terms.intra[c], terms.inter[c],
                                               cfg.w_intra, cfg.w_inter);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        labels[static_cast<size_t>(i)] = best;
    }
    return labels;
}

// -log(d_rec + eps) against every dictionary; smaller residual, larger logit.
inline Matrix query_logits(const std::vector<FactorDictionary>& dicts, const Matrix& queries,
                           double lambda, double eps_log) {
    Matrix d = reconstruction_distances(dicts, queries, lambda);
    return (-(d.array() + eps_log).log()).matrix();
}

// Class-variance optimized clustering over support + pool. Iteratively
// rebuilds dictionaries, assigns all points by the combined distance, refits
// prototypes to member means (empty classes keep their previous prototype),
// and applies one tuner pass; stops early when no prototype moves more than
// cfg.tol. Pool logits come from dictionaries rebuilt with the final
// prototypes.
inline CvocResult run_cvoc(const Matrix& support, const std::vector<int>& support_labels,
                           const Matrix& pool, const CvocConfig& cfg, const CstConfig& cst_cfg,
                           std::uint64_t rng_seed) {
    cfg.validate();
    cst_cfg.validate();
    check_finite(support, "run_cvoc: support");
    check_finite(pool, "run_cvoc: pool");
    if (pool.rows() > 0) check_same_dim(support, pool, "run_cvoc");
    require(support.rows() >= 1, "run_cvoc: empty support");
    require(static_cast<Eigen::Index>(support_labels.size()) == support.rows(),
            "run_cvoc: label count mismatch");

    int num_classes = 0;
    for (int label : support_labels) num_classes = std::max(num_classes, label + 1);
    require(num_classes >= 2, "run_cvoc: need at least two classes");
    auto by_class = detail::rows_by_class(support_labels, num_classes);
    for (int c = 0; c < num_classes; ++c)
        require(!by_class[static_cast<size_t>(c)].empty(),
                "run_cvoc: class " + std::to_string(c) + " has no support");

    const Eigen::Index dim = support.cols();
    Matrix points(support.rows() + pool.rows(), dim);
    points.topRows(support.rows()) = support;
    if (pool.rows() > 0) points.bottomRows(pool.rows()) = pool;

    CvocResult result;
    result.prototypes.class_ids.resize(static_cast<size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) result.prototypes.class_ids[static_cast<size_t>(c)] = c;
    result.prototypes.prototypes = Matrix(num_classes, dim);
    for (int c = 0; c < num_classes; ++c) {
        Vector mean = Vector::Zero(dim);
        for (int r : by_class[static_cast<size_t>(c)]) mean += support.row(r).transpose();
        result.prototypes.prototypes.row(c) =
            (mean / static_cast<double>(by_class[static_cast<size_t>(c)].size())).transpose();
    }

    Rng cst_rng(derive_seed(rng_seed, stream::cst));
    std::vector<int> assignments(static_cast<size_t>(points.rows()), 0);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const Matrix before = result.prototypes.prototypes;

        auto dicts = build_dictionaries(support, support_labels, result.prototypes,
                                        cfg.prototype_only_dictionaries);
        auto terms = class_variance_terms(support, support_labels, result.prototypes,
                                          cfg.variance_mode);
        assignments = assign_step(points, dicts, terms, cfg, support_labels);

        for (int c = 0; c < num_classes; ++c) {
            Vector sum = Vector::Zero(dim);
            int count = 0;
            for (Eigen::Index i = 0; i < points.rows(); ++i)
                if (assignments[static_cast<size_t>(i)] == c) {
                    sum += points.row(i).transpose();
                    ++count;
                }
            if (count > 0)
                result.prototypes.prototypes.row(c) = (sum / count).transpose();
        }

        if (cst_cfg.enabled())
            result.prototypes =
                cst_step(result.prototypes, support, support_labels, cst_cfg, cst_rng).prototypes;

        result.iters_run = iter + 1;
        const double moved =
            (result.prototypes.prototypes - before).cwiseAbs().maxCoeff();
        if (moved < cfg.tol) break;
    }

    result.dictionaries = build_dictionaries(support, support_labels, result.prototypes,
                                             cfg.prototype_only_dictionaries);
    result.assignments = assignments;
    result.query_logits = query_logits(result.dictionaries, pool, cfg.lambda, cfg.eps_log);
    result.query_probs.scores = Matrix(pool.rows(), num_classes);
    for (Eigen::Index i = 0; i < pool.rows(); ++i)
        result.query_probs.scores.row(i) =
            softmax_temperature(result.query_logits.row(i).transpose(), cfg.tau).transpose();
    result.query_probs.normalized = true;
    return result;
}

}  // namespace ssfl
