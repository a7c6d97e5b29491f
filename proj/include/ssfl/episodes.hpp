#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ssfl/dataset_io.hpp"
#include "ssfl/rng.hpp"
#include "ssfl/types.hpp"

namespace ssfl {

// Ground truth of an episode. Only evaluation code may look at this; the
// inference stages receive bare feature matrices.
struct EpisodeTruth {
    std::vector<int> pool_labels;          // episode-class ids, -1 for distractors
    std::vector<std::uint8_t> pool_distractor;
    std::vector<int> query_labels;
    // source row indices when sampled from a dataset (empty for synthetic)
    std::vector<int> support_rows, query_rows, pool_rows;
};

class Episode {
public:
    Matrix support;
    std::vector<int> support_labels;  // 0..N-1, K per class
    Matrix pool;                      // N*u rows plus distractors
    Matrix query;                     // N*T rows
    std::vector<int> class_ids;       // episode class -> dataset class id
    int n_way = 0, k_shot = 0, queries_per_class = 0, unlabeled_per_class = 0;
    std::uint64_t seed = 0;

    Episode() = default;
    Episode(Matrix support_, std::vector<int> support_labels_, Matrix pool_, Matrix query_,
            std::vector<int> class_ids_, EpisodeTruth truth)
        : support(std::move(support_)),
          support_labels(std::move(support_labels_)),
          pool(std::move(pool_)),
          query(std::move(query_)),
          class_ids(std::move(class_ids_)),
          truth_(std::move(truth)) {}

    // Evaluation-only accessor; never call from inference code.
    const EpisodeTruth& eval_truth() const { return truth_; }

    int pool_size() const { return static_cast<int>(pool.rows()); }

private:
    EpisodeTruth truth_;
};

// Synthetic N-way K-shot task: unit-variance isotropic Gaussian classes. All
// class centers lie on one origin-centered sphere: center_c = R*u + rho*v_c
// with a shared random direction u, per-class tangent directions v_c
// orthogonal to u, and rho = separation/sqrt(2), so the expected squared
// center-center distance is exactly separation^2 (separation is in
// within-class sigma units). R (center_norm, default 8*sqrt(dim)) sets the
// feature norm scale the way embedding backbones do: large norms, class
// identity in modest angular offsets. Distractor classes contribute flagged
// pool rows only.
inline Episode generate_synthetic_task(int n_classes, int dim, double separation, int n_way,
                                       int k_shot, int queries_per_class, int unlabeled_per_class,
                                       int distractor_classes, int distractor_per_class,
                                       std::uint64_t seed, double center_norm = -1.0) {
    require(n_way >= 2, "generate_synthetic_task: n_way must be >= 2");
    require(n_classes >= n_way + distractor_classes,
            "generate_synthetic_task: n_classes must cover episode and distractor classes");
    require(dim >= 2 && k_shot >= 1 && queries_per_class >= 0 && unlabeled_per_class >= 0,
            "generate_synthetic_task: counts must be positive (and dim >= 2)");
    require(distractor_classes >= 0 && distractor_per_class >= 0,
            "generate_synthetic_task: negative distractor counts");
    require(separation >= 0.0, "generate_synthetic_task: negative separation");

    Rng rng(derive_seed(seed, stream::synth));
    const double radial = center_norm > 0.0 ? center_norm : 8.0 * std::sqrt(static_cast<double>(dim));
    const double rho = separation / std::sqrt(2.0);

    Vector base(dim);
    double base_norm = 0.0;
    do {
        for (int j = 0; j < dim; ++j) base[j] = rng.normal();
        base_norm = base.norm();
    } while (base_norm == 0.0);
    base /= base_norm;

    Matrix centers(n_classes, dim);
    for (int c = 0; c < n_classes; ++c) {
        Vector tangent(dim);
        double tangent_norm = 0.0;
        do {
            for (int j = 0; j < dim; ++j) tangent[j] = rng.normal();
            tangent -= tangent.dot(base) * base;
            tangent_norm = tangent.norm();
        } while (tangent_norm == 0.0);
        centers.row(c) = (radial * base + (rho / tangent_norm) * tangent).transpose();
    }

    std::vector<int> class_order = rng.sample_without_replacement(n_classes, n_way + distractor_classes);
    std::vector<int> episode_classes(class_order.begin(), class_order.begin() + n_way);
    std::vector<int> distractors(class_order.begin() + n_way, class_order.end());

    auto draw_row = [&](Matrix& dst, Eigen::Index row, int cls) {
        for (int j = 0; j < dim; ++j) dst(row, j) = centers(cls, j) + rng.normal();
    };

    Matrix support(n_way * k_shot, dim);
    Matrix query(n_way * queries_per_class, dim);
    Matrix pool(n_way * unlabeled_per_class + distractor_classes * distractor_per_class, dim);
    std::vector<int> support_labels;
    EpisodeTruth truth;
    for (int c = 0; c < n_way; ++c) {
        for (int s = 0; s < k_shot; ++s) {
            draw_row(support, c * k_shot + s, episode_classes[static_cast<size_t>(c)]);
            support_labels.push_back(c);
        }
        for (int s = 0; s < queries_per_class; ++s) {
            draw_row(query, c * queries_per_class + s, episode_classes[static_cast<size_t>(c)]);
            truth.query_labels.push_back(c);
        }
        for (int s = 0; s < unlabeled_per_class; ++s) {
            draw_row(pool, c * unlabeled_per_class + s, episode_classes[static_cast<size_t>(c)]);
            truth.pool_labels.push_back(c);
            truth.pool_distractor.push_back(0);
        }
    }
    Eigen::Index pool_row = n_way * unlabeled_per_class;
    for (int dc : distractors) {
        for (int s = 0; s < distractor_per_class; ++s) {
            draw_row(pool, pool_row++, dc);
            truth.pool_labels.push_back(-1);
            truth.pool_distractor.push_back(1);
        }
    }

    Episode ep(std::move(support), std::move(support_labels), std::move(pool), std::move(query),
               std::move(episode_classes), std::move(truth));
    ep.n_way = n_way;
    ep.k_shot = k_shot;
    ep.queries_per_class = queries_per_class;
    ep.unlabeled_per_class = unlabeled_per_class;
    ep.seed = seed;
    return ep;
}

// Uniform episode sampling from a labeled dataset: N classes, then disjoint
// support/query/pool rows per class; distractor pool rows come from classes
// outside the chosen N.
inline Episode sample_episode(const EmbeddingDataset& ds, int n_way, int k_shot,
                              int queries_per_class, int unlabeled_per_class,
                              int distractor_classes, int distractor_per_class,
                              std::uint64_t seed) {
    require(n_way >= 2, "sample_episode: n_way must be >= 2");
    require(ds.num_classes() >= n_way + distractor_classes,
            "sample_episode: dataset has too few classes");

    std::vector<std::vector<int>> rows_by_class(static_cast<size_t>(ds.num_classes()));
    for (int i = 0; i < ds.size(); ++i)
        rows_by_class[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);

    Rng rng(derive_seed(seed, stream::sampling));
    const int per_class = k_shot + queries_per_class + unlabeled_per_class;
    std::vector<int> class_order =
        rng.sample_without_replacement(ds.num_classes(), n_way + distractor_classes);
    std::vector<int> episode_classes(class_order.begin(), class_order.begin() + n_way);
    std::vector<int> distractors(class_order.begin() + n_way, class_order.end());

    for (int cls : episode_classes)
        require(static_cast<int>(rows_by_class[static_cast<size_t>(cls)].size()) >= per_class,
                "sample_episode: class " + std::to_string(cls) + " has fewer than " +
                    std::to_string(per_class) + " samples");
    for (int cls : distractors)
        require(static_cast<int>(rows_by_class[static_cast<size_t>(cls)].size()) >=
                    distractor_per_class,
                "sample_episode: distractor class " + std::to_string(cls) + " too small");

    const int dim = ds.dim();
    Matrix support(n_way * k_shot, dim);
    Matrix query(n_way * queries_per_class, dim);
    Matrix pool(n_way * unlabeled_per_class + distractor_classes * distractor_per_class, dim);
    std::vector<int> support_labels;
    EpisodeTruth truth;

    for (int c = 0; c < n_way; ++c) {
        const auto& rows = rows_by_class[static_cast<size_t>(episode_classes[static_cast<size_t>(c)])];
        auto picks = rng.sample_without_replacement(static_cast<int>(rows.size()), per_class);
        int at = 0;
        for (int s = 0; s < k_shot; ++s, ++at) {
            const int src = rows[static_cast<size_t>(picks[static_cast<size_t>(at)])];
            support.row(c * k_shot + s) = ds.rows.row(src);
            support_labels.push_back(c);
            truth.support_rows.push_back(src);
        }
        for (int s = 0; s < queries_per_class; ++s, ++at) {
            const int src = rows[static_cast<size_t>(picks[static_cast<size_t>(at)])];
            query.row(c * queries_per_class + s) = ds.rows.row(src);
            truth.query_labels.push_back(c);
            truth.query_rows.push_back(src);
        }
        for (int s = 0; s < unlabeled_per_class; ++s, ++at) {
            const int src = rows[static_cast<size_t>(picks[static_cast<size_t>(at)])];
            pool.row(c * unlabeled_per_class + s) = ds.rows.row(src);
            truth.pool_labels.push_back(c);
            truth.pool_distractor.push_back(0);
            truth.pool_rows.push_back(src);
        }
    }
    Eigen::Index pool_row = n_way * unlabeled_per_class;
    for (int cls : distractors) {
        const auto& rows = rows_by_class[static_cast<size_t>(cls)];
        auto picks = rng.sample_without_replacement(static_cast<int>(rows.size()),
                                                    distractor_per_class);
        for (int pick : picks) {
            const int src = rows[static_cast<size_t>(pick)];
            pool.row(pool_row++) = ds.rows.row(src);
            truth.pool_labels.push_back(-1);
            truth.pool_distractor.push_back(1);
            truth.pool_rows.push_back(src);
        }
    }

    Episode ep(std::move(support), std::move(support_labels), std::move(pool), std::move(query),
               std::move(episode_classes), std::move(truth));
    ep.n_way = n_way;
    ep.k_shot = k_shot;
    ep.queries_per_class = queries_per_class;
    ep.unlabeled_per_class = unlabeled_per_class;
    ep.seed = seed;
    return ep;
}

struct KmeansResult {
    Matrix prototypes;            // C x d, final
    std::vector<int> assignments; // support rows first, then pool rows
    std::vector<int> pool_assignments;
    std::vector<int> query_predictions;  // nearest final prototype
    double pool_accuracy = 0.0;          // against hidden labels, distractors always wrong
};

namespace detail {

inline std::vector<int> nearest_rows(const Matrix& points, const Matrix& protos) {
    std::vector<int> labels(static_cast<size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int best = 0;
        double best_d = (points.row(i) - protos.row(0)).squaredNorm();
        for (Eigen::Index c = 1; c < protos.rows(); ++c) {
            const double d = (points.row(i) - protos.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[static_cast<size_t>(i)] = best;
    }
    return labels;
}

}  // namespace detail

// Lloyd baseline over support + pool, initialized from support class means.
// Zero iterations is the nearest-support-mean classifier.
inline KmeansResult kmeans_baseline(const Episode& ep, int iters, bool clamp_support = true) {
    require(iters >= 0, "kmeans_baseline: negative iteration count");
    const int n_way = ep.n_way;
    const Eigen::Index dim = ep.support.cols();
    Matrix points(ep.support.rows() + ep.pool.rows(), dim);
    points.topRows(ep.support.rows()) = ep.support;
    points.bottomRows(ep.pool.rows()) = ep.pool;

    KmeansResult result;
    result.prototypes = Matrix::Zero(n_way, dim);
    std::vector<int> counts(static_cast<size_t>(n_way), 0);
    for (Eigen::Index i = 0; i < ep.support.rows(); ++i) {
        result.prototypes.row(ep.support_labels[static_cast<size_t>(i)]) += ep.support.row(i);
        counts[static_cast<size_t>(ep.support_labels[static_cast<size_t>(i)])]++;
    }
    for (int c = 0; c < n_way; ++c) {
        require(counts[static_cast<size_t>(c)] > 0, "kmeans_baseline: class without support");
        result.prototypes.row(c) /= counts[static_cast<size_t>(c)];
    }

    auto assign = [&]() {
        auto labels = detail::nearest_rows(points, result.prototypes);
        if (clamp_support)
            for (size_t i = 0; i < ep.support_labels.size(); ++i) labels[i] = ep.support_labels[i];
        return labels;
    };

    result.assignments = assign();
    for (int it = 0; it < iters; ++it) {
        for (int c = 0; c < n_way; ++c) {
            Vector sum = Vector::Zero(dim);
            int count = 0;
            for (Eigen::Index i = 0; i < points.rows(); ++i)
                if (result.assignments[static_cast<size_t>(i)] == c) {
                    sum += points.row(i).transpose();
                    ++count;
                }
            if (count > 0) result.prototypes.row(c) = (sum / count).transpose();
        }
        result.assignments = assign();
    }

    result.pool_assignments.assign(result.assignments.begin() + ep.support.rows(),
                                   result.assignments.end());
    result.query_predictions = detail::nearest_rows(ep.query, result.prototypes);

    const auto& truth = ep.eval_truth();
    int hits = 0;
    for (size_t i = 0; i < result.pool_assignments.size(); ++i)
        hits += result.pool_assignments[i] == truth.pool_labels[i];
    result.pool_accuracy = ep.pool_size() > 0
                               ? static_cast<double>(hits) / static_cast<double>(ep.pool_size())
                               : 0.0;
    return result;
}

}  // namespace ssfl
