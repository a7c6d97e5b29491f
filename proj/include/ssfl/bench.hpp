#pragma once

#include <atomic>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ssfl/pipeline.hpp"

namespace ssfl {

enum class Method { kmeans, lp_only, cvoc, cvoc_cst, cvoc_lp, full };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::kmeans: return "kmeans";
        case Method::lp_only: return "lp-only";
        case Method::cvoc: return "cvoc";
        case Method::cvoc_cst: return "cvoc+cst";
        case Method::cvoc_lp: return "cvoc+lp";
        case Method::full: return "full";
    }
    throw input_error("unknown method");
}

inline Method method_from_name(const std::string& name) {
    for (Method m : {Method::kmeans, Method::lp_only, Method::cvoc, Method::cvoc_cst,
                     Method::cvoc_lp, Method::full})
        if (method_name(m) == name) return m;
    throw input_error("unknown method '" + name + "'");
}

// Where episodes come from: a synthetic task generator or a loaded dataset.
struct EpisodeSource {
    bool synthetic = true;
    // synthetic parameters
    int n_classes = 16;
    int dim = 16;
    double separation = 4.0;
    double center_norm = -1.0;  // <= 0: auto (8 * sqrt(dim))
    // shared episode shape
    int n_way = 5;
    int k_shot = 1;
    int queries_per_class = 15;
    int unlabeled_per_class = 100;
    int distractor_classes = 0;
    int distractor_per_class = 0;
    // dataset source (not owned)
    const EmbeddingDataset* dataset = nullptr;

    Episode make(std::uint64_t seed) const {
        if (synthetic)
            return generate_synthetic_task(n_classes, dim, separation, n_way, k_shot,
                                           queries_per_class, unlabeled_per_class,
                                           distractor_classes, distractor_per_class, seed,
                                           center_norm);
        require(dataset != nullptr, "EpisodeSource: dataset not set");
        return sample_episode(*dataset, n_way, k_shot, queries_per_class, unlabeled_per_class,
                              distractor_classes, distractor_per_class, seed);
    }
};

struct BenchConfig {
    std::vector<Method> methods;
    int episodes = 100;
    std::uint64_t root_seed = 0;
    int workers = 1;
    int kmeans_iters = 10;  // matched to the clustering iteration budget
    EpisodeSource source;
    CvocConfig cvoc;
    CstConfig cst;
    PropagationConfig prop;
    PipelineOptions pipeline;
    std::optional<SinContext> sin;
};

struct EpisodeRow {
    int index = 0;
    std::uint64_t seed = 0;
    double query_accuracy = 0.0;
    double pool_accuracy = 0.0;
    double kept_precision = 0.0;
    double kept_distractor_fraction = 0.0;
    int kept_count = 0;
};

struct MethodSummary {
    Method method = Method::cvoc;
    std::vector<EpisodeRow> rows;  // ordered by episode index
    MeanCi query_accuracy;
    MeanCi pool_accuracy;
};

struct BenchReport {
    std::uint64_t root_seed = 0;
    int episodes = 0;
    std::vector<MethodSummary> methods;
    json config_echo;
};

namespace bench_detail {

inline std::vector<int> pool_truth_hits(const std::vector<int>& preds,
                                        const EpisodeTruth& truth) {
    std::vector<int> hits(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) hits[i] = preds[i] == truth.pool_labels[i];
    return hits;
}

inline double pool_accuracy_of(const std::vector<int>& preds, const EpisodeTruth& truth) {
    if (preds.empty()) return 0.0;
    int hits = 0;
    for (size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truth.pool_labels[i];
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace bench_detail

// One method on one episode. Every method consumes the same episode object;
// per-episode randomness (tuner noise) derives from the episode seed.
inline EpisodeRow run_method_on_episode(Method method, const Episode& episode,
                                        const BenchConfig& cfg) {
    EpisodeRow row;
    row.seed = episode.seed;
    const EpisodeTruth& truth = episode.eval_truth();

    switch (method) {
        case Method::kmeans: {
            auto km = kmeans_baseline(episode, cfg.kmeans_iters, cfg.cvoc.clamp_support);
            row.query_accuracy = accuracy(km.query_predictions, truth.query_labels);
            row.pool_accuracy = km.pool_accuracy;
            break;
        }
        case Method::lp_only: {
            // balanced diffusion over support + pool + queries, support anchors
            Matrix stacked(episode.support.rows() + episode.pool.rows() + episode.query.rows(),
                           episode.support.cols());
            stacked.topRows(episode.support.rows()) = episode.support;
            stacked.middleRows(episode.support.rows(), episode.pool.rows()) = episode.pool;
            stacked.bottomRows(episode.query.rows()) = episode.query;
            std::vector<std::pair<int, int>> anchors;
            for (size_t i = 0; i < episode.support_labels.size(); ++i)
                anchors.push_back({static_cast<int>(i), episode.support_labels[i]});
            SoftLabels soft = label_propagation(stacked, anchors, episode.n_way, cfg.prop, true);
            auto query_preds =
                hard_labels(soft.scores.bottomRows(episode.query.rows()));
            auto pool_preds = hard_labels(
                soft.scores.middleRows(episode.support.rows(), episode.pool.rows()));
            row.query_accuracy = accuracy(query_preds, truth.query_labels);
            row.pool_accuracy = bench_detail::pool_accuracy_of(pool_preds, truth);
            break;
        }
        case Method::cvoc:
        case Method::cvoc_cst: {
            CstConfig cst = cfg.cst;
            if (method == Method::cvoc) cst.iterations = 0;
            auto result = run_cvoc(episode.support, episode.support_labels, episode.pool,
                                   cfg.cvoc, cst, episode.seed);
            auto pool_preds = hard_labels(result.query_logits);
            Matrix q_logits =
                query_logits(result.dictionaries, episode.query, cfg.cvoc.lambda, cfg.cvoc.eps_log);
            row.query_accuracy = accuracy(hard_labels(q_logits), truth.query_labels);
            row.pool_accuracy = bench_detail::pool_accuracy_of(pool_preds, truth);
            break;
        }
        case Method::cvoc_lp:
        case Method::full: {
            std::optional<SinContext> sin =
                method == Method::full ? cfg.sin : std::optional<SinContext>{};
            if (method == Method::full)
                require(sin.has_value(), "bench: method 'full' needs a trained injection network");
            auto report = evaluate_episode(episode, cfg.cvoc, cfg.cst, sin, cfg.pipeline,
                                           cfg.prop, episode.seed);
            row.query_accuracy = report.query_accuracy;
            row.pool_accuracy = report.pool_accuracy;
            row.kept_precision = report.kept_precision;
            row.kept_distractor_fraction = report.kept_distractor_fraction;
            row.kept_count = report.kept_count;
            break;
        }
    }
    return row;
}

// Shared-seed benchmark: every method sees the identical episode sequence, so
// per-episode rows are directly comparable and any row can be reproduced from
// its recorded seed.
inline BenchReport run_bench(const BenchConfig& cfg) {
    require(!cfg.methods.empty(), "run_bench: no methods selected");
    require(cfg.episodes >= 1, "run_bench: episode count must be >= 1");
    require(cfg.workers >= 1, "run_bench: worker count must be >= 1");
    cfg.cvoc.validate();
    cfg.cst.validate();
    cfg.prop.validate();
    cfg.pipeline.validate();

    BenchReport report;
    report.root_seed = cfg.root_seed;
    report.episodes = cfg.episodes;
    for (Method m : cfg.methods) {
        MethodSummary summary;
        summary.method = m;
        summary.rows.resize(static_cast<size_t>(cfg.episodes));
        report.methods.push_back(std::move(summary));
    }

    // With use_ep on, features are smoothed once per episode so every method
    // consumes the same propagated embeddings.
    BenchConfig method_cfg = cfg;
    method_cfg.pipeline.use_ep = false;

    auto evaluate_index = [&](int index) {
        const std::uint64_t seed = derive_seed(cfg.root_seed, stream::episode,
                                               static_cast<std::uint64_t>(index));
        Episode episode = cfg.source.make(seed);
        if (cfg.pipeline.use_ep) episode = smooth_episode(episode, cfg.prop);
        for (size_t m = 0; m < cfg.methods.size(); ++m) {
            EpisodeRow row = run_method_on_episode(cfg.methods[m], episode, method_cfg);
            row.index = index;
            report.methods[m].rows[static_cast<size_t>(index)] = row;
        }
    };

    if (cfg.workers == 1) {
        for (int i = 0; i < cfg.episodes; ++i) evaluate_index(i);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<int> next{0};
        for (int w = 0; w < cfg.workers; ++w)
            futures.push_back(std::async(std::launch::async, [&]() {
                for (int i = next.fetch_add(1); i < cfg.episodes; i = next.fetch_add(1))
                    evaluate_index(i);
            }));
        for (auto& f : futures) f.get();
    }

    for (auto& summary : report.methods) {
        std::vector<double> q, p;
        for (const auto& row : summary.rows) {
            q.push_back(row.query_accuracy);
            p.push_back(row.pool_accuracy);
        }
        if (q.size() >= 2) {
            summary.query_accuracy = mean_ci95(q);
            summary.pool_accuracy = mean_ci95(p);
        } else {
            summary.query_accuracy = {q.front(), 0.0};
            summary.pool_accuracy = {p.front(), 0.0};
        }
    }

    report.config_echo = json{{"episodes", cfg.episodes},
                              {"root_seed", cfg.root_seed},
                              {"kmeans_iters", cfg.kmeans_iters},
                              {"cvoc", to_json(cfg.cvoc)},
                              {"cst", to_json(cfg.cst)},
                              {"propagation", to_json(cfg.prop)},
                              {"pipeline", to_json(cfg.pipeline)},
                              {"sin_enabled", cfg.sin.has_value()},
                              {"source",
                               json{{"synthetic", cfg.source.synthetic},
                                    {"n_classes", cfg.source.n_classes},
                                    {"dim", cfg.source.dim},
                                    {"separation", cfg.source.separation},
                                    {"n_way", cfg.source.n_way},
                                    {"k_shot", cfg.source.k_shot},
                                    {"queries_per_class", cfg.source.queries_per_class},
                                    {"unlabeled_per_class", cfg.source.unlabeled_per_class},
                                    {"distractor_classes", cfg.source.distractor_classes},
                                    {"distractor_per_class", cfg.source.distractor_per_class}}}};
    return report;
}

inline json to_json(const EpisodeRow& r) {
    return json{{"index", r.index},
                {"seed", r.seed},
                {"query_accuracy", r.query_accuracy},
                {"pool_accuracy", r.pool_accuracy},
                {"kept_precision", r.kept_precision},
                {"kept_distractor_fraction", r.kept_distractor_fraction},
                {"kept_count", r.kept_count}};
}

inline json to_json(const BenchReport& report) {
    json methods = json::array();
    for (const auto& summary : report.methods) {
        json rows = json::array();
        for (const auto& row : summary.rows) rows.push_back(to_json(row));
        methods.push_back(json{{"method", method_name(summary.method)},
                               {"query_accuracy",
                                json{{"mean", summary.query_accuracy.mean},
                                     {"ci95", summary.query_accuracy.half_width}}},
                               {"pool_accuracy",
                                json{{"mean", summary.pool_accuracy.mean},
                                     {"ci95", summary.pool_accuracy.half_width}}},
                               {"per_episode", rows}});
    }
    return json{{"schema", "ssfl.bench_report.v1"},
                {"root_seed", report.root_seed},
                {"episodes", report.episodes},
                {"config", report.config_echo},
                {"methods", methods}};
}

// Summary table, one method per line.
inline std::string bench_csv(const BenchReport& report) {
    std::string out =
        "method,episodes,query_acc_mean,query_acc_ci95,pool_acc_mean,pool_acc_ci95\n";
    char line[256];
    for (const auto& summary : report.methods) {
        std::snprintf(line, sizeof(line), "%s,%d,%.6f,%.6f,%.6f,%.6f\n",
                      method_name(summary.method).c_str(), report.episodes,
                      summary.query_accuracy.mean, summary.query_accuracy.half_width,
                      summary.pool_accuracy.mean, summary.pool_accuracy.half_width);
        out += line;
    }
    return out;
}

// Paired per-episode gap (a - b) with its 95% interval.
inline MeanCi paired_gap(const MethodSummary& a, const MethodSummary& b,
                         bool pool_metric = false) {
    require(a.rows.size() == b.rows.size(), "paired_gap: mismatched row counts");
    std::vector<double> diffs;
    diffs.reserve(a.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        require(a.rows[i].seed == b.rows[i].seed, "paired_gap: rows are not seed-aligned");
        diffs.push_back(pool_metric ? a.rows[i].pool_accuracy - b.rows[i].pool_accuracy
                                    : a.rows[i].query_accuracy - b.rows[i].query_accuracy);
    }
    return mean_ci95(diffs);
}

}  // namespace ssfl
