#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ssfl/cvoc.hpp"
#include "ssfl/dataset_io.hpp"
#include "ssfl/episodes.hpp"
#include "ssfl/metrics.hpp"
#include "ssfl/propagation.hpp"
#include "ssfl/sin.hpp"

namespace ssfl {

using json = nlohmann::json;

struct PseudoLabelEntry {
    int pool_index = 0;
    int label = 0;
    double entropy_value = 0.0;
};

// The lowest-entropy slice of the pool with its hard labels. Entries are
// sorted by (entropy, index); threshold is the largest kept entropy.
struct PseudoLabelSet {
    std::vector<PseudoLabelEntry> entries;
    double threshold = 0.0;
    double keep_percent = 0.0;
};

// Keep the floor(k% * u) most confident pool predictions. Confidence is the
// entropy of softmax(logits / tau); ties break by pool index.
inline PseudoLabelSet restricted_pseudo_label(const Matrix& pool_logits, double keep_percent,
                                              double tau) {
    require(keep_percent >= 0.0 && keep_percent <= 100.0,
            "restricted_pseudo_label: keep percent outside [0,100]");
    const Eigen::Index u = pool_logits.rows();
    std::vector<PseudoLabelEntry> all;
    all.reserve(static_cast<size_t>(u));
    for (Eigen::Index i = 0; i < u; ++i) {
        PseudoLabelEntry e;
        e.pool_index = static_cast<int>(i);
        e.entropy_value = entropy(softmax_temperature(pool_logits.row(i).transpose(), tau));
        int best = 0;
        for (Eigen::Index c = 1; c < pool_logits.cols(); ++c)
            if (pool_logits(i, c) > pool_logits(i, best)) best = static_cast<int>(c);
        e.label = best;
        all.push_back(e);
    }
    std::sort(all.begin(), all.end(), [](const PseudoLabelEntry& a, const PseudoLabelEntry& b) {
        return std::make_pair(a.entropy_value, a.pool_index) <
               std::make_pair(b.entropy_value, b.pool_index);
    });
    PseudoLabelSet out;
    out.keep_percent = keep_percent;
    const auto keep = static_cast<size_t>(keep_percent / 100.0 * static_cast<double>(u));
    out.entries.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep));
    out.threshold = out.entries.empty() ? 0.0 : out.entries.back().entropy_value;
    return out;
}

struct LabeledSet {
    Matrix x;
    std::vector<int> y;
};

// S0 = support plus the selected (embedding, pseudo-label) pairs. Original
// support labels are never touched; duplicate pool indices are rejected.
inline LabeledSet expand_support(const Matrix& support, const std::vector<int>& support_labels,
                                 const PseudoLabelSet& pseudo, const Matrix& pool) {
    std::vector<bool> seen(static_cast<size_t>(pool.rows()), false);
    for (const auto& e : pseudo.entries) {
        require(e.pool_index >= 0 && e.pool_index < pool.rows(),
                "expand_support: pool index out of range");
        require(!seen[static_cast<size_t>(e.pool_index)],
                "expand_support: duplicate pool index in pseudo-label set");
        seen[static_cast<size_t>(e.pool_index)] = true;
    }
    LabeledSet out;
    out.x = Matrix(support.rows() + static_cast<Eigen::Index>(pseudo.entries.size()),
                   support.cols());
    out.x.topRows(support.rows()) = support;
    out.y = support_labels;
    Eigen::Index row = support.rows();
    for (const auto& e : pseudo.entries) {
        out.x.row(row++) = pool.row(e.pool_index);
        out.y.push_back(e.label);
    }
    return out;
}

struct SinContext {
    SinNetwork net;
    SemanticTable semantics;
};

struct PipelineOptions {
    double keep_percent = 80.0;  // restricted pseudo-labeling k%
    double blend_s = 0.9;        // prototype refinement blend weight
    bool recompute_after_refine = true;  // rebuild dictionaries before pseudo-labeling
    bool use_ep = false;         // smooth all episode features first

    void validate() const {
        require(keep_percent >= 0.0 && keep_percent <= 100.0,
                "PipelineOptions: keep_percent outside [0,100]");
        require(blend_s >= 0.0 && blend_s <= 1.0, "PipelineOptions: blend_s outside [0,1]");
    }
};

struct StageTimings {
    double ep_ms = 0.0;
    double cvoc_ms = 0.0;
    double refine_ms = 0.0;
    double pseudo_ms = 0.0;
    double lp_ms = 0.0;
    double total_ms = 0.0;
};

struct EpisodeReport {
    double query_accuracy = 0.0;
    double pool_accuracy = 0.0;   // hard pool labels vs hidden truth
    int kept_count = 0;
    int pool_size = 0;
    double threshold_entropy = 0.0;
    double kept_precision = 0.0;  // correct fraction of the kept pseudo-labels
    double kept_distractor_fraction = 0.0;
    int cvoc_iters_run = 0;
    std::uint64_t seed = 0;
    StageTimings timings;
    json config_echo;
};

inline json to_json(const StageTimings& t) {
    return json{{"embedding_propagation", t.ep_ms}, {"cvoc", t.cvoc_ms},
                {"refine", t.refine_ms},           {"pseudo_label", t.pseudo_ms},
                {"label_propagation", t.lp_ms},    {"total", t.total_ms}};
}

inline json to_json(const EpisodeReport& r) {
    return json{{"schema", "ssfl.episode_report.v1"},
                {"seed", r.seed},
                {"query_accuracy", r.query_accuracy},
                {"pool_accuracy", r.pool_accuracy},
                {"pseudo_labels",
                 json{{"kept", r.kept_count},
                      {"pool_size", r.pool_size},
                      {"threshold_entropy", r.threshold_entropy},
                      {"kept_precision", r.kept_precision},
                      {"kept_distractor_fraction", r.kept_distractor_fraction}}},
                {"cvoc_iters_run", r.cvoc_iters_run},
                {"timings_ms", to_json(r.timings)},
                {"config", r.config_echo}};
}

inline json to_json(const CvocConfig& c) {
    return json{{"lambda", c.lambda},
                {"w_intra", c.w_intra},
                {"w_inter", c.w_inter},
                {"max_iters", c.max_iters},
                {"variance_mode", c.variance_mode == VarianceMode::classwise ? "classwise" : "episode"},
                {"clamp_support", c.clamp_support},
                {"tol", c.tol},
                {"eps_log", c.eps_log},
                {"tau", c.tau},
                {"prototype_only_dictionaries", c.prototype_only_dictionaries}};
}

inline json to_json(const CstConfig& c) {
    return json{{"eps_margin", c.eps_margin}, {"beta0", c.beta0},
                {"gamma", c.gamma},           {"alpha0", c.alpha0},
                {"alpha_decay", c.alpha_decay}, {"iterations", c.iterations},
                {"w_intra", c.w_intra},       {"w_inter", c.w_inter}};
}

inline json to_json(const PropagationConfig& c) {
    return json{{"alpha_ep", c.alpha_ep},
                {"alpha_lp", c.alpha_lp},
                {"knn_k", c.knn_k},
                {"sigma_mode", c.sigma_mode == SigmaMode::median_distance ? "median" : "fixed"},
                {"sigma", c.sigma}};
}

inline json to_json(const PipelineOptions& o) {
    return json{{"keep_percent", o.keep_percent},
                {"blend_s", o.blend_s},
                {"recompute_after_refine", o.recompute_after_refine},
                {"use_ep", o.use_ep}};
}

namespace pipeline_detail {

class StageClock {
public:
    StageClock() : start_(std::chrono::steady_clock::now()) {}
    double lap_ms() {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - start_).count();
        start_ = now;
        return ms;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace pipeline_detail

// Episode with all feature blocks smoothed jointly over one similarity
// graph; labels and hidden truth are untouched.
inline Episode smooth_episode(const Episode& episode, const PropagationConfig& prop_cfg) {
    Matrix stacked(episode.support.rows() + episode.pool.rows() + episode.query.rows(),
                   episode.support.cols());
    stacked.topRows(episode.support.rows()) = episode.support;
    stacked.middleRows(episode.support.rows(), episode.pool.rows()) = episode.pool;
    stacked.bottomRows(episode.query.rows()) = episode.query;
    Matrix smoothed = embedding_propagation(stacked, prop_cfg);
    Episode out = episode;
    out.support = smoothed.topRows(episode.support.rows());
    out.pool = smoothed.middleRows(episode.support.rows(), episode.pool.rows());
    out.query = smoothed.bottomRows(episode.query.rows());
    return out;
}

// Full test-time procedure: clustering over support + pool, optional
// semantic prototype refinement, restricted pseudo-labeling, support
// expansion, balanced label propagation over the expanded set + queries,
// and scoring against the episode's hidden truth.
inline EpisodeReport evaluate_episode(const Episode& episode, const CvocConfig& cvoc_cfg,
                                      const CstConfig& cst_cfg,
                                      const std::optional<SinContext>& sin,
                                      const PipelineOptions& options,
                                      const PropagationConfig& prop_cfg, std::uint64_t seed) {
    options.validate();
    prop_cfg.validate();
    require(episode.n_way >= 2, "evaluate_episode: episode needs at least two classes");
    if (sin) {
        require(sin->semantics.dim() == sin->net.d_t,
                "evaluate_episode: semantic dimension does not match the network");
        require(sin->net.d == episode.support.cols(),
                "evaluate_episode: network prototype dimension does not match features");
        for (int class_id : episode.class_ids)
            require(sin->semantics.lookup(class_id).has_value(),
                    "evaluate_episode: no semantic vector for class " + std::to_string(class_id));
    }

    pipeline_detail::StageClock clock;
    pipeline_detail::StageClock total_clock;
    EpisodeReport report;
    report.seed = seed;
    report.pool_size = episode.pool_size();

    Episode smoothed;
    if (options.use_ep) smoothed = smooth_episode(episode, prop_cfg);
    const Matrix& support = options.use_ep ? smoothed.support : episode.support;
    const Matrix& pool = options.use_ep ? smoothed.pool : episode.pool;
    const Matrix& query = options.use_ep ? smoothed.query : episode.query;
    report.timings.ep_ms = clock.lap_ms();

    // (1) clustering over support + unlabeled pool
    CvocResult cvoc = run_cvoc(support, episode.support_labels, pool, cvoc_cfg, cst_cfg, seed);
    report.cvoc_iters_run = cvoc.iters_run;
    Matrix pool_logits = cvoc.query_logits;
    report.timings.cvoc_ms = clock.lap_ms();

    // (2) semantic refinement of the prototypes, then fresh pool logits
    if (sin) {
        PrototypeSet refined = cvoc.prototypes;
        for (int c = 0; c < episode.n_way; ++c) {
            const Vector t = *sin->semantics.lookup(episode.class_ids[static_cast<size_t>(c)]);
            refined.prototypes.row(c) =
                refine_prototype(cvoc.prototypes.prototypes.row(c).transpose(), t, sin->net,
                                 options.blend_s)
                    .transpose();
        }
        cvoc.prototypes = refined;
        if (options.recompute_after_refine) {
            cvoc.dictionaries = build_dictionaries(support, episode.support_labels, refined,
                                                   cvoc_cfg.prototype_only_dictionaries);
            pool_logits = query_logits(cvoc.dictionaries, pool, cvoc_cfg.lambda, cvoc_cfg.eps_log);
        }
    }
    report.timings.refine_ms = clock.lap_ms();

    // (3) restricted pseudo-labeling and support expansion
    PseudoLabelSet pseudo = restricted_pseudo_label(pool_logits, options.keep_percent, cvoc_cfg.tau);
    LabeledSet expanded = expand_support(support, episode.support_labels, pseudo, pool);
    report.kept_count = static_cast<int>(pseudo.entries.size());
    report.threshold_entropy = pseudo.threshold;
    report.timings.pseudo_ms = clock.lap_ms();

    // (4) balanced label propagation over expanded support + queries
    Matrix lp_input(expanded.x.rows() + query.rows(), expanded.x.cols());
    lp_input.topRows(expanded.x.rows()) = expanded.x;
    lp_input.bottomRows(query.rows()) = query;
    std::vector<std::pair<int, int>> anchors;
    anchors.reserve(expanded.y.size());
    for (size_t i = 0; i < expanded.y.size(); ++i)
        anchors.push_back({static_cast<int>(i), expanded.y[i]});
    SoftLabels soft = label_propagation(lp_input, anchors, episode.n_way, prop_cfg, true);

    // (5) hard query predictions
    Matrix query_scores = soft.scores.bottomRows(query.rows());
    std::vector<int> query_preds = hard_labels(query_scores);
    report.timings.lp_ms = clock.lap_ms();

    // scoring against the hidden truth
    const EpisodeTruth& truth = episode.eval_truth();
    report.query_accuracy = accuracy(query_preds, truth.query_labels);

    std::vector<int> pool_preds = hard_labels(pool_logits);
    int pool_hits = 0;
    for (size_t i = 0; i < pool_preds.size(); ++i)
        pool_hits += pool_preds[i] == truth.pool_labels[i];
    report.pool_accuracy = report.pool_size > 0
                               ? static_cast<double>(pool_hits) / report.pool_size
                               : 0.0;

    int kept_hits = 0, kept_distractors = 0;
    for (const auto& e : pseudo.entries) {
        kept_hits += e.label == truth.pool_labels[static_cast<size_t>(e.pool_index)];
        kept_distractors += truth.pool_distractor[static_cast<size_t>(e.pool_index)];
    }
    if (!pseudo.entries.empty()) {
        report.kept_precision =
            static_cast<double>(kept_hits) / static_cast<double>(pseudo.entries.size());
        report.kept_distractor_fraction =
            static_cast<double>(kept_distractors) / static_cast<double>(pseudo.entries.size());
    }

    report.timings.total_ms = total_clock.lap_ms();
    report.config_echo = json{{"cvoc", to_json(cvoc_cfg)},
                              {"cst", to_json(cst_cfg)},
                              {"propagation", to_json(prop_cfg)},
                              {"pipeline", to_json(options)},
                              {"sin_enabled", sin.has_value()}};
    return report;
}

}  // namespace ssfl
