// scratch: does shared EP preprocessing flip the cvoc-vs-kmeans direction?
#include <cstdio>

#include "ssfl/bench.hpp"

using namespace ssfl;

Episode smooth_episode(const Episode& ep, const PropagationConfig& prop) {
    Matrix stacked(ep.support.rows() + ep.pool.rows() + ep.query.rows(), ep.support.cols());
    stacked.topRows(ep.support.rows()) = ep.support;
    stacked.middleRows(ep.support.rows(), ep.pool.rows()) = ep.pool;
    stacked.bottomRows(ep.query.rows()) = ep.query;
    Matrix sm = embedding_propagation(stacked, prop);
    Episode out = ep;
    out.support = sm.topRows(ep.support.rows());
    out.pool = sm.middleRows(ep.support.rows(), ep.pool.rows());
    out.query = sm.bottomRows(ep.query.rows());
    return out;
}

int main() {
    const int episodes = 150;
    for (double alpha_ep : {0.25, 0.5, 0.75}) {
        for (int dim : {8, 16}) {
            BenchConfig cfg;
            cfg.methods = {Method::kmeans, Method::cvoc, Method::cvoc_cst};
            cfg.episodes = episodes;
            cfg.root_seed = 42;
            cfg.workers = 8;
            cfg.source.dim = dim;
            cfg.source.separation = 2.0;
            cfg.source.k_shot = 1;
            cfg.source.unlabeled_per_class = 100;
            cfg.prop.alpha_ep = alpha_ep;

            // manual loop with shared smoothing
            double km = 0, cv = 0, cc = 0;
            std::atomic<int> next{0};
            std::vector<std::future<void>> fs;
            std::vector<std::array<double, 3>> acc(episodes);
            for (int w = 0; w < 8; ++w)
                fs.push_back(std::async(std::launch::async, [&]() {
                    for (int i = next.fetch_add(1); i < episodes; i = next.fetch_add(1)) {
                        auto seed = derive_seed(42, stream::episode, i);
                        Episode ep = smooth_episode(cfg.source.make(seed), cfg.prop);
                        acc[i][0] = run_method_on_episode(Method::kmeans, ep, cfg).pool_accuracy;
                        acc[i][1] = run_method_on_episode(Method::cvoc, ep, cfg).pool_accuracy;
                        acc[i][2] = run_method_on_episode(Method::cvoc_cst, ep, cfg).pool_accuracy;
                    }
                }));
            for (auto& f : fs) f.get();
            for (int i = 0; i < episodes; ++i) {
                km += acc[i][0];
                cv += acc[i][1];
                cc += acc[i][2];
            }
            std::printf("ep_alpha=%.2f dim=%2d | km %.3f cvoc %.3f cvoc+cst %.3f\n", alpha_ep, dim,
                        km / episodes, cv / episodes, cc / episodes);
        }
    }
    return 0;
}
