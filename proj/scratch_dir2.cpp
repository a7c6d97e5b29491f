// scratch: decompose the cvoc-vs-kmeans gap
#include <cstdio>

#include "ssfl/bench.hpp"

using namespace ssfl;

int main() {
    const int episodes = 150;
    for (double cn_scale : {2.0, 4.0, 8.0, 16.0}) {
        for (int dim : {8, 16}) {
            BenchConfig cfg;
            cfg.methods = {Method::kmeans, Method::cvoc, Method::cvoc_cst};
            cfg.episodes = episodes;
            cfg.root_seed = 42;
            cfg.workers = 8;
            cfg.source.dim = dim;
            cfg.source.separation = 2.0;
            cfg.source.center_norm = cn_scale * std::sqrt(dim);
            cfg.source.k_shot = 1;
            cfg.source.unlabeled_per_class = 100;

            auto r_half = run_bench(cfg);
            cfg.cvoc.w_intra = 0.0;
            cfg.cvoc.w_inter = 0.0;
            cfg.cst.w_intra = 0.0;
            cfg.cst.w_inter = 0.0;
            auto r_zero = run_bench(cfg);

            std::printf(
                "cn=%4.1f*sd dim=%2d | km %.3f | w=.5: cvoc %.3f cvoc+cst %.3f | w=0: cvoc %.3f "
                "cvoc+cst %.3f\n",
                cn_scale, dim, r_half.methods[0].pool_accuracy.mean,
                r_half.methods[1].pool_accuracy.mean, r_half.methods[2].pool_accuracy.mean,
                r_zero.methods[1].pool_accuracy.mean, r_zero.methods[2].pool_accuracy.mean);
        }
    }
    return 0;
}
