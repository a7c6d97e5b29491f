// scratch: direction checks for the statistical acceptance criteria
#include <cstdio>

#include "ssfl/bench.hpp"

using namespace ssfl;

int main(int argc, char** argv) {
    const int episodes = argc > 1 ? std::atoi(argv[1]) : 150;
    for (int dim : {8, 16, 32}) {
        BenchConfig cfg;
        cfg.methods = {Method::cvoc_cst, Method::kmeans, Method::cvoc_lp, Method::lp_only};
        cfg.episodes = episodes;
        cfg.root_seed = 42;
        cfg.workers = 8;
        cfg.source.synthetic = true;
        cfg.source.n_classes = 16;
        cfg.source.dim = dim;
        cfg.source.separation = 2.0;
        cfg.source.n_way = 5;
        cfg.source.k_shot = 1;
        cfg.source.queries_per_class = 15;
        cfg.source.unlabeled_per_class = 100;
        auto t0 = std::chrono::steady_clock::now();
        auto report = run_bench(cfg);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        auto pool_gap = paired_gap(report.methods[0], report.methods[1], true);
        auto query_gap = paired_gap(report.methods[2], report.methods[3], false);
        std::printf(
            "dim=%2d  cvoc+cst pool=%.4f  kmeans pool=%.4f  gap=%.4f+-%.4f (%s)   "
            "cvoc+lp q=%.4f  lp q=%.4f  gap=%.4f+-%.4f (%s)  [%.1fs]\n",
            dim, report.methods[0].pool_accuracy.mean, report.methods[1].pool_accuracy.mean,
            pool_gap.mean, pool_gap.half_width,
            pool_gap.mean - pool_gap.half_width > 0 ? "OK" : "FAIL",
            report.methods[2].query_accuracy.mean, report.methods[3].query_accuracy.mean,
            query_gap.mean, query_gap.half_width,
            query_gap.mean - query_gap.half_width > 0 ? "OK" : "FAIL", secs);
    }
    return 0;
}
