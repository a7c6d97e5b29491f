#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "ssfl/rng.hpp"
#include "ssfl/sin.hpp"

using ssfl::Matrix;
using ssfl::SinNetwork;
using ssfl::SinPair;
using ssfl::SinTrainConfig;
using ssfl::Vector;

namespace {

Vector random_vec(ssfl::Rng& rng, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

double total_loss(const SinNetwork& net, const Vector& p, const Vector& t) {
    return ssfl::sin_loss(net, p, t).total;
}

// central-difference derivative for every entry of one tensor
template <typename Tensor, typename Getter>
double max_rel_error(SinNetwork net, const Vector& p, const Vector& t, Getter get,
                     const Tensor& analytic) {
    const double eps = 1e-6;
    double worst = 0.0;
    Tensor& tensor = get(net);
    for (Eigen::Index i = 0; i < tensor.rows(); ++i)
        for (Eigen::Index j = 0; j < tensor.cols(); ++j) {
            const double saved = tensor(i, j);
            tensor(i, j) = saved + eps;
            const double up = total_loss(net, p, t);
            tensor(i, j) = saved - eps;
            const double down = total_loss(net, p, t);
            tensor(i, j) = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double denom = std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-8});
            worst = std::max(worst, std::abs(numeric - analytic(i, j)) / denom);
        }
    return worst;
}

// true when every L1 difference stays clear of the |x| kink
bool kink_free(const SinNetwork& net, const Vector& p, const Vector& t, double margin) {
    auto f = ssfl::sin_forward(net, p, t);
    return (f.z - p).cwiseAbs().minCoeff() > margin &&
           (f.p_rec - p).cwiseAbs().minCoeff() > margin &&
           (f.t_rec - t).cwiseAbs().minCoeff() > margin;
}

std::vector<SinPair> synthetic_pairs(ssfl::Rng& rng, int classes, int d, int d_t) {
    std::vector<SinPair> pairs;
    for (int c = 0; c < classes; ++c)
        pairs.emplace_back(random_vec(rng, d), random_vec(rng, d_t));
    return pairs;
}

}  // namespace

TEST_CASE("zero network maps everything to zero", "[sin]") {
    SinNetwork net = SinNetwork::init(3, 2, 4, 1);
    for (Matrix* w : net.weight_tensors()) w->setZero();
    Vector p(3), t(2);
    p << 1.0, -2.0, 3.0;
    t << 0.5, 0.5;
    auto f = ssfl::sin_forward(net, p, t);
    REQUIRE(f.z.isZero(0.0));
    REQUIRE(f.p_rec.isZero(0.0));
    REQUIRE(f.t_rec.isZero(0.0));
}

TEST_CASE("forward pass is deterministic", "[sin]") {
    SinNetwork net = SinNetwork::init(4, 3, 8, 17);
    ssfl::Rng rng(2);
    Vector p = random_vec(rng, 4), t = random_vec(rng, 3);
    auto a = ssfl::sin_forward(net, p, t);
    auto b = ssfl::sin_forward(net, p, t);
    REQUIRE(a.z == b.z);
    REQUIRE(a.p_rec == b.p_rec);
    REQUIRE(a.t_rec == b.t_rec);

    SinNetwork net2 = SinNetwork::init(4, 3, 8, 17);
    REQUIRE(net.enc_w1 == net2.enc_w1);  // init is seed-stable too
}

TEST_CASE("shape mismatches are rejected", "[sin]") {
    SinNetwork net = SinNetwork::init(4, 3, 8, 17);
    Vector p = Vector::Zero(5), t = Vector::Zero(3);
    REQUIRE_THROWS_AS(ssfl::sin_forward(net, p, t), ssfl::input_error);
}

TEST_CASE("loss components follow the stated reductions", "[sin]") {
    SinNetwork net = SinNetwork::init(2, 2, 4, 3);
    for (Matrix* w : net.weight_tensors()) w->setZero();
    // decoder bias produces p_rec - p = (1, 1) for p = (1, 1) shifted by 2
    net.dec_b2 << 2.0, 2.0, 0.0, 0.0;
    Vector p(2), t(2);
    p << 1.0, 1.0;
    t << 0.0, 0.0;
    auto loss = ssfl::sin_loss(net, p, t);
    REQUIRE(loss.fr == 1.0);   // mean |(2,2) - (1,1)|
    REQUIRE(loss.sr == 0.0);
    REQUIRE(loss.jep == 1.0);  // z = 0 vs p = (1,1)
    REQUIRE(loss.total == 2.0);

    // z == p makes the joint embedding term vanish
    SinNetwork id_net = SinNetwork::init(2, 1, 2, 5);
    for (Matrix* w : id_net.weight_tensors()) w->setZero();
    Vector p2(2), t2(1);
    p2 << 0.7, -0.3;
    t2 << 0.0;
    id_net.enc_b2 = p2;
    REQUIRE(ssfl::sin_loss(id_net, p2, t2).jep == 0.0);
}

TEST_CASE("jacobian of the embedding w.r.t. the prototype matches differences", "[sin]") {
    SinNetwork net = SinNetwork::init(4, 3, 6, 23);
    ssfl::Rng rng(3);
    Vector p = random_vec(rng, 4), t = random_vec(rng, 3);
    const double eps = 1e-6;
    // analytic: dz/du = enc_w2 * diag(1 - h1^2) * enc_w1, prototype block
    Vector u(7);
    u << p, t;
    Vector h1 = (net.enc_w1 * u + net.enc_b1).array().tanh();
    Matrix jac = net.enc_w2 * (1.0 - h1.array().square()).matrix().asDiagonal() * net.enc_w1;
    for (int k = 0; k < 4; ++k) {
        Vector up = p, down = p;
        up[k] += eps;
        down[k] -= eps;
        Vector numeric =
            (ssfl::sin_forward(net, up, t).z - ssfl::sin_forward(net, down, t).z) / (2.0 * eps);
        REQUIRE((numeric - jac.col(k)).lpNorm<Eigen::Infinity>() <
                1e-4 * std::max(1.0, jac.col(k).lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("analytic gradients match central differences on every tensor", "[sin]") {
    SinNetwork net = SinNetwork::init(4, 4, 8, 29);
    ssfl::Rng rng(5);
    Vector p = random_vec(rng, 4), t = random_vec(rng, 4);
    REQUIRE(kink_free(net, p, t, 1e-3));

    auto g = ssfl::sin_gradients(net, p, t);
    REQUIRE(max_rel_error<Matrix>(net, p, t, [](SinNetwork& n) -> Matrix& { return n.enc_w1; },
                                  g.enc_w1) < 1e-4);
    REQUIRE(max_rel_error<Matrix>(net, p, t, [](SinNetwork& n) -> Matrix& { return n.enc_w2; },
                                  g.enc_w2) < 1e-4);
    REQUIRE(max_rel_error<Matrix>(net, p, t, [](SinNetwork& n) -> Matrix& { return n.dec_w1; },
                                  g.dec_w1) < 1e-4);
    REQUIRE(max_rel_error<Matrix>(net, p, t, [](SinNetwork& n) -> Matrix& { return n.dec_w2; },
                                  g.dec_w2) < 1e-4);
    REQUIRE(max_rel_error<Vector>(net, p, t, [](SinNetwork& n) -> Vector& { return n.enc_b1; },
                                  g.enc_b1) < 1e-4);
    REQUIRE(max_rel_error<Vector>(net, p, t, [](SinNetwork& n) -> Vector& { return n.enc_b2; },
                                  g.enc_b2) < 1e-4);
    REQUIRE(max_rel_error<Vector>(net, p, t, [](SinNetwork& n) -> Vector& { return n.dec_b1; },
                                  g.dec_b1) < 1e-4);
    REQUIRE(max_rel_error<Vector>(net, p, t, [](SinNetwork& n) -> Vector& { return n.dec_b2; },
                                  g.dec_b2) < 1e-4);
}

TEST_CASE("training reduces the loss and is seed-deterministic", "[sin]") {
    ssfl::Rng rng(7);
    auto pairs = synthetic_pairs(rng, 5, 8, 8);
    SinTrainConfig cfg;
    cfg.epochs = 50;     // 4 train pairs, batch 4 -> 50 steps
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-2;
    cfg.seed = 11;
    auto result = ssfl::sin_train(pairs, 16, cfg);
    REQUIRE(result.final_train_loss < result.initial_train_loss);

    auto rerun = ssfl::sin_train(pairs, 16, cfg);
    REQUIRE(result.net.enc_w1 == rerun.net.enc_w1);
    REQUIRE(result.net.dec_w2 == rerun.net.dec_w2);
    REQUIRE(result.final_train_loss == rerun.final_train_loss);
}

TEST_CASE("median loss ratio over seeds is well below one", "[sin]") {
    std::vector<double> ratios;
    for (int seed = 0; seed < 10; ++seed) {
        ssfl::Rng rng(100 + static_cast<std::uint64_t>(seed));
        auto pairs = synthetic_pairs(rng, 8, 8, 8);
        SinTrainConfig cfg;
        cfg.epochs = 100;
        cfg.batch_size = 8;
        cfg.learning_rate = 1e-2;
        cfg.seed = static_cast<std::uint64_t>(seed);
        auto result = ssfl::sin_train(pairs, 16, cfg);
        ratios.push_back(result.final_train_loss / result.initial_train_loss);
    }
    std::sort(ratios.begin(), ratios.end());
    const double median = 0.5 * (ratios[4] + ratios[5]);
    REQUIRE(median < 0.9);
}

TEST_CASE("refine_prototype blends along the segment", "[sin]") {
    SinNetwork net = SinNetwork::init(5, 3, 8, 31);
    ssfl::Rng rng(9);
    Vector p = random_vec(rng, 5), t = random_vec(rng, 3);

    // s = 1 returns the prototype bit-exactly
    REQUIRE(ssfl::refine_prototype(p, t, net, 1.0) == p);
    // s = 0 returns the joint embedding
    REQUIRE(ssfl::refine_prototype(p, t, net, 0.0) == net.encode(p, t));

    Vector z = net.encode(p, t);
    for (double s : {0.25, 0.5, 0.9}) {
        Vector r = ssfl::refine_prototype(p, t, net, s);
        for (int i = 0; i < 5; ++i) {
            const double lo = std::min(p[i], z[i]) - 1e-12;
            const double hi = std::max(p[i], z[i]) + 1e-12;
            REQUIRE(r[i] >= lo);
            REQUIRE(r[i] <= hi);
        }
    }
    REQUIRE_THROWS_AS(ssfl::refine_prototype(p, t, net, 1.5), ssfl::input_error);
    REQUIRE_THROWS_AS(ssfl::refine_prototype(p, t, net, -0.1), ssfl::input_error);
}

TEST_CASE("checkpoints round-trip bit-exactly", "[sin]") {
    SinNetwork net = SinNetwork::init(6, 4, 10, 37);
    const std::string path =
        (std::filesystem::temp_directory_path() / "ssfl_ckpt.bin").string();
    ssfl::save_checkpoint(net, path);
    SinNetwork back = ssfl::load_checkpoint(path);
    REQUIRE(back.d == net.d);
    REQUIRE(back.d_t == net.d_t);
    REQUIRE(back.h == net.h);
    REQUIRE(back.enc_w1 == net.enc_w1);
    REQUIRE(back.enc_w2 == net.enc_w2);
    REQUIRE(back.dec_w1 == net.dec_w1);
    REQUIRE(back.dec_w2 == net.dec_w2);
    REQUIRE(back.enc_b1 == net.enc_b1);
    REQUIRE(back.dec_b2 == net.dec_b2);
    std::remove(path.c_str());

    // corrupt magic is rejected
    const std::string bad =
        (std::filesystem::temp_directory_path() / "ssfl_ckpt_bad.bin").string();
    std::ofstream out(bad, std::ios::binary);
    out << "WRONGMAGIC";
    out.close();
    REQUIRE_THROWS_AS(ssfl::load_checkpoint(bad), ssfl::data_error);
    std::remove(bad.c_str());
}
