#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ssfl/rng.hpp"
#include "ssfl/types.hpp"

namespace ssfl {

// Encoder-decoder that injects a per-class semantic vector into a visual
// prototype. The encoder maps concat(P, t) through one tanh hidden layer to a
// joint embedding of the prototype's dimension; the decoder reconstructs the
// concatenated input from that embedding.
struct SinNetwork {
    int d = 0;    // prototype dimension
    int d_t = 0;  // semantic vector dimension
    int h = 0;    // hidden width

    Matrix enc_w1, enc_w2, dec_w1, dec_w2;  // h x (d+d_t), d x h, h x d, (d+d_t) x h
    Vector enc_b1, enc_b2, dec_b1, dec_b2;

    int input_dim() const { return d + d_t; }

    std::array<Matrix*, 4> weight_tensors() { return {&enc_w1, &enc_w2, &dec_w1, &dec_w2}; }
    std::array<Vector*, 4> bias_tensors() { return {&enc_b1, &enc_b2, &dec_b1, &dec_b2}; }
    std::array<const Matrix*, 4> weight_tensors() const {
        return {&enc_w1, &enc_w2, &dec_w1, &dec_w2};
    }
    std::array<const Vector*, 4> bias_tensors() const {
        return {&enc_b1, &enc_b2, &dec_b1, &dec_b2};
    }

    // Xavier-uniform weights, zero biases, drawn from the pinned generator.
    static SinNetwork init(int d, int d_t, int h, std::uint64_t seed) {
        require(d >= 1 && d_t >= 1 && h >= 1, "SinNetwork: dimensions must be positive");
        SinNetwork net;
        net.d = d;
        net.d_t = d_t;
        net.h = h;
        Rng rng(derive_seed(seed, stream::sin_init));
        auto fill = [&rng](Matrix& w, int rows, int cols) {
            const double limit = std::sqrt(6.0 / (rows + cols));
            w = Matrix(rows, cols);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-limit, limit);
        };
        const int in = d + d_t;
        fill(net.enc_w1, h, in);
        fill(net.enc_w2, d, h);
        fill(net.dec_w1, h, d);
        fill(net.dec_w2, in, h);
        net.enc_b1 = Vector::Zero(h);
        net.enc_b2 = Vector::Zero(d);
        net.dec_b1 = Vector::Zero(h);
        net.dec_b2 = Vector::Zero(in);
        return net;
    }

    Vector encode(const Vector& p, const Vector& t) const {
        require(p.size() == d && t.size() == d_t, "SinNetwork: input shape mismatch");
        Vector u(input_dim());
        u << p, t;
        return enc_w2 * (enc_w1 * u + enc_b1).array().tanh().matrix() + enc_b2;
    }
};

struct SinForward {
    Vector z, p_rec, t_rec;
};

struct SinLoss {
    double jep = 0.0, fr = 0.0, sr = 0.0, total = 0.0;
};

// Mean absolute difference; component mean keeps the scale independent of
// the vector length.
inline double mae(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "mae: length mismatch");
    return (a - b).cwiseAbs().mean();
}

namespace sin_detail {

struct ForwardCache {
    Vector u, h1, z, h2, r;
};

inline ForwardCache forward_cached(const SinNetwork& net, const Vector& p, const Vector& t) {
    require(p.size() == net.d && t.size() == net.d_t, "sin_forward: input shape mismatch");
    ForwardCache c;
    c.u = Vector(net.input_dim());
    c.u << p, t;
    c.h1 = (net.enc_w1 * c.u + net.enc_b1).array().tanh();
    c.z = net.enc_w2 * c.h1 + net.enc_b2;
    c.h2 = (net.dec_w1 * c.z + net.dec_b1).array().tanh();
    c.r = net.dec_w2 * c.h2 + net.dec_b2;
    return c;
}

inline Vector sign_vec(const Vector& v) {
    return v.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

}  // namespace sin_detail

inline SinForward sin_forward(const SinNetwork& net, const Vector& p, const Vector& t) {
    auto c = sin_detail::forward_cached(net, p, t);
    SinForward out;
    out.z = std::move(c.z);
    out.p_rec = c.r.head(net.d);
    out.t_rec = c.r.tail(net.d_t);
    return out;
}

// Three L1 components: joint embedding vs prototype, prototype
// reconstruction, semantic reconstruction.
inline SinLoss sin_loss(const SinNetwork& net, const Vector& p, const Vector& t) {
    auto f = sin_forward(net, p, t);
    SinLoss loss;
    loss.jep = mae(f.z, p);
    loss.fr = mae(f.p_rec, p);
    loss.sr = mae(f.t_rec, t);
    loss.total = loss.jep + loss.fr + loss.sr;
    return loss;
}

struct SinGradients {
    Matrix enc_w1, enc_w2, dec_w1, dec_w2;
    Vector enc_b1, enc_b2, dec_b1, dec_b2;

    static SinGradients zeros(const SinNetwork& net) {
        SinGradients g;
        g.enc_w1 = Matrix::Zero(net.enc_w1.rows(), net.enc_w1.cols());
        g.enc_w2 = Matrix::Zero(net.enc_w2.rows(), net.enc_w2.cols());
        g.dec_w1 = Matrix::Zero(net.dec_w1.rows(), net.dec_w1.cols());
        g.dec_w2 = Matrix::Zero(net.dec_w2.rows(), net.dec_w2.cols());
        g.enc_b1 = Vector::Zero(net.enc_b1.size());
        g.enc_b2 = Vector::Zero(net.enc_b2.size());
        g.dec_b1 = Vector::Zero(net.dec_b1.size());
        g.dec_b2 = Vector::Zero(net.dec_b2.size());
        return g;
    }

    void accumulate(const SinGradients& o) {
        enc_w1 += o.enc_w1;
        enc_w2 += o.enc_w2;
        dec_w1 += o.dec_w1;
        dec_w2 += o.dec_w2;
        enc_b1 += o.enc_b1;
        enc_b2 += o.enc_b2;
        dec_b1 += o.dec_b1;
        dec_b2 += o.dec_b2;
    }

    void scale(double s) {
        enc_w1 *= s;
        enc_w2 *= s;
        dec_w1 *= s;
        dec_w2 *= s;
        enc_b1 *= s;
        enc_b2 *= s;
        dec_b1 *= s;
        dec_b2 *= s;
    }

    std::array<Matrix*, 4> weight_tensors() { return {&enc_w1, &enc_w2, &dec_w1, &dec_w2}; }
    std::array<Vector*, 4> bias_tensors() { return {&enc_b1, &enc_b2, &dec_b1, &dec_b2}; }
};

// Analytic gradient of the total loss for one (prototype, semantic) pair.
// The L1 terms use the sign subgradient with sign(0) = 0.
inline SinGradients sin_gradients(const SinNetwork& net, const Vector& p, const Vector& t) {
    using sin_detail::sign_vec;
    auto c = sin_detail::forward_cached(net, p, t);
    SinGradients g = SinGradients::zeros(net);

    // reconstruction head: d(L_fr + L_sr)/dr
    Vector g_r(net.input_dim());
    g_r.head(net.d) = sign_vec(Vector(c.r.head(net.d) - p)) / static_cast<double>(net.d);
    g_r.tail(net.d_t) = sign_vec(Vector(c.r.tail(net.d_t) - t)) / static_cast<double>(net.d_t);

    g.dec_w2 = g_r * c.h2.transpose();
    g.dec_b2 = g_r;
    Vector g_h2 = net.dec_w2.transpose() * g_r;
    Vector g_a2 = g_h2.array() * (1.0 - c.h2.array().square());
    g.dec_w1 = g_a2 * c.z.transpose();
    g.dec_b1 = g_a2;

    // joint embedding head plus what flows back from the decoder
    Vector g_z = net.dec_w1.transpose() * g_a2;
    g_z += sign_vec(Vector(c.z - p)) / static_cast<double>(net.d);

    g.enc_w2 = g_z * c.h1.transpose();
    g.enc_b2 = g_z;
    Vector g_h1 = net.enc_w2.transpose() * g_z;
    Vector g_a1 = g_h1.array() * (1.0 - c.h1.array().square());
    g.enc_w1 = g_a1 * c.u.transpose();
    g.enc_b1 = g_a1;
    return g;
}

struct SinTrainConfig {
    int epochs = 100;
    int batch_size = 16;
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    double val_fraction = 0.2;  // pairs held out for checkpoint selection
    std::uint64_t seed = 0;

    void validate() const {
        require(epochs >= 1, "SinTrainConfig: epochs must be >= 1");
        require(batch_size >= 1, "SinTrainConfig: batch_size must be >= 1");
        require(learning_rate > 0.0, "SinTrainConfig: learning_rate must be positive");
        require(weight_decay >= 0.0, "SinTrainConfig: negative weight_decay");
        require(val_fraction >= 0.0 && val_fraction < 1.0,
                "SinTrainConfig: val_fraction must be in [0,1)");
    }
};

struct SinTrainResult {
    SinNetwork net;  // checkpoint with the lowest held-out loss
    double initial_train_loss = 0.0;
    double final_train_loss = 0.0;  // of the returned checkpoint
    double best_val_loss = 0.0;
    int epochs_run = 0;
};

using SinPair = std::pair<Vector, Vector>;  // (prototype, semantic vector)

inline double sin_mean_loss(const SinNetwork& net, const std::vector<SinPair>& pairs) {
    double total = 0.0;
    for (const auto& [p, t] : pairs) total += sin_loss(net, p, t).total;
    return total / static_cast<double>(pairs.size());
}

namespace sin_detail {

struct AdamState {
    std::array<Matrix, 4> mw, vw;
    std::array<Vector, 4> mb, vb;
    long step = 0;

    explicit AdamState(SinNetwork& net) {
        auto ws = net.weight_tensors();
        auto bs = net.bias_tensors();
        for (int i = 0; i < 4; ++i) {
            mw[static_cast<size_t>(i)] = Matrix::Zero(ws[static_cast<size_t>(i)]->rows(),
                                                      ws[static_cast<size_t>(i)]->cols());
            vw[static_cast<size_t>(i)] = mw[static_cast<size_t>(i)];
            mb[static_cast<size_t>(i)] = Vector::Zero(bs[static_cast<size_t>(i)]->size());
            vb[static_cast<size_t>(i)] = mb[static_cast<size_t>(i)];
        }
    }
};

// Adaptive-moment step with decoupled weight decay (beta 0.9/0.999, eps 1e-8).
inline void adamw_step(SinNetwork& net, SinGradients& grads, AdamState& state,
                       const SinTrainConfig& cfg) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    auto update = [&](auto& param, auto& grad, auto& m, auto& v) {
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
        auto m_hat = m.array() / bc1;
        auto v_hat = v.array() / bc2;
        param.array() -= cfg.learning_rate * (m_hat / (v_hat.sqrt() + eps));
        param.array() -= cfg.learning_rate * cfg.weight_decay * param.array();
    };

    auto ws = net.weight_tensors();
    auto gw = grads.weight_tensors();
    for (size_t i = 0; i < 4; ++i) update(*ws[i], *gw[i], state.mw[i], state.vw[i]);
    auto bs = net.bias_tensors();
    auto gb = grads.bias_tensors();
    for (size_t i = 0; i < 4; ++i) update(*bs[i], *gb[i], state.mb[i], state.vb[i]);
}

}  // namespace sin_detail

// Mini-batch training of the injection network on (prototype, semantic)
// pairs. A deterministic slice of the pairs is held out; the checkpoint with
// the lowest held-out loss is returned (train loss when nothing is held out).
inline SinTrainResult sin_train(const std::vector<SinPair>& dataset, int hidden,
                                const SinTrainConfig& cfg) {
    cfg.validate();
    require(dataset.size() >= 2, "sin_train: need at least two (prototype, semantic) pairs");
    const int d = static_cast<int>(dataset.front().first.size());
    const int d_t = static_cast<int>(dataset.front().second.size());
    for (const auto& [p, t] : dataset) {
        require(p.size() == d && t.size() == d_t, "sin_train: inconsistent pair dimensions");
        check_finite(p, "sin_train: prototype");
        check_finite(t, "sin_train: semantic vector");
    }

    Rng order_rng(derive_seed(cfg.seed, stream::sin_train));
    std::vector<int> index(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) index[i] = static_cast<int>(i);
    order_rng.shuffle(index);

    const int val_count =
        std::min(static_cast<int>(dataset.size()) - 1,
                 static_cast<int>(static_cast<double>(dataset.size()) * cfg.val_fraction));
    std::vector<SinPair> val_pairs, train_pairs;
    for (size_t i = 0; i < dataset.size(); ++i) {
        if (static_cast<int>(i) < val_count)
            val_pairs.push_back(dataset[static_cast<size_t>(index[i])]);
        else
            train_pairs.push_back(dataset[static_cast<size_t>(index[i])]);
    }
    const std::vector<SinPair>& holdout = val_pairs.empty() ? train_pairs : val_pairs;

    SinTrainResult result;
    SinNetwork net = SinNetwork::init(d, d_t, hidden, cfg.seed);
    result.initial_train_loss = sin_mean_loss(net, train_pairs);

    sin_detail::AdamState adam(net);
    result.net = net;
    result.best_val_loss = sin_mean_loss(net, holdout);

    std::vector<int> order(train_pairs.size());
    for (size_t i = 0; i < train_pairs.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            SinGradients batch = SinGradients::zeros(net);
            for (size_t i = start; i < stop; ++i) {
                const auto& [p, t] = train_pairs[static_cast<size_t>(order[i])];
                batch.accumulate(sin_gradients(net, p, t));
            }
            batch.scale(1.0 / static_cast<double>(stop - start));
            sin_detail::adamw_step(net, batch, adam, cfg);
        }
        const double val = sin_mean_loss(net, holdout);
        if (val < result.best_val_loss) {
            result.best_val_loss = val;
            result.net = net;
        }
        result.epochs_run = epoch + 1;
    }
    result.final_train_loss = sin_mean_loss(result.net, train_pairs);
    return result;
}

// P_ref = s * P + (1 - s) * E_s(P, t). The endpoints short-circuit so s = 1
// is a bit-exact no-op and s = 0 returns the joint embedding untouched.
inline Vector refine_prototype(const Vector& p, const Vector& t, const SinNetwork& net,
                               double blend_s) {
    require(blend_s >= 0.0 && blend_s <= 1.0, "refine_prototype: blend weight outside [0,1]");
    if (blend_s == 1.0) return p;
    Vector z = net.encode(p, t);
    if (blend_s == 0.0) return z;
    return blend_s * p + (1.0 - blend_s) * z;
}

// ---- checkpoint container ------------------------------------------------
// Little-endian binary: magic, version, dims, activation tag, then each
// tensor as float64 row-major. Round-trips bit-exactly.

namespace sin_detail {
constexpr char kCkptMagic[8] = {'S', 'I', 'N', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCkptVersion = 1;
constexpr std::uint32_t kActivationTanh = 0;
}  // namespace sin_detail

inline void save_checkpoint(const SinNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error(path + ": cannot write");
    out.write(sin_detail::kCkptMagic, 8);
    const std::uint32_t header[5] = {sin_detail::kCkptVersion, static_cast<std::uint32_t>(net.d),
                                     static_cast<std::uint32_t>(net.d_t),
                                     static_cast<std::uint32_t>(net.h),
                                     sin_detail::kActivationTanh};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    auto write_matrix = [&out](const Matrix& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
    };
    for (const Matrix* w : net.weight_tensors()) write_matrix(*w);
    for (const Vector* b : net.bias_tensors()) write_matrix(*b);
}

inline SinNetwork load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path + ": cannot open");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, sin_detail::kCkptMagic, 8) != 0)
        throw data_error(path + ": not a network checkpoint");
    std::uint32_t header[5];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw data_error(path + ": truncated checkpoint header");
    if (header[0] != sin_detail::kCkptVersion)
        throw data_error(path + ": unsupported checkpoint version");
    if (header[4] != sin_detail::kActivationTanh)
        throw data_error(path + ": unknown activation tag");
    SinNetwork net;
    net.d = static_cast<int>(header[1]);
    net.d_t = static_cast<int>(header[2]);
    net.h = static_cast<int>(header[3]);
    const int in_dim = net.input_dim();
    net.enc_w1 = Matrix(net.h, in_dim);
    net.enc_w2 = Matrix(net.d, net.h);
    net.dec_w1 = Matrix(net.h, net.d);
    net.dec_w2 = Matrix(in_dim, net.h);
    net.enc_b1 = Vector(net.h);
    net.enc_b2 = Vector(net.d);
    net.dec_b1 = Vector(net.h);
    net.dec_b2 = Vector(in_dim);
    auto read_matrix = [&in, &path](Matrix& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                double v = 0.0;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                if (!in) throw data_error(path + ": truncated checkpoint payload");
                m(i, j) = v;
            }
    };
    for (Matrix* w : net.weight_tensors()) read_matrix(*w);
    for (Vector* b : net.bias_tensors()) {
        Matrix tmp(b->size(), 1);
        read_matrix(tmp);
        *b = tmp.col(0);
    }
    return net;
}

}  // namespace ssfl
