#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "motorsig/error.hpp"
#include "motorsig/rng.hpp"

namespace motorsig::net {

// ---------------------------------------------------------------------------
// Configuration and parameter containers
// ---------------------------------------------------------------------------

struct NetworkConfig {
    int input_window_l = 400;
    int lstm_units = 20;
    int lstm_layers = 2;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 5.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (input_window_l < 2) throw domain_error("network: input_window_l must be >= 2");
        if (lstm_units < 1 || lstm_layers < 1) throw domain_error("network: units/layers must be >= 1");
        if (!(learning_rate > 0) || !(adam_beta1 > 0) || !(adam_beta2 > 0) || !(adam_eps > 0) ||
            !(grad_clip_norm > 0))
            throw domain_error("network: hyperparameters must be positive");
    }
};

// One LSTM layer's parameters. Gate order is [input, forget, cell, output],
// stacked along rows: w is 4U x in, r is 4U x U, b is 4U.
struct LstmLayer {
    Eigen::MatrixXd w, r;
    Eigen::VectorXd b;
};

// Every trainable tensor of the network; reused for gradients and for the
// Adam moment accumulators.
struct ParamSet {
    std::vector<LstmLayer> layers;
    Eigen::MatrixXd dense_w;  // 2 x U
    Eigen::VectorXd dense_b;  // 2

    template <typename Fn>
    void for_each(Fn&& fn) {
        for (auto& l : layers) {
            fn(l.w);
            fn(l.r);
            fn(l.b);
        }
        fn(dense_w);
        fn(dense_b);
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (const auto& l : layers) {
            fn(l.w);
            fn(l.r);
            fn(l.b);
        }
        fn(dense_w);
        fn(dense_b);
    }

    static ParamSet zeros_like(const ParamSet& shape) {
        ParamSet out;
        for (const auto& l : shape.layers) {
            LstmLayer z;
            z.w = Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols());
            z.r = Eigen::MatrixXd::Zero(l.r.rows(), l.r.cols());
            z.b = Eigen::VectorXd::Zero(l.b.size());
            out.layers.push_back(std::move(z));
        }
        out.dense_w = Eigen::MatrixXd::Zero(shape.dense_w.rows(), shape.dense_w.cols());
        out.dense_b = Eigen::VectorXd::Zero(shape.dense_b.size());
        return out;
    }

    double squared_norm() const {
        double acc = 0.0;
        for_each([&acc](const auto& t) { acc += t.squaredNorm(); });
        return acc;
    }

    bool all_finite() const {
        bool ok = true;
        for_each([&ok](const auto& t) { ok = ok && t.allFinite(); });
        return ok;
    }
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NetworkCheckpoint {
    NetworkConfig config;
    std::uint64_t epoch = 0;
    std::uint64_t adam_step = 0;
    double norm_mean = 0.0;  // input position normalization, cm
    double norm_std = 1.0;
    ParamSet params;
    ParamSet adam_m;
    ParamSet adam_v;
};

struct GaussianPrediction {
    double mu_hat = 0.0;
    double sigma_hat = 1.0;
};

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

// Uniform(-k, k) with k = 1/sqrt(fan_in) per matrix; biases zero except the
// forget gate, which starts at 1 to keep early memory open. Entries are
// drawn row-major so the layout is part of the seeded contract.
inline NetworkCheckpoint init_checkpoint(const NetworkConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const auto fill = [&rng](Eigen::MatrixXd& m, int fan_in) {
        const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                m(i, j) = k * (2.0 * rng.uniform() - 1.0);
    };

    NetworkCheckpoint ckpt;
    ckpt.config = config;
    const int u = config.lstm_units;
    for (int layer = 0; layer < config.lstm_layers; ++layer) {
        const int in = layer == 0 ? 1 : u;
        LstmLayer l;
        l.w.resize(4 * u, in);
        l.r.resize(4 * u, u);
        l.b = Eigen::VectorXd::Zero(4 * u);
        fill(l.w, in);
        fill(l.r, u);
        l.b.segment(u, u).setConstant(1.0);  // forget gate
        ckpt.params.layers.push_back(std::move(l));
    }
    ckpt.params.dense_w.resize(2, u);
    fill(ckpt.params.dense_w, u);
    ckpt.params.dense_b = Eigen::VectorXd::Zero(2);

    ckpt.adam_m = ParamSet::zeros_like(ckpt.params);
    ckpt.adam_v = ParamSet::zeros_like(ckpt.params);
    return ckpt;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) {
    return 1.0 / (1.0 + (-z).exp());
}

// Per-layer activations of one batch, kept for backpropagation.
struct LayerTrace {
    std::vector<Eigen::MatrixXd> gates;    // per step, B x 4U, post-activation [i f g o]
    std::vector<Eigen::MatrixXd> cells;    // per step, B x U
    std::vector<Eigen::MatrixXd> hiddens;  // per step, B x U
};

// Runs one LSTM layer over a full window batch. `inputs[t]` is B x in.
// When `trace` is null only the final hidden state is kept.
inline Eigen::MatrixXd run_layer(const LstmLayer& layer,
                                 const std::vector<Eigen::MatrixXd>& inputs,
                                 LayerTrace* trace) {
    const auto steps = inputs.size();
    const auto batch = inputs[0].rows();
    const auto u = layer.r.cols();

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch, u);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(batch, u);
    if (trace) {
        trace->gates.resize(steps);
        trace->cells.resize(steps);
        trace->hiddens.resize(steps);
    }

    Eigen::MatrixXd z(batch, 4 * u);
    for (std::size_t t = 0; t < steps; ++t) {
        z.noalias() = inputs[t] * layer.w.transpose();
        z.noalias() += h * layer.r.transpose();
        z.rowwise() += layer.b.transpose();

        Eigen::MatrixXd act(batch, 4 * u);
        act.leftCols(2 * u) = sigmoid(z.leftCols(2 * u).array());         // i, f
        act.middleCols(2 * u, u) = z.middleCols(2 * u, u).array().tanh(); // g
        act.rightCols(u) = sigmoid(z.rightCols(u).array());               // o

        c = act.middleCols(u, u).cwiseProduct(c) +            // f * c_prev
            act.leftCols(u).cwiseProduct(act.middleCols(2 * u, u));  // i * g
        h = act.rightCols(u).cwiseProduct(c.array().tanh().matrix());

        if (trace) {
            trace->gates[t] = std::move(act);
            trace->cells[t] = c;
            trace->hiddens[t] = h;
        }
    }
    return h;
}

}  // namespace detail

// Full forward over a batch of normalized windows (rows). Returns the dense
// head outputs: mu in column 0, sigma = exp(raw) in column 1.
inline Eigen::MatrixXd forward_batch(const NetworkCheckpoint& ckpt, const Eigen::MatrixXd& windows) {
    const Eigen::Index batch = windows.rows();
    if (windows.cols() != ckpt.config.input_window_l)
        throw domain_error("forward: window length must equal input_window_l");
    if (!windows.allFinite()) throw domain_error("forward: non-finite input window");

    std::vector<Eigen::MatrixXd> inputs(static_cast<std::size_t>(windows.cols()));
    for (Eigen::Index t = 0; t < windows.cols(); ++t) inputs[static_cast<std::size_t>(t)] = windows.col(t);

    Eigen::MatrixXd h;
    for (std::size_t layer = 0; layer < ckpt.params.layers.size(); ++layer) {
        detail::LayerTrace trace;
        h = detail::run_layer(ckpt.params.layers[layer], inputs, &trace);
        if (!h.allFinite())
            throw numeric_error("lstm layer " + std::to_string(layer + 1) +
                                " produced non-finite activations");
        if (layer + 1 < ckpt.params.layers.size()) inputs = std::move(trace.hiddens);
    }

    Eigen::MatrixXd raw = h * ckpt.params.dense_w.transpose();
    raw.rowwise() += ckpt.params.dense_b.transpose();
    if (!raw.allFinite()) throw numeric_error("dense layer produced non-finite outputs");

    Eigen::MatrixXd out(batch, 2);
    out.col(0) = raw.col(0);
    out.col(1) = raw.col(1).array().exp();
    return out;
}

// Single-window convenience wrapper.
inline GaussianPrediction forward(const NetworkCheckpoint& ckpt, const std::vector<double>& window) {
    Eigen::MatrixXd w(1, static_cast<Eigen::Index>(window.size()));
    for (std::size_t i = 0; i < window.size(); ++i) w(0, static_cast<Eigen::Index>(i)) = window[i];
    const Eigen::MatrixXd out = forward_batch(ckpt, w);
    return {out(0, 0), out(0, 1)};
}

inline double normalize_position(const NetworkCheckpoint& ckpt, double p) {
    return (p - ckpt.norm_mean) / ckpt.norm_std;
}

// Gaussian negative log-likelihood, L = 1/2 (log sigma^2 + (mu - v)^2 / sigma^2).
inline double nll_loss(const GaussianPrediction& pred, double target_v) {
    if (!(pred.sigma_hat > 0)) throw domain_error("nll_loss: sigma must be > 0");
    const double err = pred.mu_hat - target_v;
    return 0.5 * (std::log(pred.sigma_hat * pred.sigma_hat) +
                  err * err / (pred.sigma_hat * pred.sigma_hat));
}

// ---------------------------------------------------------------------------
// Backpropagation through time
// ---------------------------------------------------------------------------

struct BatchGradients {
    double loss = 0.0;       // mean NLL over the batch
    double grad_norm = 0.0;  // global norm before clipping
    ParamSet grads;
};

namespace detail {

// BPTT for one layer. `ext_dh[t]` is the gradient arriving at h_t from
// outside the layer (dense head or the layer above); returns the gradient
// w.r.t. the layer inputs and accumulates parameter gradients.
inline std::vector<Eigen::MatrixXd> backward_layer(const LstmLayer& layer,
                                                   const std::vector<Eigen::MatrixXd>& inputs,
                                                   const LayerTrace& trace,
                                                   const std::vector<Eigen::MatrixXd>& ext_dh,
                                                   LstmLayer& grad) {
    const auto steps = inputs.size();
    const auto batch = inputs[0].rows();
    const auto u = layer.r.cols();

    std::vector<Eigen::MatrixXd> dinputs(steps);
    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(batch, u);
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(batch, u);

    for (std::size_t t = steps; t-- > 0;) {
        dh += ext_dh[t];

        const auto i_g = trace.gates[t].leftCols(u).array();
        const auto f_g = trace.gates[t].middleCols(u, u).array();
        const auto g_g = trace.gates[t].middleCols(2 * u, u).array();
        const auto o_g = trace.gates[t].rightCols(u).array();
        const Eigen::ArrayXXd tanh_c = trace.cells[t].array().tanh();

        dc.array() += dh.array() * o_g * (1.0 - tanh_c.square());
        const Eigen::ArrayXXd do_ = dh.array() * tanh_c;

        Eigen::ArrayXXd c_prev;
        if (t == 0)
            c_prev = Eigen::ArrayXXd::Zero(batch, u);
        else
            c_prev = trace.cells[t - 1].array();

        Eigen::MatrixXd dz(batch, 4 * u);
        dz.leftCols(u) = (dc.array() * g_g) * i_g * (1.0 - i_g);            // input gate
        dz.middleCols(u, u) = (dc.array() * c_prev) * f_g * (1.0 - f_g);    // forget gate
        dz.middleCols(2 * u, u) = (dc.array() * i_g) * (1.0 - g_g.square()); // cell candidate
        dz.rightCols(u) = do_ * o_g * (1.0 - o_g);                          // output gate

        Eigen::MatrixXd h_prev;
        if (t == 0)
            h_prev = Eigen::MatrixXd::Zero(batch, u);
        else
            h_prev = trace.hiddens[t - 1];
        grad.w.noalias() += dz.transpose() * inputs[t];
        grad.r.noalias() += dz.transpose() * h_prev;
        grad.b += dz.colwise().sum().transpose();

        dinputs[t].noalias() = dz * layer.w;
        dh.noalias() = dz * layer.r;       // recurrent gradient into t-1
        dc = dc.cwiseProduct(f_g.matrix());  // cell gradient into t-1
    }
    return dinputs;
}

}  // namespace detail

// Mean-NLL gradients for a batch of (window, target velocity) pairs via
// backpropagation through the full unrolling. The batch is processed in
// memory-bounded chunks; gradients are clipped to the configured global
// norm after aggregation.
inline BatchGradients backward(const NetworkCheckpoint& ckpt, const Eigen::MatrixXd& windows,
                               const Eigen::VectorXd& targets,
                               double chunk_budget_bytes = 96.0 * 1024 * 1024) {
    const Eigen::Index batch = windows.rows();
    if (batch == 0) throw domain_error("backward: empty batch");
    if (targets.size() != batch) throw domain_error("backward: batch size mismatch");
    if (windows.cols() != ckpt.config.input_window_l)
        throw domain_error("backward: window length must equal input_window_l");

    const int u = ckpt.config.lstm_units;
    const int l = ckpt.config.input_window_l;
    const auto n_layers = ckpt.params.layers.size();

    // Activation memory per window: ~6 doubles per unit per step per layer.
    const double bytes_per_window =
        static_cast<double>(n_layers) * l * (6.0 * u) * sizeof(double);
    const auto chunk_max = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(chunk_budget_bytes / bytes_per_window));

    BatchGradients out;
    out.grads = ParamSet::zeros_like(ckpt.params);

    for (Eigen::Index begin = 0; begin < batch; begin += chunk_max) {
        const Eigen::Index n = std::min(chunk_max, batch - begin);

        // Forward with traces.
        std::vector<Eigen::MatrixXd> inputs(static_cast<std::size_t>(l));
        for (int t = 0; t < l; ++t) inputs[static_cast<std::size_t>(t)] = windows.block(begin, t, n, 1);

        std::vector<std::vector<Eigen::MatrixXd>> layer_inputs;
        std::vector<detail::LayerTrace> traces(n_layers);
        Eigen::MatrixXd h;
        for (std::size_t layer = 0; layer < n_layers; ++layer) {
            layer_inputs.push_back(inputs);
            h = detail::run_layer(ckpt.params.layers[layer], layer_inputs.back(), &traces[layer]);
            if (layer + 1 < n_layers) inputs = traces[layer].hiddens;
        }

        Eigen::MatrixXd raw = h * ckpt.params.dense_w.transpose();
        raw.rowwise() += ckpt.params.dense_b.transpose();

        // Mean NLL and its gradient at the head: see nll_loss. With
        // s = raw sigma output, L = s + (mu-v)^2 exp(-2s) / 2.
        const Eigen::ArrayXd mu = raw.col(0).array();
        const Eigen::ArrayXd s = raw.col(1).array();
        const Eigen::ArrayXd err = mu - targets.segment(begin, n).array();
        const Eigen::ArrayXd inv_var = (-2.0 * s).exp();
        out.loss += (s + 0.5 * err.square() * inv_var).sum();

        const double scale = 1.0 / static_cast<double>(batch);
        Eigen::MatrixXd draw(n, 2);
        draw.col(0) = (err * inv_var * scale).matrix();
        draw.col(1) = ((1.0 - err.square() * inv_var) * scale).matrix();

        out.grads.dense_w.noalias() += draw.transpose() * h;
        out.grads.dense_b += draw.colwise().sum().transpose();

        // External h-gradients for the top layer: dense head at the last
        // step only.
        std::vector<Eigen::MatrixXd> ext_dh(static_cast<std::size_t>(l),
                                            Eigen::MatrixXd::Zero(n, u));
        ext_dh.back().noalias() = draw * ckpt.params.dense_w;

        for (std::size_t layer = n_layers; layer-- > 0;) {
            ext_dh = detail::backward_layer(ckpt.params.layers[layer], layer_inputs[layer],
                                            traces[layer], ext_dh, out.grads.layers[layer]);
        }
    }
    out.loss /= static_cast<double>(batch);

    if (!out.grads.all_finite() || !std::isfinite(out.loss))
        throw numeric_error("backward: non-finite gradient");

    out.grad_norm = std::sqrt(out.grads.squared_norm());
    if (out.grad_norm > ckpt.config.grad_clip_norm) {
        const double rescale = ckpt.config.grad_clip_norm / out.grad_norm;
        out.grads.for_each([rescale](auto& t) { t *= rescale; });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

// Standard Adam with bias correction; increments the step counter.
inline void adam_step(NetworkCheckpoint& ckpt, const ParamSet& grads) {
    const auto& cfg = ckpt.config;
    ckpt.adam_step += 1;
    const double t = static_cast<double>(ckpt.adam_step);
    const double corr1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double corr2 = 1.0 - std::pow(cfg.adam_beta2, t);

    const auto update = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                            const Eigen::MatrixXd& g) {
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
        w.array() -= cfg.learning_rate * (m.array() / corr1) /
                     ((v.array() / corr2).sqrt() + cfg.adam_eps);
    };
    const auto update_vec = [&](Eigen::VectorXd& w, Eigen::VectorXd& m, Eigen::VectorXd& v,
                                const Eigen::VectorXd& g) {
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
        w.array() -= cfg.learning_rate * (m.array() / corr1) /
                     ((v.array() / corr2).sqrt() + cfg.adam_eps);
    };

    for (std::size_t i = 0; i < ckpt.params.layers.size(); ++i) {
        update(ckpt.params.layers[i].w, ckpt.adam_m.layers[i].w, ckpt.adam_v.layers[i].w,
               grads.layers[i].w);
        update(ckpt.params.layers[i].r, ckpt.adam_m.layers[i].r, ckpt.adam_v.layers[i].r,
               grads.layers[i].r);
        update_vec(ckpt.params.layers[i].b, ckpt.adam_m.layers[i].b, ckpt.adam_v.layers[i].b,
                   grads.layers[i].b);
    }
    update(ckpt.params.dense_w, ckpt.adam_m.dense_w, ckpt.adam_v.dense_w, grads.dense_w);
    update_vec(ckpt.params.dense_b, ckpt.adam_m.dense_b, ckpt.adam_v.dense_b, grads.dense_b);
}

// ---------------------------------------------------------------------------
// Serialization: little-endian binary, versioned
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) throw io_error("truncated checkpoint file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw io_error("truncated checkpoint file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void put_tensor(std::ostream& out, const Eigen::MatrixXd& m) {
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

inline Eigen::MatrixXd get_tensor(std::istream& in) {
    const auto rows = get_u32(in);
    const auto cols = get_u32(in);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = get_f64(in);
    return m;
}

inline void put_params(std::ostream& out, const ParamSet& p) {
    p.for_each([&out](const auto& t) { put_tensor(out, t); });
}

inline void get_params(std::istream& in, ParamSet& p) {
    p.for_each([&in](auto& t) {
        const Eigen::MatrixXd m = get_tensor(in);
        if (m.rows() != t.rows() || m.cols() != t.cols())
            throw format_error("checkpoint tensor shape mismatch");
        t = m;
    });
}

inline constexpr std::uint32_t kMagic = 0x4b43534d;     // "MSCK"
inline constexpr std::uint32_t kEndMagic = 0x444e4530;  // "0END"

}  // namespace detail

inline void save_checkpoint(const NetworkCheckpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write checkpoint " + path.string());

    detail::put_u32(out, detail::kMagic);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.config.lstm_layers));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.config.lstm_units));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.config.input_window_l));
    detail::put_f64(out, ckpt.config.learning_rate);
    detail::put_f64(out, ckpt.config.adam_beta1);
    detail::put_f64(out, ckpt.config.adam_beta2);
    detail::put_f64(out, ckpt.config.adam_eps);
    detail::put_f64(out, ckpt.config.grad_clip_norm);
    detail::put_u64(out, ckpt.config.seed);
    detail::put_u64(out, ckpt.epoch);
    detail::put_u64(out, ckpt.adam_step);
    detail::put_f64(out, ckpt.norm_mean);
    detail::put_f64(out, ckpt.norm_std);
    detail::put_params(out, ckpt.params);
    detail::put_params(out, ckpt.adam_m);
    detail::put_params(out, ckpt.adam_v);
    detail::put_u32(out, detail::kEndMagic);
    if (!out.good()) throw io_error("short write to checkpoint " + path.string());
}

inline NetworkCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint " + path.string());

    if (detail::get_u32(in) != detail::kMagic)
        throw format_error("not a checkpoint file: " + path.string());
    const auto version = detail::get_u32(in);
    if (version != kCheckpointVersion)
        throw format_error("checkpoint version mismatch: file has " + std::to_string(version) +
                           ", expected " + std::to_string(kCheckpointVersion));

    NetworkConfig config;
    config.lstm_layers = static_cast<int>(detail::get_u32(in));
    config.lstm_units = static_cast<int>(detail::get_u32(in));
    config.input_window_l = static_cast<int>(detail::get_u32(in));
    config.learning_rate = detail::get_f64(in);
    config.adam_beta1 = detail::get_f64(in);
    config.adam_beta2 = detail::get_f64(in);
    config.adam_eps = detail::get_f64(in);
    config.grad_clip_norm = detail::get_f64(in);
    config.seed = detail::get_u64(in);

    NetworkCheckpoint ckpt = init_checkpoint(config);
    ckpt.epoch = detail::get_u64(in);
    ckpt.adam_step = detail::get_u64(in);
    ckpt.norm_mean = detail::get_f64(in);
    ckpt.norm_std = detail::get_f64(in);
    detail::get_params(in, ckpt.params);
    detail::get_params(in, ckpt.adam_m);
    detail::get_params(in, ckpt.adam_v);
    if (detail::get_u32(in) != detail::kEndMagic)
        throw format_error("corrupt checkpoint trailer: " + path.string());

    if (!ckpt.params.all_finite() || !ckpt.adam_m.all_finite() || !ckpt.adam_v.all_finite())
        throw format_error("checkpoint contains non-finite tensors");
    return ckpt;
}

}  // namespace motorsig::net
