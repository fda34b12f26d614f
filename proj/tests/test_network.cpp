#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "motorsig/network.hpp"
#include "motorsig/rng.hpp"
#include "oracles.hpp"

using namespace motorsig;
using namespace motorsig::net;
namespace fs = std::filesystem;

namespace {

NetworkConfig tiny_config(std::uint64_t seed) {
    NetworkConfig c;
    c.input_window_l = 10;
    c.lstm_units = 3;
    c.lstm_layers = 2;
    c.grad_clip_norm = 1e9;  // keep the finite-difference comparison unclipped
    c.seed = seed;
    return c;
}

void random_batch(Rng& rng, int batch, int l, Eigen::MatrixXd& windows, Eigen::VectorXd& targets) {
    windows.resize(batch, l);
    targets.resize(batch);
    for (int i = 0; i < batch; ++i) {
        for (int t = 0; t < l; ++t) windows(i, t) = rng.normal();
        targets(i) = rng.normal(0.0, 2.0);
    }
}

NetworkCheckpoint zeroed_checkpoint(const NetworkConfig& cfg) {
    NetworkCheckpoint ckpt = init_checkpoint(cfg);
    ckpt.params.for_each([](auto& t) { t.setZero(); });
    return ckpt;
}

bool params_identical(const ParamSet& a, const ParamSet& b) {
    bool same = true;
    std::vector<std::pair<const double*, Eigen::Index>> sa, sb;
    a.for_each([&sa](const auto& t) { sa.emplace_back(t.data(), t.size()); });
    b.for_each([&sb](const auto& t) { sb.emplace_back(t.data(), t.size()); });
    for (std::size_t s = 0; s < sa.size(); ++s)
        for (Eigen::Index k = 0; k < sa[s].second; ++k)
            same = same && sa[s].first[k] == sb[s].first[k];
    return same;
}

}  // namespace

TEST_CASE("zero network predicts the unit gaussian") {
    const auto ckpt = zeroed_checkpoint(tiny_config(1));
    const auto pred = forward(ckpt, std::vector<double>(10, 0.37));
    REQUIRE(pred.mu_hat == 0.0);
    REQUIRE(pred.sigma_hat == 1.0);
}

TEST_CASE("dense bias passes through an otherwise zero network") {
    auto ckpt = zeroed_checkpoint(tiny_config(1));
    ckpt.params.dense_b << 0.7, -0.3;
    for (double fill : {-2.0, 0.0, 5.0}) {
        const auto pred = forward(ckpt, std::vector<double>(10, fill));
        REQUIRE(pred.mu_hat == 0.7);
        REQUIRE(std::abs(pred.sigma_hat - std::exp(-0.3)) < 1e-15);
    }
}

TEST_CASE("forward is deterministic and finite on shifted windows") {
    const auto ckpt = init_checkpoint(tiny_config(3));
    Rng rng(99);
    std::vector<double> window(10);
    for (double& x : window) x = rng.normal();

    const auto a = forward(ckpt, window);
    const auto b = forward(ckpt, window);
    REQUIRE(a.mu_hat == b.mu_hat);
    REQUIRE(a.sigma_hat == b.sigma_hat);
    REQUIRE(a.sigma_hat > 0.0);

    auto shifted = window;
    shifted.erase(shifted.begin());
    shifted.push_back(rng.normal());
    const auto c = forward(ckpt, shifted);
    REQUIRE(std::isfinite(c.mu_hat));
    REQUIRE(std::isfinite(c.sigma_hat));

    REQUIRE_THROWS_AS(forward(ckpt, std::vector<double>(9, 0.0)), domain_error);
}

TEST_CASE("nll loss hand values") {
    REQUIRE(nll_loss({2.0, 1.0}, 2.0) == 0.0);
    REQUIRE(std::abs(nll_loss({2.0, std::exp(1.0)}, 2.0) - 1.0) < 1e-15);
    REQUIRE(std::abs(nll_loss({0.0, 1.0}, 1.0) - 0.5) < 1e-15);
    REQUIRE(std::isfinite(nll_loss({0.0, 1e-30}, 1e-31)));
}

TEST_CASE("bptt matches central finite differences") {
    double worst = 0.0;
    for (std::uint64_t seed : {11u, 12u}) {
        auto ckpt = init_checkpoint(tiny_config(seed));
        Eigen::MatrixXd windows;
        Eigen::VectorXd targets;
        Rng rng(seed * 1000 + 1);
        random_batch(rng, 4, 10, windows, targets);

        const auto analytic = backward(ckpt, windows, targets);
        const auto numeric = oracles::fd_gradients(ckpt, windows, targets, 1e-5);
        worst = std::max(worst, oracles::max_relative_error(analytic.grads, numeric));
    }
    INFO("max relative gradient error " << worst);
    REQUIRE(worst < 1e-4);
}

TEST_CASE("head gradients match the hand-derived formulas") {
    // Zero network, zero target: dL/db_mu = 0 and dL/db_s = 1 - v^2 = 1.
    const auto zero = zeroed_checkpoint(tiny_config(5));
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(1, 10, 0.2);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(1);
    const auto g0 = backward(zero, w, v);
    REQUIRE(std::abs(g0.grads.dense_b(0)) < 1e-15);
    REQUIRE(std::abs(g0.grads.dense_b(1) - 1.0) < 1e-15);

    // Random network: dL/db_mu = mean((mu - v) / sigma^2).
    const auto ckpt = init_checkpoint(tiny_config(6));
    Eigen::MatrixXd windows;
    Eigen::VectorXd targets;
    Rng rng(61);
    random_batch(rng, 5, 10, windows, targets);
    const auto g = backward(ckpt, windows, targets);
    const Eigen::MatrixXd out = forward_batch(ckpt, windows);
    double expect = 0.0;
    for (int i = 0; i < 5; ++i)
        expect += (out(i, 0) - targets(i)) / (out(i, 1) * out(i, 1));
    expect /= 5.0;
    REQUIRE(std::abs(g.grads.dense_b(0) - expect) < 1e-12);
}

TEST_CASE("gradient clipping rescales to the configured global norm") {
    auto cfg = tiny_config(7);
    cfg.grad_clip_norm = 1e-3;  // force clipping
    const auto ckpt = init_checkpoint(cfg);
    Eigen::MatrixXd windows;
    Eigen::VectorXd targets;
    Rng rng(71);
    random_batch(rng, 4, 10, windows, targets);

    const auto g = backward(ckpt, windows, targets);
    REQUIRE(g.grad_norm > cfg.grad_clip_norm);  // reported norm is pre-clip
    REQUIRE(std::abs(std::sqrt(g.grads.squared_norm()) - cfg.grad_clip_norm) < 1e-12);
}

TEST_CASE("chunked and single-pass backward agree") {
    const auto ckpt = init_checkpoint(tiny_config(8));
    Eigen::MatrixXd windows;
    Eigen::VectorXd targets;
    Rng rng(81);
    random_batch(rng, 32, 10, windows, targets);

    const auto whole = backward(ckpt, windows, targets);
    const auto chunked = backward(ckpt, windows, targets, /*chunk_budget_bytes=*/4096);
    REQUIRE(std::abs(whole.loss - chunked.loss) < 1e-12);
    REQUIRE(oracles::max_relative_error(whole.grads, chunked.grads) < 1e-10);
}

TEST_CASE("adam first step moves by about the learning rate") {
    auto ckpt = zeroed_checkpoint(tiny_config(9));
    auto grads = ParamSet::zeros_like(ckpt.params);
    grads.dense_b(0) = 0.25;  // constant scalar gradient

    adam_step(ckpt, grads);
    REQUIRE(ckpt.adam_step == 1);
    REQUIRE(std::abs(ckpt.params.dense_b(0) + ckpt.config.learning_rate) < 1e-9);

    // Everything with zero gradient stays put.
    REQUIRE(ckpt.params.dense_b(1) == 0.0);
    REQUIRE(ckpt.params.layers[0].w.isZero(0.0));
}

TEST_CASE("zero gradient leaves a fresh checkpoint unchanged") {
    auto ckpt = init_checkpoint(tiny_config(10));
    const auto before = ckpt.params;
    adam_step(ckpt, ParamSet::zeros_like(ckpt.params));
    REQUIRE(ckpt.adam_step == 1);
    REQUIRE(params_identical(before, ckpt.params));
}

TEST_CASE("training steps are bit-deterministic") {
    Eigen::MatrixXd windows;
    Eigen::VectorXd targets;
    Rng rng(111);
    random_batch(rng, 8, 10, windows, targets);

    const auto run = [&]() {
        auto ckpt = init_checkpoint(tiny_config(12));
        for (int step = 0; step < 10; ++step) adam_step(ckpt, backward(ckpt, windows, targets).grads);
        return ckpt;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(params_identical(a.params, b.params));
    REQUIRE(params_identical(a.adam_m, b.adam_m));
    REQUIRE(params_identical(a.adam_v, b.adam_v));
}

TEST_CASE("loss decreases over the first 50 adam steps") {
    auto ckpt = init_checkpoint(tiny_config(13));
    Eigen::MatrixXd windows;
    Eigen::VectorXd targets;
    Rng rng(131);
    random_batch(rng, 16, 10, windows, targets);
    targets.setConstant(0.5);  // clean, learnable signal

    double prev = oracles::batch_nll(ckpt, windows, targets);
    for (int step = 0; step < 50; ++step) {
        adam_step(ckpt, backward(ckpt, windows, targets).grads);
        const double now = oracles::batch_nll(ckpt, windows, targets);
        REQUIRE(now < prev);
        prev = now;
    }
}

TEST_CASE("checkpoint save/load is a bit-exact round trip") {
    const fs::path path = fs::temp_directory_path() / "motorsig_ckpt_roundtrip.bin";
    auto ckpt = init_checkpoint(tiny_config(14));
    Eigen::MatrixXd windows;
    Eigen::VectorXd targets;
    Rng rng(141);
    random_batch(rng, 4, 10, windows, targets);
    for (int step = 0; step < 3; ++step) adam_step(ckpt, backward(ckpt, windows, targets).grads);
    ckpt.epoch = 300;
    ckpt.norm_mean = -0.125;
    ckpt.norm_std = 3.5;

    save_checkpoint(ckpt, path);
    const auto back = load_checkpoint(path);
    REQUIRE(back.epoch == ckpt.epoch);
    REQUIRE(back.adam_step == ckpt.adam_step);
    REQUIRE(back.norm_mean == ckpt.norm_mean);
    REQUIRE(back.norm_std == ckpt.norm_std);
    REQUIRE(back.config.seed == ckpt.config.seed);
    REQUIRE(back.config.learning_rate == ckpt.config.learning_rate);
    REQUIRE(params_identical(back.params, ckpt.params));
    REQUIRE(params_identical(back.adam_m, ckpt.adam_m));
    REQUIRE(params_identical(back.adam_v, ckpt.adam_v));
}

TEST_CASE("checkpoint loader rejects damaged files") {
    const fs::path dir = fs::temp_directory_path();
    const fs::path good = dir / "motorsig_ckpt_good.bin";
    save_checkpoint(init_checkpoint(tiny_config(15)), good);

    SECTION("wrong version") {
        const fs::path bad = dir / "motorsig_ckpt_badver.bin";
        fs::copy_file(good, bad, fs::copy_options::overwrite_existing);
        std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char v99[4] = {99, 0, 0, 0};
        f.write(v99, 4);
        f.close();
        REQUIRE_THROWS_AS(load_checkpoint(bad), format_error);
    }
    SECTION("truncation") {
        const fs::path bad = dir / "motorsig_ckpt_trunc.bin";
        fs::copy_file(good, bad, fs::copy_options::overwrite_existing);
        fs::resize_file(bad, fs::file_size(bad) / 2);
        REQUIRE_THROWS_AS(load_checkpoint(bad), io_error);
    }
    SECTION("not a checkpoint") {
        const fs::path bad = dir / "motorsig_ckpt_garbage.bin";
        std::ofstream f(bad, std::ios::binary);
        f << "definitely not binary weights";
        f.close();
        REQUIRE_THROWS_AS(load_checkpoint(bad), format_error);
    }
}
