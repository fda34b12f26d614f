#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "motorsig/error.hpp"
#include "motorsig/network.hpp"
#include "motorsig/rng.hpp"
#include "motorsig/trajectory.hpp"

// Autoregressive motion synthesis. Each step runs the network on the current
// position window, samples a velocity from the predicted Gaussian, low-pass
// filters it, integrates to a position, and feeds that position back into the
// window.

namespace motorsig::gen {

struct GenerationConfig {
    double beta = 0.6;           // first-order filter gain
    double sample_time_ts = 0.01;  // seconds per step
    int seed_length_l = 400;     // position samples handed to the network
    double total_duration = 30.0;  // seconds, seed included
    double guard_bound = 100.0;  // cm; |p| beyond this is a divergence
    std::uint64_t rng_seed = 0;

    double sample_rate() const { return 1.0 / sample_time_ts; }

    void validate() const {
        if (!(beta > 0.0 && beta < 1.0)) throw domain_error("generation: beta must be in (0, 1)");
        if (!(sample_time_ts > 0.0)) throw domain_error("generation: sample time must be positive");
        if (seed_length_l < 1) throw domain_error("generation: seed length must be at least 1");
        if (!(total_duration > 0.0)) throw domain_error("generation: total duration must be positive");
        if (!(guard_bound > 0.0)) throw domain_error("generation: guard bound must be positive");
    }
};

// One update of the velocity smoother. With gain beta the response to a unit
// step is 1 - (1-beta)^k, so bounded inputs give bounded outputs.
inline double filter_step(double prev_filtered, double v, double beta) {
    return (1.0 - beta) * prev_filtered + beta * v;
}

// Filter state at the seed/generation boundary: the backward-difference
// velocity of the last two seed samples, so generation starts without a
// velocity transient.
inline double init_filter_state(const std::vector<double>& seed, double sample_time_ts) {
    if (seed.size() < 2) throw domain_error("filter init needs at least 2 seed samples");
    const std::size_t n = seed.size();
    return (seed[n - 1] - seed[n - 2]) / sample_time_ts;
}

// One trajectory to generate: the seed window plus identity and RNG stream.
struct SeededWindow {
    std::vector<double> seed;  // exactly l positions, cm
    std::string person_label;
    int trial_index = 1;
    std::uint64_t rng_seed = 0;
};

// Generates all windows in lockstep so the per-step network forward is one
// batched pass. Every window owns its RNG stream, so the result for a window
// does not depend on what else is in the batch.
inline std::vector<Trajectory> generate_batch(const net::NetworkCheckpoint& ckpt,
                                              const std::vector<SeededWindow>& windows,
                                              const GenerationConfig& config) {
    config.validate();
    ckpt.config.validate();
    if (windows.empty()) throw domain_error("generation: no seed windows");
    const int l = ckpt.config.input_window_l;
    if (config.seed_length_l != l)
        throw domain_error("generation: seed length does not match the network window length");
    if (!(std::isfinite(ckpt.norm_mean) && std::isfinite(ckpt.norm_std) && ckpt.norm_std > 0.0))
        throw domain_error("generation: checkpoint is missing normalization constants");

    const auto batch = static_cast<int>(windows.size());
    const auto n_total =
        static_cast<std::int64_t>(std::llround(config.total_duration * config.sample_rate()));
    if (n_total < l) throw domain_error("generation: total duration is shorter than the seed");

    Eigen::MatrixXd buffer(batch, l);
    std::vector<Rng> rngs;
    std::vector<double> filtered(batch), position(batch);
    std::vector<std::vector<double>> positions(batch);
    for (int b = 0; b < batch; ++b) {
        const auto& w = windows[b];
        if (static_cast<int>(w.seed.size()) != l)
            throw domain_error("generation: seed window has wrong length");
        for (int t = 0; t < l; ++t) buffer(b, t) = w.seed[t];
        rngs.emplace_back(w.rng_seed);
        filtered[b] = init_filter_state(w.seed, config.sample_time_ts);
        position[b] = w.seed.back();
        positions[b].reserve(static_cast<std::size_t>(n_total));
        positions[b] = w.seed;
    }

    Eigen::MatrixXd normalized(batch, l);
    for (std::int64_t step = l; step < n_total; ++step) {
        normalized = (buffer.array() - ckpt.norm_mean) / ckpt.norm_std;
        Eigen::MatrixXd out;
        try {
            out = net::forward_batch(ckpt, normalized);
        } catch (const numeric_error& e) {
            throw generation_error("generation failed at step " + std::to_string(step) + ": " +
                                   e.what());
        }
        for (int b = 0; b < batch; ++b) {
            const double mu = out(b, 0);
            const double sigma = std::max(out(b, 1), 1e-12);
            const double v = rngs[b].normal(mu, sigma);
            filtered[b] = filter_step(filtered[b], v, config.beta);
            position[b] += config.sample_time_ts * filtered[b];
            if (!(std::isfinite(filtered[b]) && std::isfinite(position[b])))
                throw generation_error("generation produced a non-finite state at step " +
                                       std::to_string(step));
            if (std::abs(position[b]) > config.guard_bound)
                throw divergence_error(
                    "generated position diverged at step " + std::to_string(step) + ": |" +
                    std::to_string(position[b]) + "| cm exceeds the guard bound of " +
                    std::to_string(config.guard_bound) + " cm");
            positions[b].push_back(position[b]);
        }
        for (int t = 0; t + 1 < l; ++t) buffer.col(t) = buffer.col(t + 1);
        for (int b = 0; b < batch; ++b) buffer(b, l - 1) = position[b];
    }

    std::vector<Trajectory> out;
    out.reserve(windows.size());
    for (int b = 0; b < batch; ++b) {
        Trajectory traj;
        traj.source = Source::generated;
        traj.person_label = windows[b].person_label;
        traj.trial_index = windows[b].trial_index;
        traj.id = make_trajectory_id(traj.source, traj.person_label, traj.trial_index);
        traj.sample_rate = config.sample_rate();
        traj.positions = std::move(positions[b]);
        traj.validate();
        out.push_back(std::move(traj));
    }
    return out;
}

inline Trajectory generate(const net::NetworkCheckpoint& ckpt, const std::vector<double>& seed,
                           const GenerationConfig& config,
                           const std::string& person_label = "model", int trial_index = 1) {
    SeededWindow w;
    w.seed = seed;
    w.person_label = person_label;
    w.trial_index = trial_index;
    w.rng_seed = config.rng_seed;
    return generate_batch(ckpt, {std::move(w)}, config).front();
}

}  // namespace motorsig::gen
