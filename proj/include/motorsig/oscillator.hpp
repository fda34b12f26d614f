#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "motorsig/error.hpp"
#include "motorsig/rng.hpp"
#include "motorsig/signal.hpp"
#include "motorsig/similarity.hpp"
#include "motorsig/trajectory.hpp"

namespace motorsig::oscillator {

// Fixed-frequency linear oscillator p(t) = A sin(omega t).
struct OscillatorParams {
    double amplitude_a = 0.0;  // cm
    double omega = 0.0;        // rad/s, the concrete per-oscillator frequency
    double omega_mean = 0.0;   // rad/s, per-person draw distribution
    double omega_std = 0.0;
    std::uint64_t seed = 0;

    double period() const { return 2.0 * M_PI / omega; }

    void validate() const {
        if (!(amplitude_a > 0.0)) throw domain_error("oscillator: amplitude must be > 0");
        if (!(omega > 0.0)) throw domain_error("oscillator: omega must be > 0");
    }
};

// Sign changes of the position series; samples sitting exactly on zero
// extend the previous sign.
inline int zero_crossing_count(const std::vector<double>& p) {
    int count = 0;
    int last_sign = 0;
    for (double x : p) {
        const int s = x > 0.0 ? 1 : (x < 0.0 ? -1 : 0);
        if (s == 0) continue;
        if (last_sign != 0 && s != last_sign) ++count;
        last_sign = s;
    }
    return count;
}

inline double amplitude_from_means(double mean_positive_avg, double mean_negative_avg) {
    return (mean_positive_avg + std::abs(mean_negative_avg)) / 2.0;
}

struct OscillatorFit {
    double amplitude_a = 0.0;
    double omega_mean = 0.0;
    double omega_std = 0.0;
    std::vector<std::string> warnings;  // one per excluded trial
};

// Parametrize the baseline from one person's trials: A from the mean
// amplitude envelopes, omega statistics from per-trial zero-crossing rates.
// Trials with fewer than 2 crossings cannot support a frequency estimate
// and are excluded wholesale.
inline OscillatorFit fit_params(const std::vector<Trajectory>& trials) {
    if (trials.size() < 2) throw domain_error("oscillator fit: need at least 2 trials");

    OscillatorFit fit;
    double sum_pos = 0.0, sum_neg = 0.0;
    std::vector<double> omegas;
    for (const auto& t : trials) {
        const int crossings = zero_crossing_count(t.positions);
        if (crossings < 2) {
            fit.warnings.push_back("trial '" + t.id + "' excluded from oscillator fit: only " +
                                   std::to_string(crossings) + " zero crossings");
            continue;
        }
        const auto env = signal::amplitude_envelopes(t);
        sum_pos += env.summary.mean_positive;
        sum_neg += env.summary.mean_negative;
        omegas.push_back(2.0 * M_PI * static_cast<double>(crossings) / (2.0 * t.duration()));
    }
    if (omegas.empty()) throw domain_error("oscillator fit: every trial lacks zero crossings");

    const auto m = static_cast<double>(omegas.size());
    fit.amplitude_a = amplitude_from_means(sum_pos / m, sum_neg / m);
    double mean = 0.0;
    for (double w : omegas) mean += w;
    mean /= m;
    fit.omega_mean = mean;
    if (omegas.size() > 1) {
        double acc = 0.0;
        for (double w : omegas) acc += (w - mean) * (w - mean);
        fit.omega_std = std::sqrt(acc / (m - 1.0));
    }
    return fit;
}

struct GeneratedOscillation {
    Trajectory traj;
    double omega = 0.0;  // the value actually drawn
};

// Sample p(t) = A sin(omega t) at t = i/rate, with omega drawn once from
// Normal(omega_mean, omega_std) using the params seed.
inline GeneratedOscillation generate(const OscillatorParams& params, double duration, double rate,
                                     const std::string& person_label, int trial_index) {
    if (!(duration > 0.0) || !(rate > 0.0))
        throw domain_error("oscillator generate: duration and rate must be > 0");
    if (!(params.amplitude_a > 0.0)) throw domain_error("oscillator generate: amplitude must be > 0");

    Rng rng(params.seed);
    double omega = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
        omega = rng.normal(params.omega_mean, params.omega_std);
        if (omega > 0.0) {
            ok = true;
            break;
        }
    }
    if (!ok) throw domain_error("oscillator generate: could not draw a positive frequency");

    GeneratedOscillation out;
    out.omega = omega;
    out.traj.source = Source::oscillator;
    out.traj.person_label = person_label;
    out.traj.trial_index = trial_index;
    out.traj.id = make_trajectory_id(Source::oscillator, person_label, trial_index);
    out.traj.sample_rate = rate;
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));
    out.traj.positions.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        out.traj.positions[i] = params.amplitude_a * std::sin(omega * static_cast<double>(i) / rate);
    return out;
}

// Velocity density of the oscillator: V = A omega cos(phase) with uniform
// phase, so f_V(v) = 1 / (pi sqrt((A omega)^2 - v^2)) on (-A omega, A omega).
inline double velocity_pdf(const OscillatorParams& params, double v) {
    params.validate();
    const double peak = params.amplitude_a * params.omega;
    if (!(std::abs(v) < peak))
        throw domain_error("oscillator velocity_pdf: |v| must be below A*omega");
    return 1.0 / (M_PI * std::sqrt(peak * peak - v * v));
}

// Exact bin masses of the velocity density on the fixed profile grid, via
// the arcsin antiderivative; mass outside the grid is clamped into the edge
// bins so the total stays 1.
inline similarity::VelocityProfile binned_pdf(const OscillatorParams& params) {
    params.validate();
    const double peak = params.amplitude_a * params.omega;

    // CDF extended to the whole line.
    const auto cdf = [peak](double v) {
        if (v <= -peak) return 0.0;
        if (v >= peak) return 1.0;
        return std::asin(v / peak) / M_PI + 0.5;
    };

    constexpr int bins = similarity::kProfileBins;
    const double w = similarity::profile_bin_width();
    double edge_cdf[bins + 1];
    for (int k = 0; k <= bins; ++k)
        edge_cdf[k] = cdf(similarity::kProfileMin + static_cast<double>(k) * w);

    similarity::VelocityProfile p;
    for (int k = 0; k < bins; ++k)
        p.mass[static_cast<std::size_t>(k)] = edge_cdf[k + 1] - edge_cdf[k];
    p.mass[0] += edge_cdf[0];            // mass below the grid
    p.mass[bins - 1] += 1.0 - edge_cdf[bins];  // mass above the grid
    return p;
}

}  // namespace motorsig::oscillator
