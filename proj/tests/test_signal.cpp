#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "motorsig/signal.hpp"

using motorsig::Trajectory;
using namespace motorsig::signal;

namespace {

Trajectory make_traj(std::vector<double> positions, double rate) {
    Trajectory t;
    t.id = "P:test:t1";
    t.source = motorsig::Source::human;
    t.person_label = "test";
    t.trial_index = 1;
    t.sample_rate = rate;
    t.positions = std::move(positions);
    return t;
}

Trajectory sample_fn(double (*f)(double), double rate, std::size_t n) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = f(static_cast<double>(i) / rate);
    return make_traj(std::move(p), rate);
}

// RMS-based amplitude estimate over [begin, end); valid when the window
// covers an integer number of periods.
double sine_amplitude(const std::vector<double>& x, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
    return std::sqrt(2.0 * acc / static_cast<double>(end - begin));
}

}  // namespace

TEST_CASE("spline resampling is exact on linear data") {
    std::vector<double> p(31);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i) / 10.0;
    const Trajectory out = resample_spline(make_traj(p, 10.0), 100.0);

    REQUIRE(out.sample_rate == 100.0);
    for (std::size_t j = 0; j < out.positions.size(); ++j) {
        const double t = static_cast<double>(j) / 100.0;
        REQUIRE(std::abs(out.positions[j] - t) < 1e-9);
    }
}

TEST_CASE("spline resampling sample count spans the original range") {
    const Trajectory in = sample_fn([](double t) { return std::sin(t); }, 10.0, 300);
    const Trajectory out = resample_spline(in, 100.0);
    REQUIRE(out.positions.size() == 2991);  // 29.9 s span at 100 Hz, inclusive
    // Knots reproduce the original samples (interpolating spline).
    for (std::size_t i = 0; i < in.positions.size(); ++i)
        REQUIRE(std::abs(out.positions[10 * i] - in.positions[i]) < 1e-12);
}

TEST_CASE("spline resampling tracks a 1.5 Hz sinusoid") {
    const Trajectory in =
        sample_fn([](double t) { return std::sin(2.0 * M_PI * 1.5 * t); }, 10.0, 31);
    const Trajectory out = resample_spline(in, 100.0);
    double worst = 0.0;
    for (std::size_t j = 0; j < out.positions.size(); ++j) {
        const double t = static_cast<double>(j) / 100.0;
        worst = std::max(worst, std::abs(out.positions[j] - std::sin(2.0 * M_PI * 1.5 * t)));
    }
    REQUIRE(worst < 0.02);
}

TEST_CASE("spline resampling rejects bad inputs") {
    REQUIRE_THROWS_AS(resample_spline(make_traj({1, 2, 3}, 10.0), 100.0), motorsig::domain_error);
    REQUIRE_THROWS_AS(resample_spline(make_traj({1, 2, 3, 4}, 10.0), 10.0), motorsig::domain_error);
    REQUIRE_THROWS_AS(resample_spline(make_traj({1, 2, 3, 4}, 10.0), 5.0), motorsig::domain_error);
}

TEST_CASE("butterworth passes DC unchanged") {
    const Trajectory out = butterworth_lowpass(make_traj(std::vector<double>(100, 3.0), 100.0), 6.0, 2);
    REQUIRE(out.positions.size() == 100);
    for (double v : out.positions) REQUIRE(std::abs(v - 3.0) < 1e-9);
}

TEST_CASE("butterworth gain at cutoff is -3 dB") {
    // Designed response first: prewarping puts the half-power point exactly
    // at the cutoff frequency.
    const auto sections = butterworth_sections(2, 6.0, 100.0);
    REQUIRE(std::abs(cascade_gain(sections, 6.0, 100.0) - 1.0 / std::sqrt(2.0)) < 1e-12);

    // Then the measured steady-state amplitude of a single forward pass.
    const Trajectory in =
        sample_fn([](double t) { return std::sin(2.0 * M_PI * 6.0 * t); }, 100.0, 1000);
    const std::vector<double> y = butterworth_forward(in.positions, 2, 6.0, 100.0);
    const double amp = sine_amplitude(y, 500, 1000);  // 30 whole periods
    REQUIRE(std::abs(amp - 1.0 / std::sqrt(2.0)) < 0.02);
}

TEST_CASE("zero-phase filter attenuates 20 Hz per the designed response") {
    const Trajectory in =
        sample_fn([](double t) { return std::sin(2.0 * M_PI * 20.0 * t); }, 100.0, 1000);
    const Trajectory out = butterworth_lowpass(in, 6.0, 2);
    REQUIRE(out.positions.size() == in.positions.size());

    const double amp = sine_amplitude(out.positions, 200, 800);  // 120 whole periods
    REQUIRE(amp < 0.05);

    const auto sections = butterworth_sections(2, 6.0, 100.0);
    const double g = cascade_gain(sections, 20.0, 100.0);
    REQUIRE(std::abs(amp - g * g) < 0.01);  // two passes square the magnitude
}

TEST_CASE("zero-phase filtering has no lag") {
    const Trajectory in =
        sample_fn([](double t) { return std::sin(2.0 * M_PI * 2.0 * t); }, 100.0, 400);
    const Trajectory out = butterworth_lowpass(in, 6.0, 2);

    int best_lag = 0;
    double best = -1.0;
    for (int lag = -10; lag <= 10; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 50; i < 350; ++i)
            acc += in.positions[i] * out.positions[i + static_cast<std::size_t>(lag + 10) - 10];
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    REQUIRE(std::abs(best_lag) <= 1);
}

TEST_CASE("butterworth rejects bad parameters") {
    const Trajectory in = make_traj(std::vector<double>(32, 1.0), 100.0);
    REQUIRE_THROWS_AS(butterworth_lowpass(in, 50.0, 2), motorsig::domain_error);
    REQUIRE_THROWS_AS(butterworth_lowpass(in, 60.0, 2), motorsig::domain_error);
    REQUIRE_THROWS_AS(butterworth_lowpass(in, 0.0, 2), motorsig::domain_error);
    REQUIRE_THROWS_AS(butterworth_lowpass(in, 6.0, 0), motorsig::domain_error);
    REQUIRE_THROWS_AS(butterworth_lowpass(in, 6.0, 9), motorsig::domain_error);
}

TEST_CASE("differentiate applies the backward difference with v(0)=0") {
    const auto v = differentiate(make_traj({0.0, 0.1, 0.3}, 100.0));
    REQUIRE(v.values.size() == 3);
    REQUIRE(v.values[0] == 0.0);
    REQUIRE(std::abs(v.values[1] - 10.0) < 1e-12);
    REQUIRE(std::abs(v.values[2] - 20.0) < 1e-12);
    REQUIRE(v.sample_rate == 100.0);
    REQUIRE(v.parent_id == "P:test:t1");

    const auto flat = differentiate(make_traj(std::vector<double>(50, 2.5), 100.0));
    for (double x : flat.values) REQUIRE(x == 0.0);

    REQUIRE_THROWS_AS(differentiate(make_traj({1.0}, 100.0)), motorsig::domain_error);
}

TEST_CASE("differentiate approximates the analytic derivative") {
    const Trajectory in =
        sample_fn([](double t) { return std::sin(2.0 * M_PI * t); }, 100.0, 301);
    const auto v = differentiate(in);
    double worst = 0.0;
    for (std::size_t t = 1; t < v.values.size(); ++t) {
        const double truth = 2.0 * M_PI * std::cos(2.0 * M_PI * static_cast<double>(t) / 100.0);
        worst = std::max(worst, std::abs(v.values[t] - truth));
    }
    REQUIRE(worst < 0.2);
}

TEST_CASE("amplitude envelopes of a flat signal are zero") {
    // p == 0 never satisfies p > 0 / p < 0, so neither envelope ever latches.
    const auto r = amplitude_envelopes(make_traj(std::vector<double>(100, 0.0), 100.0));
    for (double x : r.positive) REQUIRE(x == 0.0);
    for (double x : r.negative) REQUIRE(x == 0.0);
    REQUIRE(r.summary.mean_positive == 0.0);
    REQUIRE(r.summary.mean_negative == 0.0);
}

TEST_CASE("amplitude envelopes latch sinusoid extrema") {
    // First peak at 0.25 s, first trough at 0.75 s; over 3 s the envelopes
    // hold +/-1 for 2.75/3 and 2.25/3 of the time.
    const Trajectory in =
        sample_fn([](double t) { return std::sin(2.0 * M_PI * t); }, 100.0, 301);
    const auto r = amplitude_envelopes(in);

    REQUIRE(std::abs(r.summary.mean_positive - 0.917) < 0.02);
    REQUIRE(std::abs(r.summary.mean_negative - (-0.750)) < 0.02);

    for (std::size_t t = 0; t < r.positive.size(); ++t) {
        REQUIRE(r.positive[t] >= 0.0);
        REQUIRE(r.negative[t] <= 0.0);
        if (t > 0) {
            // Piecewise constant: each step holds or jumps to the current sample.
            const bool pos_ok = r.positive[t] == r.positive[t - 1] || r.positive[t] == in.positions[t];
            const bool neg_ok = r.negative[t] == r.negative[t - 1] || r.negative[t] == in.positions[t];
            REQUIRE(pos_ok);
            REQUIRE(neg_ok);
        }
    }
}

TEST_CASE("preprocessing chain is bit-deterministic") {
    const Trajectory in = sample_fn(
        [](double t) { return 4.0 * std::sin(2.0 * M_PI * 0.8 * t) + 0.3 * std::sin(2.0 * M_PI * 9.0 * t); },
        50.0, 200);
    const Trajectory a = butterworth_lowpass(resample_spline(in, 100.0), 6.0, 2);
    const Trajectory b = butterworth_lowpass(resample_spline(in, 100.0), 6.0, 2);
    REQUIRE(a.positions.size() == b.positions.size());
    REQUIRE(std::memcmp(a.positions.data(), b.positions.data(),
                        a.positions.size() * sizeof(double)) == 0);
    // First element of any differentiated series is pinned to zero.
    REQUIRE(differentiate(a).values[0] == 0.0);
}
