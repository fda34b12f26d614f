#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "motorsig/error.hpp"
#include "motorsig/trajectory.hpp"

namespace motorsig::signal {

// ---------------------------------------------------------------------------
// Cubic spline resampling
// ---------------------------------------------------------------------------

namespace detail {

// Natural cubic spline second derivatives on a uniform grid of spacing h.
inline std::vector<double> spline_second_derivatives(const std::vector<double>& y, double h) {
    const std::size_t n = y.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;

    // Thomas algorithm on the interior tridiagonal system
    //   m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2
    const std::size_t k = n - 2;
    std::vector<double> diag(k, 4.0), rhs(k);
    for (std::size_t i = 0; i < k; ++i)
        rhs[i] = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (h * h);
    for (std::size_t i = 1; i < k; ++i) {
        const double w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;)
        m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
    return m;
}

inline double spline_eval(const std::vector<double>& y, const std::vector<double>& m,
                          double h, double t) {
    const std::size_t n = y.size();
    double fi = std::floor(t / h);
    fi = std::clamp(fi, 0.0, static_cast<double>(n - 2));
    const auto i = static_cast<std::size_t>(fi);
    const double s = t - fi * h;
    const double a = (m[i + 1] - m[i]) / (6.0 * h);
    const double b = m[i] / 2.0;
    const double c = (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
    return y[i] + s * (c + s * (b + s * a));
}

}  // namespace detail

// Interpolating natural cubic spline evaluated on the uniform target grid
// spanning the original time range. Knot instants reproduce the original
// samples exactly.
inline Trajectory resample_spline(const Trajectory& traj, double target_rate) {
    traj.validate();
    if (traj.positions.size() < 4)
        throw domain_error("resample_spline: need at least 4 samples, got " +
                           std::to_string(traj.positions.size()));
    if (!(target_rate > traj.sample_rate))
        throw domain_error("resample_spline: target rate must exceed source rate");

    const std::size_t n = traj.positions.size();
    const double h = 1.0 / traj.sample_rate;
    const double span = static_cast<double>(n - 1) * h;
    const auto count = static_cast<std::size_t>(
        std::llround(span * target_rate)) + 1;

    const std::vector<double> m = detail::spline_second_derivatives(traj.positions, h);

    Trajectory out = traj;
    out.sample_rate = target_rate;
    out.positions.assign(count, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
        const double t = std::min(static_cast<double>(j) / target_rate, span);
        out.positions[j] = detail::spline_eval(traj.positions, m, h, t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Butterworth low-pass
// ---------------------------------------------------------------------------

// Second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
};

// Discrete Butterworth low-pass as cascaded biquads, designed by the
// bilinear transform with frequency prewarping. Unit gain at DC.
inline std::vector<Biquad> butterworth_sections(int order, double cutoff_hz, double sample_rate) {
    if (order < 1 || order > 8)
        throw domain_error("butterworth: order must be in 1..8");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0))
        throw domain_error("butterworth: cutoff must lie in (0, rate/2)");

    const double warped = std::tan(M_PI * cutoff_hz / sample_rate);
    std::vector<Biquad> sections;

    // Conjugate analog pole pairs of the prototype, scaled to the warped
    // cutoff, then mapped through z = (1 + s) / (1 - s).
    for (int k = 1; 2 * k <= order; ++k) {
        const double theta = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
        const std::complex<double> s = warped * std::polar(1.0, theta);
        const std::complex<double> p = (1.0 + s) / (1.0 - s);
        Biquad sec;
        sec.a1 = -2.0 * p.real();
        sec.a2 = std::norm(p);
        const double gain = (1.0 + sec.a1 + sec.a2) / 4.0;
        sec.b0 = gain;
        sec.b1 = 2.0 * gain;
        sec.b2 = gain;
        sections.push_back(sec);
    }
    if (order % 2 == 1) {
        const double p = (1.0 - warped) / (1.0 + warped);
        Biquad sec;
        sec.a1 = -p;
        sec.b0 = (1.0 - p) / 2.0;
        sec.b1 = sec.b0;
        sections.push_back(sec);
    }
    return sections;
}

// Complex frequency response of a section cascade at frequency f.
inline double cascade_gain(const std::vector<Biquad>& sections, double freq_hz, double sample_rate) {
    const std::complex<double> z = std::polar(1.0, -2.0 * M_PI * freq_hz / sample_rate);
    std::complex<double> h = 1.0;
    for (const auto& s : sections) {
        h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
    }
    return std::abs(h);
}

namespace detail {

// One causal pass of a section over the signal, transposed direct form II.
// State starts at the constant-input steady state for x[0], so a constant
// signal passes through without transient.
inline void filter_section_inplace(const Biquad& s, std::vector<double>& x) {
    if (x.empty()) return;
    const double x0 = x.front();
    // Steady state for constant input (unit DC gain per section): y == x0.
    double s2 = (s.b2 - s.a2) * x0;
    double s1 = (s.b1 - s.a1) * x0 + s2;
    for (double& v : x) {
        const double in = v;
        const double out = s.b0 * in + s1;
        s1 = s.b1 * in - s.a1 * out + s2;
        s2 = s.b2 * in - s.a2 * out;
        v = out;
    }
}

inline void filter_cascade_inplace(const std::vector<Biquad>& sections, std::vector<double>& x) {
    for (const auto& s : sections) filter_section_inplace(s, x);
}

}  // namespace detail

// Single causal (forward-only) pass; used for transfer-function checks.
inline std::vector<double> butterworth_forward(const std::vector<double>& x,
                                               int order, double cutoff_hz, double sample_rate) {
    auto sections = butterworth_sections(order, cutoff_hz, sample_rate);
    std::vector<double> y = x;
    detail::filter_cascade_inplace(sections, y);
    return y;
}

// Zero-phase low-pass: forward pass, then the reversed pass, over an input
// extended by odd reflection (3 * order samples per side, trimmed after).
inline Trajectory butterworth_lowpass(const Trajectory& traj, double cutoff_hz, int order) {
    traj.validate();
    const auto sections = butterworth_sections(order, cutoff_hz, traj.sample_rate);

    const std::size_t n = traj.positions.size();
    const std::size_t pad = std::min<std::size_t>(3 * static_cast<std::size_t>(order), n - 1);

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i)
        ext.push_back(2.0 * traj.positions.front() - traj.positions[i]);
    ext.insert(ext.end(), traj.positions.begin(), traj.positions.end());
    for (std::size_t i = 1; i <= pad; ++i)
        ext.push_back(2.0 * traj.positions.back() - traj.positions[n - 1 - i]);

    detail::filter_cascade_inplace(sections, ext);
    std::reverse(ext.begin(), ext.end());
    detail::filter_cascade_inplace(sections, ext);
    std::reverse(ext.begin(), ext.end());

    Trajectory out = traj;
    out.positions.assign(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                         ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
    return out;
}

// ---------------------------------------------------------------------------
// Velocity and amplitude envelopes
// ---------------------------------------------------------------------------

// v(t) = (p(t) - p(t-1)) * rate, with v(0) = 0.
inline VelocitySeries differentiate(const Trajectory& traj) {
    traj.validate();
    if (traj.positions.size() < 2)
        throw domain_error("differentiate: need at least 2 samples");
    VelocitySeries v;
    v.sample_rate = traj.sample_rate;
    v.parent_id = traj.id;
    v.values.assign(traj.positions.size(), 0.0);
    for (std::size_t t = 1; t < traj.positions.size(); ++t)
        v.values[t] = (traj.positions[t] - traj.positions[t - 1]) * traj.sample_rate;
    return v;
}

struct EnvelopeResult {
    std::vector<double> positive;  // A+(t), >= 0
    std::vector<double> negative;  // A-(t), <= 0
    AmplitudeSummary summary;
};

// Sample-and-hold envelopes: A+ latches p(t) at downward velocity sign
// changes with p(t) > 0, A- dually. Both start at 0. The summary averages
// each envelope over the whole time domain.
inline EnvelopeResult amplitude_envelopes(const Trajectory& traj) {
    traj.validate();
    if (traj.positions.size() < 2)
        throw domain_error("amplitude_envelopes: need at least 2 samples");

    const VelocitySeries vel = differentiate(traj);
    const auto& p = traj.positions;
    const auto& v = vel.values;
    const std::size_t n = p.size();

    EnvelopeResult r;
    r.positive.assign(n, 0.0);
    r.negative.assign(n, 0.0);
    double sum_pos = 0.0, sum_neg = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
        r.positive[t] = (v[t] <= 0.0 && v[t - 1] > 0.0 && p[t] > 0.0) ? p[t] : r.positive[t - 1];
        r.negative[t] = (v[t] >= 0.0 && v[t - 1] < 0.0 && p[t] < 0.0) ? p[t] : r.negative[t - 1];
        sum_pos += r.positive[t];
        sum_neg += r.negative[t];
    }
    r.summary.mean_positive = sum_pos / static_cast<double>(n);
    r.summary.mean_negative = sum_neg / static_cast<double>(n);
    return r;
}

}  // namespace motorsig::signal
