#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "motorsig/error.hpp"
#include "motorsig/signal.hpp"
#include "motorsig/trajectory.hpp"

namespace motorsig::similarity {

// ---------------------------------------------------------------------------
// Velocity-profile PMFs and earth mover's distance
// ---------------------------------------------------------------------------

inline constexpr int kProfileBins = 101;
inline constexpr double kProfileMin = -30.0;  // cm/s
inline constexpr double kProfileMax = 30.0;

inline constexpr double profile_bin_width() {
    return (kProfileMax - kProfileMin) / kProfileBins;
}

// PMF over the fixed velocity grid: 101 equal bins on [-30, 30] cm/s,
// centers symmetric about 0 (bin 50 is centered at zero).
struct VelocityProfile {
    std::array<double, kProfileBins> mass{};

    static double bin_center(int i) {
        return kProfileMin + (static_cast<double>(i) + 0.5) * profile_bin_width();
    }

    void validate() const {
        double total = 0.0;
        for (double m : mass) {
            if (!(m >= 0.0)) throw domain_error("velocity profile: negative or NaN mass");
            total += m;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw domain_error("velocity profile: mass sums to " + std::to_string(total));
    }
};

// Out-of-range samples are clamped into the corresponding edge bin so the
// total mass stays 1.
inline VelocityProfile velocity_profile(const VelocitySeries& v) {
    if (v.values.empty()) throw domain_error("velocity_profile: empty series");
    VelocityProfile p;
    const double w = profile_bin_width();
    for (double x : v.values) {
        int i = static_cast<int>(std::floor((x - kProfileMin) / w));
        i = std::clamp(i, 0, kProfileBins - 1);
        p.mass[static_cast<std::size_t>(i)] += 1.0;
    }
    for (double& m : p.mass) m /= static_cast<double>(v.values.size());
    return p;
}

// 1-Wasserstein distance on the shared grid, in bin units: the sum over
// bins of |CDF1 - CDF2|.
inline double emd(const VelocityProfile& a, const VelocityProfile& b) {
    a.validate();
    b.validate();
    double cum = 0.0, total = 0.0;
    for (int i = 0; i < kProfileBins; ++i) {
        cum += a.mass[static_cast<std::size_t>(i)] - b.mass[static_cast<std::size_t>(i)];
        total += std::abs(cum);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Classical metric MDS
// ---------------------------------------------------------------------------

enum class Plane { velocity_profile, amplitude };

struct EmbeddedPoint {
    std::array<double, 2> coords{};
    std::string source_label;
    int trial_index = 0;
    Plane plane = Plane::velocity_profile;
};

// Double-center -D^2/2, keep the two largest eigenpairs (negative
// eigenvalues truncate to zero length), and fix the reflection ambiguity by
// making each coordinate column's largest-magnitude entry positive.
inline std::vector<std::array<double, 2>> mds_embed(const Eigen::MatrixXd& dist) {
    const Eigen::Index n = dist.rows();
    if (dist.cols() != n || n < 1) throw domain_error("mds_embed: matrix must be square");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (dist(i, i) != 0.0) throw domain_error("mds_embed: diagonal must be zero");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!(dist(i, j) >= 0.0)) throw domain_error("mds_embed: negative distance");
            if (std::abs(dist(i, j) - dist(j, i)) > 1e-9)
                throw domain_error("mds_embed: matrix not symmetric");
        }
    }

    const Eigen::MatrixXd d2 = dist.array().square();
    const Eigen::MatrixXd j_center =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::MatrixXd b = -0.5 * j_center * d2 * j_center;
    b = 0.5 * (b + b.transpose().eval());  // keep the solver's symmetry assumption exact

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success) throw numeric_error("mds_embed: eigendecomposition failed");

    std::vector<std::array<double, 2>> coords(static_cast<std::size_t>(n), {0.0, 0.0});
    for (int k = 0; k < 2; ++k) {
        const Eigen::Index idx = n - 1 - k;
        if (idx < 0) continue;
        const double lambda = es.eigenvalues()(idx);
        if (lambda <= 0.0) continue;
        Eigen::VectorXd col = std::sqrt(lambda) * es.eigenvectors().col(idx);
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0.0) col = -col;
        for (Eigen::Index i = 0; i < n; ++i)
            coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = col(i);
    }
    return coords;
}

// Sum over the eigenvalues beyond the first two that classical MDS keeps;
// scaled by n this accounts for the aggregate squared-distance shortfall.
inline double mds_truncated_spectrum(const Eigen::MatrixXd& dist) {
    const Eigen::Index n = dist.rows();
    const Eigen::MatrixXd d2 = dist.array().square();
    const Eigen::MatrixXd j_center =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::MatrixXd b = -0.5 * j_center * d2 * j_center;
    b = 0.5 * (b + b.transpose().eval());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    double acc = 0.0;
    for (Eigen::Index k = 0; k + 2 < n; ++k) acc += std::max(es.eigenvalues()(k), 0.0);
    return acc;
}

// The two mean-amplitude coordinates of a trajectory.
inline EmbeddedPoint amplitude_coords(const Trajectory& traj) {
    const auto env = signal::amplitude_envelopes(traj);
    EmbeddedPoint p;
    p.coords = {env.summary.mean_positive, env.summary.mean_negative};
    p.source_label = traj.person_label;
    p.trial_index = traj.trial_index;
    p.plane = Plane::amplitude;
    return p;
}

// ---------------------------------------------------------------------------
// Covariance ellipses
// ---------------------------------------------------------------------------

struct CovarianceEllipse {
    std::array<double, 2> center{};
    std::array<double, 2> semi_axes{};  // major, minor
    double orientation = 0.0;           // radians, in (-pi/2, pi/2]
    double radius_r = 0.0;
    bool degenerate = false;  // an eigenvalue hit the 1e-12 floor
};

// Scale factor R such that the R-sigma ellipse of a bivariate Gaussian
// encloses `mass` probability: R = sqrt(-2 ln(1 - mass)).
inline double ellipse_radius(double mass) {
    if (!(mass > 0.0) || !(mass < 1.0)) throw domain_error("ellipse mass must be in (0,1)");
    return std::sqrt(-2.0 * std::log1p(-mass));
}

inline CovarianceEllipse fit_ellipse(const std::vector<EmbeddedPoint>& points, double mass = 0.7) {
    const std::size_t n = points.size();
    if (n < 3) throw domain_error("fit_ellipse: need at least 3 points");

    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.coords[0];
        my += p.coords[1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.coords[0] - mx, dy = p.coords[1] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const double denom = static_cast<double>(n - 1);  // unbiased
    Eigen::Matrix2d cov;
    cov << sxx / denom, sxy / denom, sxy / denom, syy / denom;

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);

    CovarianceEllipse e;
    e.center = {mx, my};
    e.radius_r = ellipse_radius(mass);
    e.degenerate = lo < 1e-12 || hi < 1e-12;
    e.semi_axes = {e.radius_r * std::sqrt(std::max(hi, 1e-12)),
                   e.radius_r * std::sqrt(std::max(lo, 1e-12))};

    double theta = std::atan2(es.eigenvectors()(1, 1), es.eigenvectors()(0, 1));
    while (theta <= -M_PI / 2.0) theta += M_PI;
    while (theta > M_PI / 2.0) theta -= M_PI;
    e.orientation = theta;
    return e;
}

namespace detail {

struct EllipseFrame {
    double cx, cy, cos_t, sin_t, a, b;

    explicit EllipseFrame(const CovarianceEllipse& e)
        : cx(e.center[0]),
          cy(e.center[1]),
          cos_t(std::cos(e.orientation)),
          sin_t(std::sin(e.orientation)),
          a(e.semi_axes[0]),
          b(e.semi_axes[1]) {}

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = (dx * cos_t + dy * sin_t) / a;
        const double w = (-dx * sin_t + dy * cos_t) / b;
        return u * u + w * w <= 1.0;
    }

    // Tight axis-aligned half-extents.
    double half_x() const { return std::hypot(a * cos_t, b * sin_t); }
    double half_y() const { return std::hypot(a * sin_t, b * cos_t); }
};

}  // namespace detail

// Euclidean distance between ellipse centers.
inline double center_distance(const CovarianceEllipse& e1, const CovarianceEllipse& e2) {
    return std::hypot(e1.center[0] - e2.center[0], e1.center[1] - e2.center[1]);
}

// Jaccard area ratio area(E1 (intersect) E2) / area(E1 (union) E2), estimated on a
// deterministic uniform grid over the union's bounding box. The grid is
// doubled from 512^2 until the estimate moves less than 1e-4 (cap 4096^2).
inline double overlap(const CovarianceEllipse& e1, const CovarianceEllipse& e2) {
    const detail::EllipseFrame f1(e1), f2(e2);

    // Disjoint short-circuit: centers farther apart than the two major axes.
    if (center_distance(e1, e2) > e1.semi_axes[0] + e2.semi_axes[0]) return 0.0;

    const double x0 = std::min(f1.cx - f1.half_x(), f2.cx - f2.half_x());
    const double x1 = std::max(f1.cx + f1.half_x(), f2.cx + f2.half_x());
    const double y0 = std::min(f1.cy - f1.half_y(), f2.cy - f2.half_y());
    const double y1 = std::max(f1.cy + f1.half_y(), f2.cy + f2.half_y());

    double prev = -1.0;
    for (int n = 512; n <= 4096; n *= 2) {
        const double dx = (x1 - x0) / n, dy = (y1 - y0) / n;
        long long inter = 0, uni = 0;
        for (int j = 0; j < n; ++j) {
            const double y = y0 + (j + 0.5) * dy;
            for (int i = 0; i < n; ++i) {
                const double x = x0 + (i + 0.5) * dx;
                const bool in1 = f1.contains(x, y), in2 = f2.contains(x, y);
                inter += in1 && in2;
                uni += in1 || in2;
            }
        }
        const double est = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
        if (prev >= 0.0 && std::abs(est - prev) < 1e-4) return est;
        prev = est;
    }
    return prev;
}

}  // namespace motorsig::similarity
