#pragma once

// Reference implementations used only to cross-check the library: written
// independently of the code under test, against the definitions rather than
// the shipped formulas.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "motorsig/network.hpp"
#include "motorsig/rng.hpp"
#include "motorsig/similarity.hpp"

namespace oracles {

// Optimal 1-D transport cost between two PMFs on the same grid, by greedy
// leftmost-supply/leftmost-demand matching (optimal because the cost |i-j|
// is convex in 1-D). Never looks at CDFs.
inline double emd_transport(const motorsig::similarity::VelocityProfile& p,
                            const motorsig::similarity::VelocityProfile& q) {
    constexpr int n = motorsig::similarity::kProfileBins;
    double cost = 0.0;
    int a = 0, b = 0;
    double supply = p.mass[0], demand = q.mass[0];
    while (a < n && b < n) {
        const double moved = std::min(supply, demand);
        cost += moved * std::abs(a - b);
        supply -= moved;
        demand -= moved;
        if (supply <= 1e-15 && ++a < n) supply = p.mass[static_cast<std::size_t>(a)];
        if (demand <= 1e-15 && ++b < n) demand = q.mass[static_cast<std::size_t>(b)];
    }
    return cost;
}

// Random PMF with at most `max_bins` non-empty bins.
inline motorsig::similarity::VelocityProfile random_profile(motorsig::Rng& rng, int max_bins) {
    motorsig::similarity::VelocityProfile p;
    const int k = 1 + static_cast<int>(rng.next_u64() % static_cast<unsigned>(max_bins));
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        const auto bin = static_cast<std::size_t>(rng.next_u64() % motorsig::similarity::kProfileBins);
        const double w = 0.05 + rng.uniform();  // keep masses well away from zero
        p.mass[bin] += w;
        total += w;
    }
    for (double& m : p.mass) m /= total;
    // Compensate accumulated rounding so validate() holds exactly.
    double sum = 0.0;
    for (double m : p.mass) sum += m;
    for (double& m : p.mass)
        if (m > 0.0) {
            m += 1.0 - sum;
            break;
        }
    return p;
}

// Mean batch NLL evaluated through the public forward pass only.
inline double batch_nll(const motorsig::net::NetworkCheckpoint& ckpt, const Eigen::MatrixXd& windows,
                        const Eigen::VectorXd& targets) {
    const Eigen::MatrixXd out = motorsig::net::forward_batch(ckpt, windows);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        acc += motorsig::net::nll_loss({out(i, 0), out(i, 1)}, targets(i));
    return acc / static_cast<double>(out.rows());
}

// Central finite-difference gradient of the mean batch NLL with respect to
// every parameter. Perturbs each scalar in place; never touches the
// backpropagation code.
inline motorsig::net::ParamSet fd_gradients(motorsig::net::NetworkCheckpoint& ckpt,
                                            const Eigen::MatrixXd& windows,
                                            const Eigen::VectorXd& targets, double h) {
    auto grads = motorsig::net::ParamSet::zeros_like(ckpt.params);

    std::vector<std::pair<double*, Eigen::Index>> spans, grad_spans;
    ckpt.params.for_each([&spans](auto& t) { spans.emplace_back(t.data(), t.size()); });
    grads.for_each([&grad_spans](auto& t) { grad_spans.emplace_back(t.data(), t.size()); });

    for (std::size_t s = 0; s < spans.size(); ++s) {
        for (Eigen::Index k = 0; k < spans[s].second; ++k) {
            double& theta = spans[s].first[k];
            const double saved = theta;
            theta = saved + h;
            const double up = batch_nll(ckpt, windows, targets);
            theta = saved - h;
            const double down = batch_nll(ckpt, windows, targets);
            theta = saved;
            grad_spans[s].first[k] = (up - down) / (2.0 * h);
        }
    }
    return grads;
}

// Largest relative disagreement between two parameter sets, with a floor so
// near-zero gradients compare absolutely.
inline double max_relative_error(const motorsig::net::ParamSet& a, const motorsig::net::ParamSet& b) {
    std::vector<std::pair<const double*, Eigen::Index>> sa, sb;
    a.for_each([&sa](const auto& t) { sa.emplace_back(t.data(), t.size()); });
    b.for_each([&sb](const auto& t) { sb.emplace_back(t.data(), t.size()); });
    double worst = 0.0;
    for (std::size_t s = 0; s < sa.size(); ++s)
        for (Eigen::Index k = 0; k < sa[s].second; ++k) {
            const double x = sa[s].first[k], y = sb[s].first[k];
            worst = std::max(worst, std::abs(x - y) / std::max(1e-6, std::abs(x) + std::abs(y)));
        }
    return worst;
}

}  // namespace oracles
