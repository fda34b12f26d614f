#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "motorsig/error.hpp"
#include "motorsig/generation.hpp"
#include "motorsig/network.hpp"
#include "motorsig/numio.hpp"
#include "motorsig/rng.hpp"
#include "motorsig/signal.hpp"
#include "motorsig/similarity.hpp"
#include "motorsig/trajectory.hpp"

// Per-person training orchestration: window assembly, mini-batch Adam with
// periodic checkpoints, and checkpoint selection by generated-profile
// distance against the person's own trials.

namespace motorsig::training {

struct TrainingPlan {
    std::string person_label;
    std::vector<std::string> train_trial_ids;  // the six trials providing windows
    std::string holdout_trial_id;              // the seventh; never windowed
    int window_stride = 1;
    double train_fraction = 0.7;
    int batch_size = 2000;
    int epochs = 8000;
    int checkpoint_every = 100;
    std::uint64_t split_seed = 0;

    void validate() const {
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw domain_error("training plan: train fraction must be in (0, 1)");
        if (batch_size < 1) throw domain_error("training plan: batch size must be at least 1");
        if (window_stride < 1) throw domain_error("training plan: window stride must be at least 1");
        if (epochs < 1) throw domain_error("training plan: epochs must be at least 1");
        if (checkpoint_every < 1 || epochs % checkpoint_every != 0)
            throw domain_error("training plan: checkpoint interval must divide the epoch count");
    }
};

inline TrainingPlan plan_from_json(const nlohmann::json& j) {
    TrainingPlan p;
    try {
        p.person_label = j.at("person_label").get<std::string>();
        if (j.contains("train_trial_ids"))
            p.train_trial_ids = j.at("train_trial_ids").get<std::vector<std::string>>();
        if (j.contains("holdout_trial_id"))
            p.holdout_trial_id = j.at("holdout_trial_id").get<std::string>();
        if (j.contains("window_stride")) p.window_stride = j.at("window_stride").get<int>();
        if (j.contains("train_fraction")) p.train_fraction = j.at("train_fraction").get<double>();
        if (j.contains("batch_size")) p.batch_size = j.at("batch_size").get<int>();
        if (j.contains("epochs")) p.epochs = j.at("epochs").get<int>();
        if (j.contains("checkpoint_every")) p.checkpoint_every = j.at("checkpoint_every").get<int>();
        if (j.contains("split_seed")) p.split_seed = j.at("split_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("training plan: ") + e.what());
    }
    p.validate();
    return p;
}

inline nlohmann::json plan_to_json(const TrainingPlan& p) {
    return nlohmann::json{{"person_label", p.person_label},
                          {"train_trial_ids", p.train_trial_ids},
                          {"holdout_trial_id", p.holdout_trial_id},
                          {"window_stride", p.window_stride},
                          {"train_fraction", p.train_fraction},
                          {"batch_size", p.batch_size},
                          {"epochs", p.epochs},
                          {"checkpoint_every", p.checkpoint_every},
                          {"split_seed", p.split_seed}};
}

// Sliding windows of l consecutive positions; the target of a window is the
// backward-difference velocity at the sample right after it. Windows keep
// raw (unnormalized) positions.
struct WindowSet {
    Eigen::MatrixXd windows;  // N x l
    Eigen::VectorXd targets;  // N
    std::vector<std::string> warnings;
};

inline WindowSet build_windows(const std::vector<Trajectory>& trials, int l, int stride) {
    if (l < 1) throw domain_error("build windows: window length must be at least 1");
    if (stride < 1) throw domain_error("build windows: stride must be at least 1");

    WindowSet set;
    std::vector<std::pair<const Trajectory*, std::int64_t>> counted;
    std::int64_t total = 0;
    for (const auto& trial : trials) {
        const auto n = static_cast<std::int64_t>(trial.positions.size());
        if (n < l + 1) {
            set.warnings.push_back("trial '" + trial.id + "' is shorter than a window plus its target (" +
                                   std::to_string(n) + " samples); excluded");
            continue;
        }
        // Window starts 0, stride, 2*stride, ... with the target index start+l <= n-1.
        const std::int64_t count = (n - l - 1) / stride + 1;
        counted.emplace_back(&trial, count);
        total += count;
    }

    set.windows.resize(total, l);
    set.targets.resize(total);
    std::int64_t row = 0;
    for (const auto& [trial, count] : counted) {
        const double rate = trial->sample_rate;
        for (std::int64_t k = 0; k < count; ++k, ++row) {
            const std::int64_t start = k * stride;
            for (int t = 0; t < l; ++t) set.windows(row, t) = trial->positions[start + t];
            set.targets(row) =
                (trial->positions[start + l] - trial->positions[start + l - 1]) * rate;
        }
    }
    return set;
}

struct SplitDataset {
    Eigen::MatrixXd train_windows, val_windows;
    Eigen::VectorXd train_targets, val_targets;
};

// Seeded Fisher-Yates shuffle, then a 70/30-style prefix split. Both splits
// are non-empty whenever there are at least two windows.
inline SplitDataset split_windows(const WindowSet& set, double train_fraction,
                                  std::uint64_t split_seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw domain_error("split: train fraction must be in (0, 1)");
    const auto n = set.windows.rows();
    if (n == 0) throw domain_error("split: no windows to split");

    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(split_seed);
    for (std::int64_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    auto n_train = static_cast<std::int64_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (n > 1) n_train = std::clamp<std::int64_t>(n_train, 1, n - 1);
    else n_train = n;

    SplitDataset out;
    out.train_windows.resize(n_train, set.windows.cols());
    out.train_targets.resize(n_train);
    out.val_windows.resize(n - n_train, set.windows.cols());
    out.val_targets.resize(n - n_train);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto src = order[static_cast<std::size_t>(i)];
        if (i < n_train) {
            out.train_windows.row(i) = set.windows.row(src);
            out.train_targets(i) = set.targets(src);
        } else {
            out.val_windows.row(i - n_train) = set.windows.row(src);
            out.val_targets(i - n_train) = set.targets(src);
        }
    }
    return out;
}

struct TrainingLogRow {
    int epoch = 0;  // 0 is the untrained baseline
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainingResult {
    std::vector<net::NetworkCheckpoint> checkpoints;
    std::vector<TrainingLogRow> log;
    std::vector<std::string> warnings;
};

inline double eval_mean_nll(const net::NetworkCheckpoint& ckpt, const Eigen::MatrixXd& windows,
                            const Eigen::VectorXd& targets, int batch_size) {
    const auto n = windows.rows();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (Eigen::Index at = 0; at < n; at += batch_size) {
        const auto take = std::min<Eigen::Index>(batch_size, n - at);
        const Eigen::MatrixXd out = net::forward_batch(ckpt, windows.middleRows(at, take));
        for (Eigen::Index i = 0; i < take; ++i)
            sum += net::nll_loss({out(i, 0), out(i, 1)}, targets(at + i));
    }
    return sum / static_cast<double>(n);
}

// Runs the full training schedule on the six training trials. Inputs are
// preprocessed trajectories; window targets come from their position series
// as-is. Checkpoints are emitted every plan.checkpoint_every epochs, and the
// log carries one row per epoch plus the epoch-0 baseline.
inline TrainingResult train(const TrainingPlan& plan, const std::vector<Trajectory>& trials,
                            const net::NetworkConfig& config) {
    plan.validate();
    config.validate();

    auto set = build_windows(trials, config.input_window_l, plan.window_stride);
    if (set.windows.rows() == 0)
        throw domain_error("training: no usable windows (every trial is shorter than the window)");
    auto split = split_windows(set, plan.train_fraction, plan.split_seed);

    // Normalization constants come from the training split only.
    const double mean = split.train_windows.mean();
    const auto count = static_cast<double>(split.train_windows.size());
    double variance = (split.train_windows.array() - mean).square().sum() / std::max(1.0, count - 1.0);
    double stddev = std::sqrt(variance);
    if (!(stddev > 1e-12)) stddev = 1.0;

    auto ckpt = net::init_checkpoint(config);
    ckpt.norm_mean = mean;
    ckpt.norm_std = stddev;

    // Start the predicted log-sigma at the scale of the target velocities so
    // the first epochs are not dominated by a wildly misscaled variance.
    {
        const auto nt = static_cast<double>(split.train_targets.size());
        const double tmean = split.train_targets.mean();
        double tvar = (split.train_targets.array() - tmean).square().sum() / std::max(1.0, nt - 1.0);
        ckpt.params.dense_b(1) = 0.5 * std::log(std::max(tvar, 1e-12));
    }

    const Eigen::MatrixXd train_w = (split.train_windows.array() - mean) / stddev;
    const Eigen::MatrixXd val_w = (split.val_windows.array() - mean) / stddev;
    const auto n_train = train_w.rows();

    TrainingResult result;
    result.warnings = set.warnings;
    result.log.push_back({0, eval_mean_nll(ckpt, train_w, split.train_targets, plan.batch_size),
                          eval_mean_nll(ckpt, val_w, split.val_targets, plan.batch_size)});

    std::vector<std::int64_t> order(static_cast<std::size_t>(n_train));
    Eigen::MatrixXd batch_w;
    Eigen::VectorXd batch_t;
    for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
        for (std::int64_t i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;
        Rng rng = Rng::derive(plan.split_seed, static_cast<std::uint64_t>(epoch));
        for (std::int64_t i = n_train - 1; i > 0; --i) {
            const auto j =
                static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double loss_sum = 0.0;
        int batch_index = 0;
        for (Eigen::Index at = 0; at < n_train; at += plan.batch_size, ++batch_index) {
            const auto take = std::min<Eigen::Index>(plan.batch_size, n_train - at);
            batch_w.resize(take, train_w.cols());
            batch_t.resize(take);
            for (Eigen::Index i = 0; i < take; ++i) {
                batch_w.row(i) = train_w.row(order[static_cast<std::size_t>(at + i)]);
                batch_t(i) = split.train_targets(order[static_cast<std::size_t>(at + i)]);
            }
            net::BatchGradients grads;
            try {
                grads = net::backward(ckpt, batch_w, batch_t);
            } catch (const numeric_error& e) {
                throw numeric_error("training diverged at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_index) + ": " + e.what());
            }
            if (!std::isfinite(grads.loss))
                throw numeric_error("training diverged at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_index) + ": non-finite loss");
            net::adam_step(ckpt, grads.grads);
            loss_sum += grads.loss * static_cast<double>(take);
        }

        ckpt.epoch = epoch;
        result.log.push_back({epoch, loss_sum / static_cast<double>(n_train),
                              eval_mean_nll(ckpt, val_w, split.val_targets, plan.batch_size)});
        if (epoch % plan.checkpoint_every == 0) result.checkpoints.push_back(ckpt);
    }
    return result;
}

struct SelectionResult {
    int best_checkpoint_epoch = 0;
    std::map<int, double> per_checkpoint_lgen;
    std::vector<double> per_trial_emd;  // winner's distances, in trial order
};

// Evaluates every checkpoint by generating one trajectory per trial (seeded
// with that trial's first window) and averaging the velocity-profile
// transport distance against the trials themselves. A diverging candidate
// scores +infinity instead of failing the selection. Ties go to the earliest
// epoch.
inline SelectionResult select(const std::vector<net::NetworkCheckpoint>& checkpoints,
                              const std::vector<Trajectory>& trials,
                              const gen::GenerationConfig& gen_config) {
    if (checkpoints.empty()) throw domain_error("select: no checkpoints");
    if (trials.empty()) throw domain_error("select: no trials");
    gen_config.validate();

    std::vector<similarity::VelocityProfile> human;
    human.reserve(trials.size());
    for (const auto& trial : trials) {
        if (static_cast<int>(trial.positions.size()) < gen_config.seed_length_l)
            throw domain_error("select: trial '" + trial.id + "' is shorter than the seed window");
        human.push_back(similarity::velocity_profile(signal::differentiate(trial)));
    }

    SelectionResult result;
    result.best_checkpoint_epoch = -1;
    double best = std::numeric_limits<double>::infinity();
    const auto inf = std::numeric_limits<double>::infinity();

    for (const auto& ckpt : checkpoints) {
        std::vector<gen::SeededWindow> windows(trials.size());
        for (std::size_t i = 0; i < trials.size(); ++i) {
            auto& w = windows[i];
            w.seed.assign(trials[i].positions.begin(),
                          trials[i].positions.begin() + gen_config.seed_length_l);
            w.person_label = trials[i].person_label;
            w.trial_index = trials[i].trial_index;
            w.rng_seed = Rng::derive_seed(
                Rng::derive_seed(gen_config.rng_seed, static_cast<std::uint64_t>(ckpt.epoch)),
                static_cast<std::uint64_t>(i));
        }

        double lgen;
        std::vector<double> emds;
        try {
            const auto generated = gen::generate_batch(ckpt, windows, gen_config);
            double sum = 0.0;
            for (std::size_t i = 0; i < generated.size(); ++i) {
                const auto profile = similarity::velocity_profile(signal::differentiate(generated[i]));
                emds.push_back(similarity::emd(profile, human[i]));
                sum += emds.back();
            }
            lgen = sum / static_cast<double>(generated.size());
        } catch (const generation_error&) {
            lgen = inf;
            emds.assign(trials.size(), inf);
        }

        result.per_checkpoint_lgen[ckpt.epoch] = lgen;
        const bool first = result.best_checkpoint_epoch < 0;
        const bool earlier_tie = lgen == best && ckpt.epoch < result.best_checkpoint_epoch;
        if (first || lgen < best || earlier_tie) {
            best = lgen;
            result.best_checkpoint_epoch = ckpt.epoch;
            result.per_trial_emd = emds;
        }
    }

    // The winner attains the map's minimum by construction; keep it checked.
    double minimum = inf;
    for (const auto& [epoch, value] : result.per_checkpoint_lgen) minimum = std::min(minimum, value);
    const double winner = result.per_checkpoint_lgen.at(result.best_checkpoint_epoch);
    if (!(winner == minimum || (std::isinf(winner) && std::isinf(minimum))))
        throw numeric_error("select: winner does not attain the minimum generation loss");
    return result;
}

inline nlohmann::json selection_to_json(const SelectionResult& r) {
    nlohmann::json per_ckpt = nlohmann::json::object();
    for (const auto& [epoch, lgen] : r.per_checkpoint_lgen)
        per_ckpt[std::to_string(epoch)] = lgen;
    return nlohmann::json{{"best_checkpoint_epoch", r.best_checkpoint_epoch},
                          {"per_checkpoint_Lgen", per_ckpt},
                          {"per_trial_emd", r.per_trial_emd}};
}

inline std::string loss_log_csv(const std::vector<TrainingLogRow>& log) {
    std::string out = "epoch,train_nll,validation_nll\n";
    for (const auto& row : log) {
        out += std::to_string(row.epoch);
        out += ',';
        out += format_g17(row.train_loss);
        out += ',';
        out += format_g17(row.val_loss);
        out += '\n';
    }
    return out;
}

}  // namespace motorsig::training
