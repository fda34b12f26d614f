#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "motorsig/dataset.hpp"
#include "motorsig/training.hpp"

using namespace motorsig;
using namespace motorsig::training;

namespace {

Trajectory ramp_trial(int n, double rate, int trial_index = 1) {
    Trajectory t;
    t.source = Source::human;
    t.person_label = "P1";
    t.trial_index = trial_index;
    t.id = make_trajectory_id(t.source, t.person_label, t.trial_index);
    t.sample_rate = rate;
    for (int i = 0; i < n; ++i) t.positions.push_back(0.5 * i);
    return t;
}

dataset::PersonaSpec quiet_persona() {
    dataset::PersonaSpec spec;
    spec.label = "P1";
    spec.base_amplitude = 5.0;
    spec.base_frequency = 0.8;
    spec.amplitude_jitter = 0.0;
    spec.frequency_jitter = 0.0;
    spec.asymmetry = 1.0;
    spec.seed = 99;
    return spec;
}

net::NetworkConfig small_net(int l) {
    net::NetworkConfig c;
    c.input_window_l = l;
    c.lstm_units = 8;
    c.lstm_layers = 2;
    c.learning_rate = 0.03;
    c.seed = 11;
    return c;
}

TrainingPlan small_plan() {
    TrainingPlan plan;
    plan.person_label = "P1";
    plan.window_stride = 20;
    plan.batch_size = 256;
    plan.epochs = 100;
    plan.checkpoint_every = 50;
    plan.split_seed = 7;
    return plan;
}

bool params_equal(const net::ParamSet& a, const net::ParamSet& b) {
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

TEST_CASE("window counts match the sliding-window arithmetic") {
    // 30 s at 100 Hz with l=400: one window per start position, 3000-400 total.
    const auto big = build_windows({ramp_trial(3000, 100.0)}, 400, 1);
    REQUIRE(big.windows.rows() == 2600);
    REQUIRE(big.windows.cols() == 400);

    const auto strided = build_windows({ramp_trial(3000, 100.0)}, 400, 7);
    REQUIRE(strided.windows.rows() == (3000 - 401) / 7 + 1);

    // A series of exactly l+1 samples yields a single window.
    const auto one = build_windows({ramp_trial(401, 100.0)}, 400, 1);
    REQUIRE(one.windows.rows() == 1);
}

TEST_CASE("windows and targets enumerate the series in order") {
    Trajectory t;
    t.source = Source::human;
    t.person_label = "P1";
    t.trial_index = 1;
    t.id = "P:P1:t1";
    t.sample_rate = 2.0;
    t.positions = {0.0, 1.0, 4.0, 9.0, 16.0};

    const auto set = build_windows({t}, 2, 1);
    REQUIRE(set.windows.rows() == 3);
    REQUIRE(set.windows(0, 0) == 0.0);
    REQUIRE(set.windows(0, 1) == 1.0);
    REQUIRE(set.windows(2, 0) == 4.0);
    REQUIRE(set.windows(2, 1) == 9.0);
    // Target is the backward-difference velocity at the next sample.
    REQUIRE(set.targets(0) == (4.0 - 1.0) * 2.0);
    REQUIRE(set.targets(1) == (9.0 - 4.0) * 2.0);
    REQUIRE(set.targets(2) == (16.0 - 9.0) * 2.0);
}

TEST_CASE("short trials are excluded with a warning") {
    const auto set = build_windows({ramp_trial(5, 100.0, 1), ramp_trial(401, 100.0, 2)}, 400, 1);
    REQUIRE(set.windows.rows() == 1);
    REQUIRE(set.warnings.size() == 1);
    REQUIRE(set.warnings[0].find("P:P1:t1") != std::string::npos);
}

TEST_CASE("the split is deterministic, exhaustive, and sized by the fraction") {
    const auto set = build_windows({ramp_trial(30, 1.0)}, 2, 1);  // 28 windows
    REQUIRE(set.windows.rows() == 28);
    const auto a = split_windows(set, 0.7, 123);
    const auto b = split_windows(set, 0.7, 123);
    REQUIRE(a.train_windows == b.train_windows);
    REQUIRE(a.val_windows == b.val_windows);
    REQUIRE(a.train_targets == b.train_targets);

    REQUIRE(a.train_windows.rows() == 19);  // floor(0.7 * 28)
    REQUIRE(a.val_windows.rows() == 9);

    // Every original target appears exactly once across the two splits.
    std::vector<double> seen;
    for (Eigen::Index i = 0; i < a.train_targets.size(); ++i) seen.push_back(a.train_targets(i));
    for (Eigen::Index i = 0; i < a.val_targets.size(); ++i) seen.push_back(a.val_targets(i));
    std::sort(seen.begin(), seen.end());
    std::vector<double> expect;
    for (Eigen::Index i = 0; i < set.targets.size(); ++i) expect.push_back(set.targets(i));
    std::sort(expect.begin(), expect.end());
    REQUIRE(seen == expect);

    const auto c = split_windows(set, 0.7, 124);
    REQUIRE(a.train_windows != c.train_windows);  // another seed, another membership
}

TEST_CASE("training on a deterministic persona drives validation loss down") {
    const auto trials = dataset::synth_persona(quiet_persona(), 6, 10.0, 100.0);
    const auto result = train(small_plan(), trials, small_net(100));

    REQUIRE(result.checkpoints.size() == 2);
    REQUIRE(result.checkpoints[0].epoch == 50);
    REQUIRE(result.checkpoints[1].epoch == 100);
    REQUIRE(result.log.size() == 101);
    REQUIRE(result.log.front().epoch == 0);
    REQUIRE(result.log.back().epoch == 100);

    for (const auto& row : result.log) {
        REQUIRE(std::isfinite(row.train_loss));
        REQUIRE(std::isfinite(row.val_loss));
    }
    // The synthetic motion is noise-free, so the predictive NLL collapses.
    REQUIRE(result.log.back().val_loss < result.log.front().val_loss - 1.0);

    // Normalization constants are shared and sane.
    for (const auto& ckpt : result.checkpoints) {
        REQUIRE(ckpt.norm_mean == result.checkpoints[0].norm_mean);
        REQUIRE(ckpt.norm_std == result.checkpoints[0].norm_std);
        REQUIRE(ckpt.norm_std > 0.0);
    }
}

TEST_CASE("training is reproducible") {
    const auto trials = dataset::synth_persona(quiet_persona(), 6, 10.0, 100.0);
    auto plan = small_plan();
    plan.epochs = 10;
    plan.checkpoint_every = 5;
    const auto a = train(plan, trials, small_net(100));
    const auto b = train(plan, trials, small_net(100));
    REQUIRE(a.checkpoints.size() == b.checkpoints.size());
    for (std::size_t i = 0; i < a.checkpoints.size(); ++i)
        REQUIRE(params_equal(a.checkpoints[i].params, b.checkpoints[i].params));
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        REQUIRE(a.log[i].train_loss == b.log[i].train_loss);
        REQUIRE(a.log[i].val_loss == b.log[i].val_loss);
    }
}

TEST_CASE("checkpoint schedule arithmetic") {
    auto plan = small_plan();
    plan.epochs = 8000;
    plan.checkpoint_every = 100;
    plan.validate();
    REQUIRE(plan.epochs / plan.checkpoint_every == 80);

    plan.epochs = 200;
    REQUIRE(plan.epochs / plan.checkpoint_every == 2);

    plan.checkpoint_every = 300;  // does not divide 200
    REQUIRE_THROWS_AS(plan.validate(), domain_error);

    // Verified on the real loop with a toy problem: every=1 emits one
    // checkpoint per epoch.
    auto tiny = small_plan();
    tiny.window_stride = 4;
    tiny.batch_size = 8;
    tiny.epochs = 8;
    tiny.checkpoint_every = 1;
    net::NetworkConfig cfg;
    cfg.input_window_l = 4;
    cfg.lstm_units = 2;
    cfg.lstm_layers = 1;
    cfg.seed = 3;
    const auto result = train(tiny, {ramp_trial(20, 100.0)}, cfg);
    REQUIRE(result.checkpoints.size() == 8);
    for (int i = 0; i < 8; ++i) REQUIRE(result.checkpoints[i].epoch == i + 1);
}

TEST_CASE("training rejects unusable inputs") {
    REQUIRE_THROWS_AS(train(small_plan(), {ramp_trial(5, 100.0)}, small_net(100)), domain_error);

    auto plan = small_plan();
    plan.train_fraction = 1.0;
    REQUIRE_THROWS_AS(plan.validate(), domain_error);
    plan = small_plan();
    plan.batch_size = 0;
    REQUIRE_THROWS_AS(plan.validate(), domain_error);
}

TEST_CASE("selection picks the checkpoint with the smallest profile distance") {
    const auto trials = dataset::synth_persona(quiet_persona(), 7, 10.0, 100.0);
    std::vector<Trajectory> train_trials(trials.begin(), trials.begin() + 6);

    const auto result = train(small_plan(), train_trials, small_net(100));
    REQUIRE(result.checkpoints.size() == 2);

    gen::GenerationConfig gcfg;
    gcfg.seed_length_l = 100;
    gcfg.total_duration = 10.0;
    gcfg.rng_seed = 1234;

    const auto sel = select(result.checkpoints, trials, gcfg);
    REQUIRE(sel.per_checkpoint_lgen.size() == 2);
    REQUIRE(sel.per_trial_emd.size() == 7);
    REQUIRE((sel.best_checkpoint_epoch == 50 || sel.best_checkpoint_epoch == 100));

    double best = std::numeric_limits<double>::infinity();
    for (const auto& [epoch, lgen] : sel.per_checkpoint_lgen) {
        REQUIRE(std::isfinite(lgen));
        best = std::min(best, lgen);
    }
    REQUIRE(sel.per_checkpoint_lgen.at(sel.best_checkpoint_epoch) == best);

    double mean = 0.0;
    for (double d : sel.per_trial_emd) mean += d;
    mean /= static_cast<double>(sel.per_trial_emd.size());
    REQUIRE(std::abs(mean - best) < 1e-12);

    // Winner never loses to the final checkpoint.
    REQUIRE(best <= sel.per_checkpoint_lgen.at(100));

    // A single candidate is always selected.
    const auto only = select({result.checkpoints[0]}, trials, gcfg);
    REQUIRE(only.best_checkpoint_epoch == 50);
    REQUIRE(only.per_checkpoint_lgen.size() == 1);
}

TEST_CASE("diverging candidates score infinity without aborting selection") {
    const auto trials = dataset::synth_persona(quiet_persona(), 7, 10.0, 100.0);
    std::vector<Trajectory> train_trials(trials.begin(), trials.begin() + 6);
    auto plan = small_plan();
    plan.epochs = 50;
    plan.checkpoint_every = 50;
    const auto result = train(plan, train_trials, small_net(100));

    auto runaway = result.checkpoints[0];
    runaway.params.for_each([](auto& t) { t.setZero(); });
    runaway.params.dense_b(0) = 1000.0;
    runaway.epoch = 25;

    gen::GenerationConfig gcfg;
    gcfg.seed_length_l = 100;
    gcfg.total_duration = 10.0;
    gcfg.rng_seed = 1234;

    const auto sel = select({runaway, result.checkpoints[0]}, trials, gcfg);
    REQUIRE(std::isinf(sel.per_checkpoint_lgen.at(25)));
    REQUIRE(std::isfinite(sel.per_checkpoint_lgen.at(50)));
    REQUIRE(sel.best_checkpoint_epoch == 50);

    // All-divergent field: earliest epoch wins the infinite tie.
    auto runaway2 = runaway;
    runaway2.epoch = 35;
    const auto hopeless = select({runaway, runaway2}, trials, gcfg);
    REQUIRE(hopeless.best_checkpoint_epoch == 25);
    REQUIRE(std::isinf(hopeless.per_checkpoint_lgen.at(25)));
    REQUIRE(std::isinf(hopeless.per_checkpoint_lgen.at(35)));
}

TEST_CASE("selection validates its inputs") {
    const auto trials = dataset::synth_persona(quiet_persona(), 2, 0.5, 100.0);  // 50 samples
    gen::GenerationConfig gcfg;
    gcfg.seed_length_l = 100;
    net::NetworkConfig cfg;
    cfg.input_window_l = 100;
    auto ckpt = net::init_checkpoint(cfg);
    ckpt.norm_std = 1.0;

    REQUIRE_THROWS_AS(select({}, trials, gcfg), domain_error);
    REQUIRE_THROWS_AS(select({ckpt}, {}, gcfg), domain_error);
    REQUIRE_THROWS_AS(select({ckpt}, trials, gcfg), domain_error);  // trials too short
}

TEST_CASE("training plan json round trip") {
    TrainingPlan p;
    p.person_label = "P3";
    p.train_trial_ids = {"P:P3:t1", "P:P3:t2"};
    p.holdout_trial_id = "P:P3:t7";
    p.window_stride = 5;
    p.train_fraction = 0.6;
    p.batch_size = 128;
    p.epochs = 400;
    p.checkpoint_every = 200;
    p.split_seed = 77;

    const auto q = plan_from_json(plan_to_json(p));
    REQUIRE(q.person_label == p.person_label);
    REQUIRE(q.train_trial_ids == p.train_trial_ids);
    REQUIRE(q.holdout_trial_id == p.holdout_trial_id);
    REQUIRE(q.window_stride == p.window_stride);
    REQUIRE(q.train_fraction == p.train_fraction);
    REQUIRE(q.batch_size == p.batch_size);
    REQUIRE(q.epochs == p.epochs);
    REQUIRE(q.checkpoint_every == p.checkpoint_every);
    REQUIRE(q.split_seed == p.split_seed);

    REQUIRE_THROWS_AS(plan_from_json(nlohmann::json{{"epochs", 100}}), parse_error);
    nlohmann::json bad = plan_to_json(p);
    bad["checkpoint_every"] = 300;
    REQUIRE_THROWS_AS(plan_from_json(bad), domain_error);
}

TEST_CASE("loss log and selection serialize for the reports") {
    std::vector<TrainingLogRow> log = {{0, 3.5, 3.25}, {1, 2.0, 1.75}};
    const auto csv = loss_log_csv(log);
    REQUIRE(csv.find("epoch,train_nll,validation_nll\n") == 0);
    REQUIRE(csv.find("\n1,2,1.75\n") != std::string::npos);

    SelectionResult r;
    r.best_checkpoint_epoch = 100;
    r.per_checkpoint_lgen = {{50, 2.5}, {100, 1.5}};
    r.per_trial_emd = {1.0, 2.0};
    const auto j = selection_to_json(r);
    REQUIRE(j.at("best_checkpoint_epoch").get<int>() == 100);
    REQUIRE(j.at("per_checkpoint_Lgen").at("100").get<double>() == 1.5);
    REQUIRE(j.at("per_trial_emd").size() == 2);
}
