#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "motorsig/dataset.hpp"
#include "motorsig/error.hpp"
#include "motorsig/generation.hpp"
#include "motorsig/network.hpp"
#include "motorsig/oscillator.hpp"
#include "motorsig/report.hpp"
#include "motorsig/rng.hpp"
#include "motorsig/signal.hpp"
#include "motorsig/similarity.hpp"
#include "motorsig/training.hpp"
#include "motorsig/trajectory.hpp"

// Glue between the analysis modules and the command-line tool: preprocessing
// policy, per-person training/selection orchestration, baseline synthesis,
// and the joint similarity-plane comparison.

namespace motorsig::pipeline {

namespace fs = std::filesystem;

struct Preprocessing {
    double cutoff_hz = 6.0;   // twice the typical frequency of natural movement
    int filter_order = 2;
    double target_rate = 100.0;

    void validate() const {
        if (!(target_rate > 0.0)) throw domain_error("preprocessing: target rate must be > 0");
        if (!(cutoff_hz > 0.0) || cutoff_hz >= target_rate / 2.0)
            throw domain_error("preprocessing: cutoff must be in (0, target rate / 2)");
        if (filter_order < 1 || filter_order > 8)
            throw domain_error("preprocessing: filter order must be in [1, 8]");
    }
};

struct PipelineConfig {
    Preprocessing pre;
    net::NetworkConfig net;
    gen::GenerationConfig gen;
    training::TrainingPlan plan;     // per-person defaults; trial ids filled in later
    double select_duration = 30.0;   // generated seconds per candidate during selection
    double ellipse_mass = 0.7;
    std::uint64_t seed = 2024;

    void validate() const {
        pre.validate();
        net.validate();
        gen.validate();
        plan.validate();
        if (!(select_duration > 0.0)) throw domain_error("pipeline: select duration must be > 0");
        if (!(ellipse_mass > 0.0 && ellipse_mass < 1.0))
            throw domain_error("pipeline: ellipse mass must be in (0, 1)");
        if (gen.seed_length_l != net.input_window_l)
            throw domain_error("pipeline: generation seed length must equal the network window");
    }
};

// Full-scale profile: the reference schedule (hours of CPU time).
inline PipelineConfig paper_preset() {
    PipelineConfig c;
    c.net.input_window_l = 400;
    c.net.lstm_units = 20;
    c.net.lstm_layers = 2;
    c.net.learning_rate = 1e-3;
    c.gen.seed_length_l = 400;
    c.plan.window_stride = 1;
    c.plan.batch_size = 2000;
    c.plan.epochs = 8000;
    c.plan.checkpoint_every = 100;
    return c;
}

// Reduced schedule sized for a single desktop core: same pipeline, smaller
// network and window, strided window sampling. Selection rolls out the full
// duration so the checkpoint is picked by exactly the trajectories that ship.
inline PipelineConfig desk_preset() {
    PipelineConfig c;
    c.net.input_window_l = 200;
    c.net.lstm_units = 8;
    c.net.lstm_layers = 2;
    c.net.learning_rate = 0.02;
    c.gen.seed_length_l = 200;
    c.plan.window_stride = 50;
    c.plan.batch_size = 256;
    c.plan.epochs = 600;
    c.plan.checkpoint_every = 100;
    c.select_duration = 30.0;
    return c;
}

inline PipelineConfig preset_by_name(const std::string& name) {
    if (name == "desk") return desk_preset();
    if (name == "paper") return paper_preset();
    throw parse_error("unknown preset '" + name + "' (expected 'desk' or 'paper')");
}

// Recorded measurements get splined up to the target rate and zero-phase
// low-pass filtered. Synthesized trajectories are born clean at the target
// rate and pass through untouched.
inline Trajectory preprocess(const Trajectory& traj, const Preprocessing& pre) {
    pre.validate();
    if (traj.source != Source::human) return traj;
    Trajectory work = traj;
    const double rel = std::abs(work.sample_rate - pre.target_rate) / pre.target_rate;
    if (rel > 1e-9) {
        if (work.sample_rate > pre.target_rate)
            throw domain_error("preprocess: trial '" + traj.id + "' is sampled above " +
                               "the target rate; downsampling is not supported");
        work = signal::resample_spline(work, pre.target_rate);
    }
    return signal::butterworth_lowpass(work, pre.cutoff_hz, pre.filter_order);
}

inline std::vector<Trajectory> preprocess_corpus(const std::vector<Trajectory>& trials,
                                                 const Preprocessing& pre) {
    std::vector<Trajectory> out;
    out.reserve(trials.size());
    for (const auto& t : trials) out.push_back(preprocess(t, pre));
    return out;
}

// --------------------------------------------------------------------------
// Similarity-plane analysis of an arbitrary trajectory collection.

struct GroupSummary {
    std::string person_label;
    Source source = Source::human;
    int n_points = 0;
    std::optional<similarity::CovarianceEllipse> velocity_ellipse, amplitude_ellipse;
};

struct AnalysisResult {
    // Aligned with the input trial order.
    std::vector<report::PlaneRow> velocity_rows, amplitude_rows;
    std::vector<GroupSummary> groups;  // sorted by (label, source rank)
    std::vector<std::string> warnings;
};

namespace detail {

inline int source_rank(Source s) {
    switch (s) {
        case Source::human: return 0;
        case Source::generated: return 1;
        case Source::oscillator: return 2;
    }
    return 3;
}

inline std::vector<similarity::EmbeddedPoint> plane_points(
    const std::vector<report::PlaneRow>& rows, const std::vector<std::size_t>& idx,
    similarity::Plane plane) {
    std::vector<similarity::EmbeddedPoint> pts;
    pts.reserve(idx.size());
    for (auto i : idx) {
        similarity::EmbeddedPoint p;
        p.coords = {rows[i].x, rows[i].y};
        p.source_label = rows[i].person_label;
        p.trial_index = rows[i].trial_index;
        p.plane = plane;
        pts.push_back(p);
    }
    return pts;
}

}  // namespace detail

inline AnalysisResult analyze(const std::vector<Trajectory>& preprocessed, double ellipse_mass) {
    if (preprocessed.empty()) throw domain_error("analyze: empty trial collection");

    AnalysisResult result;

    // Velocity-profile plane: pairwise transport distances, then 2-D MDS.
    std::vector<similarity::VelocityProfile> profiles;
    profiles.reserve(preprocessed.size());
    for (const auto& t : preprocessed)
        profiles.push_back(similarity::velocity_profile(signal::differentiate(t)));
    const auto n = static_cast<Eigen::Index>(preprocessed.size());
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = similarity::emd(profiles[static_cast<std::size_t>(i)],
                                             profiles[static_cast<std::size_t>(j)]);
            dist(i, j) = d;
            dist(j, i) = d;
        }
    const auto embedded = similarity::mds_embed(dist);

    for (std::size_t i = 0; i < preprocessed.size(); ++i) {
        const auto& t = preprocessed[i];
        result.velocity_rows.push_back(
            {t.person_label, t.source, t.trial_index, embedded[i][0], embedded[i][1]});
        const auto amp = similarity::amplitude_coords(t);
        result.amplitude_rows.push_back(
            {t.person_label, t.source, t.trial_index, amp.coords[0], amp.coords[1]});
    }

    // Group by (person, source); ellipses need at least 3 trials.
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < preprocessed.size(); ++i)
        groups[{preprocessed[i].person_label, detail::source_rank(preprocessed[i].source)}]
            .push_back(i);

    for (const auto& [key, idx] : groups) {
        GroupSummary g;
        g.person_label = key.first;
        g.source = preprocessed[idx.front()].source;
        g.n_points = static_cast<int>(idx.size());
        if (idx.size() < 3) {
            result.warnings.push_back("group '" + std::string(to_string(g.source)) + ":" +
                                      g.person_label + "' has fewer than 3 trials; ellipse skipped");
        } else {
            g.velocity_ellipse = similarity::fit_ellipse(
                detail::plane_points(result.velocity_rows, idx, similarity::Plane::velocity_profile),
                ellipse_mass);
            g.amplitude_ellipse = similarity::fit_ellipse(
                detail::plane_points(result.amplitude_rows, idx, similarity::Plane::amplitude),
                ellipse_mass);
        }
        result.groups.push_back(std::move(g));
    }
    return result;
}

// Writes the two plane CSVs, the ellipse table, and one SVG per plane.
inline void write_analysis(report::OutputManifest& manifest, const AnalysisResult& analysis) {
    manifest.write("velocity_plane.csv", report::plane_csv(analysis.velocity_rows));
    manifest.write("amplitude_plane.csv", report::plane_csv(analysis.amplitude_rows));

    std::vector<report::EllipseRow> ellipses;
    for (const auto& g : analysis.groups)
        if (g.velocity_ellipse)
            ellipses.push_back({g.person_label, g.source, g.n_points, *g.velocity_ellipse});
    manifest.write("velocity_ellipses.csv", report::ellipse_csv(ellipses));
    ellipses.clear();
    for (const auto& g : analysis.groups)
        if (g.amplitude_ellipse)
            ellipses.push_back({g.person_label, g.source, g.n_points, *g.amplitude_ellipse});
    manifest.write("amplitude_ellipses.csv", report::ellipse_csv(ellipses));

    auto svg_of = [&](const std::vector<report::PlaneRow>& rows, bool velocity,
                      const std::string& title, const std::string& xl, const std::string& yl) {
        std::vector<report::SvgSeries> series;
        for (const auto& g : analysis.groups) {
            report::SvgSeries s;
            s.name = std::string(to_string(g.source)) + ":" + g.person_label;
            s.marker = detail::source_rank(g.source);
            for (const auto& r : rows)
                if (r.person_label == g.person_label && r.source == g.source)
                    s.points.push_back({r.x, r.y});
            s.ellipse = velocity ? g.velocity_ellipse : g.amplitude_ellipse;
            series.push_back(std::move(s));
        }
        return report::scatter_svg(title, xl, yl, series);
    };
    manifest.write("velocity_plane.svg",
                   svg_of(analysis.velocity_rows, true, "Velocity-profile similarity plane",
                          "dimension 1 (bin units)", "dimension 2 (bin units)"));
    manifest.write("amplitude_plane.svg",
                   svg_of(analysis.amplitude_rows, false, "Amplitude plane",
                          "mean positive amplitude (cm)", "mean negative amplitude (cm)"));
}

// --------------------------------------------------------------------------
// Per-person training, selection, and synthesis.

// Fixed stream offsets so every stage draws from an independent branch of
// the pipeline seed.
namespace seed_stream {
constexpr std::uint64_t kSplit = 1;
constexpr std::uint64_t kNetwork = 2;
constexpr std::uint64_t kSelection = 3;
constexpr std::uint64_t kOscillator = 4;
}  // namespace seed_stream

// The six lowest trial indices train; the highest is the held-out seventh.
inline training::TrainingPlan person_plan(const PipelineConfig& cfg,
                                          const std::vector<Trajectory>& person_trials,
                                          std::size_t person_index) {
    if (person_trials.size() < 2)
        throw domain_error("training plan: a person needs at least 2 trials");
    auto sorted = person_trials;
    std::sort(sorted.begin(), sorted.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.trial_index < b.trial_index; });

    training::TrainingPlan plan = cfg.plan;
    plan.person_label = sorted.front().person_label;
    plan.train_trial_ids.clear();
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) plan.train_trial_ids.push_back(sorted[i].id);
    plan.holdout_trial_id = sorted.back().id;
    plan.split_seed = Rng::derive_seed(Rng::derive_seed(cfg.seed, seed_stream::kSplit), person_index);
    return plan;
}

struct PersonTraining {
    training::TrainingPlan plan;
    training::TrainingResult result;
};

inline PersonTraining train_person(const PipelineConfig& cfg,
                                   const std::vector<Trajectory>& person_trials,
                                   std::size_t person_index) {
    cfg.validate();
    const auto plan = person_plan(cfg, person_trials, person_index);

    std::vector<Trajectory> train_trials;
    for (const auto& id : plan.train_trial_ids) {
        const auto it = std::find_if(person_trials.begin(), person_trials.end(),
                                     [&](const Trajectory& t) { return t.id == id; });
        if (it == person_trials.end()) throw domain_error("training: missing trial " + id);
        train_trials.push_back(*it);
    }

    auto net_cfg = cfg.net;
    net_cfg.seed = Rng::derive_seed(Rng::derive_seed(cfg.seed, seed_stream::kNetwork), person_index);
    return {plan, training::train(plan, train_trials, net_cfg)};
}

inline gen::GenerationConfig selection_config(const PipelineConfig& cfg, std::size_t person_index) {
    auto gcfg = cfg.gen;
    gcfg.total_duration = cfg.select_duration;
    gcfg.rng_seed =
        Rng::derive_seed(Rng::derive_seed(cfg.seed, seed_stream::kSelection), person_index);
    return gcfg;
}

// Regenerates from the winning checkpoint with the same per-(epoch, trial)
// streams the selection used, at the full configured duration. Trial order
// matches the input order.
inline std::vector<Trajectory> generate_from_best(const net::NetworkCheckpoint& best,
                                                  const std::vector<Trajectory>& person_trials,
                                                  const PipelineConfig& cfg,
                                                  std::size_t person_index) {
    const auto gcfg_sel = selection_config(cfg, person_index);
    std::vector<gen::SeededWindow> windows(person_trials.size());
    for (std::size_t i = 0; i < person_trials.size(); ++i) {
        const auto& trial = person_trials[i];
        if (static_cast<int>(trial.positions.size()) < cfg.gen.seed_length_l)
            throw domain_error("generate: trial '" + trial.id + "' is shorter than the seed window");
        auto& w = windows[i];
        w.seed.assign(trial.positions.begin(), trial.positions.begin() + cfg.gen.seed_length_l);
        w.person_label = trial.person_label;
        w.trial_index = trial.trial_index;
        w.rng_seed = Rng::derive_seed(
            Rng::derive_seed(gcfg_sel.rng_seed, static_cast<std::uint64_t>(best.epoch)),
            static_cast<std::uint64_t>(i));
    }
    auto gcfg = cfg.gen;
    gcfg.rng_seed = gcfg_sel.rng_seed;
    return gen::generate_batch(best, windows, gcfg);
}

// Fixed-frequency sinusoid baseline: fit (A, omega distribution) on the
// person's trials, then synthesize one sinusoid per trial.
struct OscillatorBaseline {
    oscillator::OscillatorFit fit;
    std::vector<Trajectory> trials;
};

inline OscillatorBaseline oscillator_baseline(const std::vector<Trajectory>& person_trials,
                                              const PipelineConfig& cfg, std::size_t person_index,
                                              int n_trials, double duration) {
    OscillatorBaseline base;
    base.fit = oscillator::fit_params(person_trials);
    const auto person_seed =
        Rng::derive_seed(Rng::derive_seed(cfg.seed, seed_stream::kOscillator), person_index);
    const std::string label = person_trials.front().person_label;
    for (int k = 0; k < n_trials; ++k) {
        oscillator::OscillatorParams params;
        params.amplitude_a = base.fit.amplitude_a;
        params.omega_mean = base.fit.omega_mean;
        params.omega_std = base.fit.omega_std;
        params.omega = base.fit.omega_mean;
        params.seed = Rng::derive_seed(person_seed, static_cast<std::uint64_t>(k));
        base.trials.push_back(
            oscillator::generate(params, duration, cfg.pre.target_rate, label, k + 1).traj);
    }
    return base;
}

// --------------------------------------------------------------------------
// Joint comparison of humans vs generative models vs oscillators.

struct ComparisonResult {
    AnalysisResult analysis;  // over the concatenated collection
    std::vector<std::string> persons;
    // heatmaps[plane][metric]: persons x (models then oscillators)
    std::vector<std::string> column_labels;
    std::vector<std::vector<double>> overlap_velocity, distance_velocity;
    std::vector<std::vector<double>> overlap_amplitude, distance_amplitude;
    std::vector<report::DiagonalRow> diagonal_velocity, diagonal_amplitude;
    std::vector<report::ProfileOverlay> overlays;
};

namespace detail {

inline similarity::VelocityProfile mean_profile(const std::vector<const Trajectory*>& trials) {
    similarity::VelocityProfile mean;
    mean.mass.fill(0.0);
    for (const auto* t : trials) {
        const auto p = similarity::velocity_profile(signal::differentiate(*t));
        for (std::size_t b = 0; b < mean.mass.size(); ++b) mean.mass[b] += p.mass[b];
    }
    for (auto& m : mean.mass) m /= static_cast<double>(trials.size());
    return mean;
}

inline const GroupSummary* find_group(const std::vector<GroupSummary>& groups,
                                      const std::string& label, Source source) {
    for (const auto& g : groups)
        if (g.person_label == label && g.source == source) return &g;
    return nullptr;
}

}  // namespace detail

inline ComparisonResult compare(const std::vector<Trajectory>& humans,
                                const std::vector<Trajectory>& generated,
                                const std::vector<Trajectory>& oscillators, double ellipse_mass) {
    if (humans.empty() || generated.empty() || oscillators.empty())
        throw domain_error("compare: all three collections must be non-empty");

    std::vector<Trajectory> all;
    all.reserve(humans.size() + generated.size() + oscillators.size());
    all.insert(all.end(), humans.begin(), humans.end());
    all.insert(all.end(), generated.begin(), generated.end());
    all.insert(all.end(), oscillators.begin(), oscillators.end());

    ComparisonResult result;
    result.analysis = analyze(all, ellipse_mass);

    for (const auto& t : humans)
        if (std::find(result.persons.begin(), result.persons.end(), t.person_label) ==
            result.persons.end())
            result.persons.push_back(t.person_label);
    std::sort(result.persons.begin(), result.persons.end());

    for (const auto& p : result.persons) result.column_labels.push_back("GM:" + p);
    for (const auto& p : result.persons) result.column_labels.push_back("O:" + p);

    auto heatmaps = [&](bool velocity, std::vector<std::vector<double>>& overlaps,
                        std::vector<std::vector<double>>& distances) {
        const auto nan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& person : result.persons) {
            const auto* pg = detail::find_group(result.analysis.groups, person, Source::human);
            std::vector<double> orow, drow;
            for (std::size_t c = 0; c < result.column_labels.size(); ++c) {
                const auto source =
                    c < result.persons.size() ? Source::generated : Source::oscillator;
                const auto& other = result.persons[c % result.persons.size()];
                const auto* og = detail::find_group(result.analysis.groups, other, source);
                std::optional<similarity::CovarianceEllipse> pe, oe;
                if (pg) pe = velocity ? pg->velocity_ellipse : pg->amplitude_ellipse;
                if (og) oe = velocity ? og->velocity_ellipse : og->amplitude_ellipse;
                if (pe && oe) {
                    orow.push_back(similarity::overlap(*pe, *oe));
                    drow.push_back(similarity::center_distance(*pe, *oe));
                } else {
                    orow.push_back(nan);
                    drow.push_back(nan);
                }
            }
            overlaps.push_back(std::move(orow));
            distances.push_back(std::move(drow));
        }
    };
    heatmaps(true, result.overlap_velocity, result.distance_velocity);
    heatmaps(false, result.overlap_amplitude, result.distance_amplitude);

    const auto np = result.persons.size();
    for (std::size_t i = 0; i < np; ++i) {
        result.diagonal_velocity.push_back({result.persons[i], result.distance_velocity[i][i],
                                            result.distance_velocity[i][np + i],
                                            result.overlap_velocity[i][i],
                                            result.overlap_velocity[i][np + i]});
        result.diagonal_amplitude.push_back({result.persons[i], result.distance_amplitude[i][i],
                                             result.distance_amplitude[i][np + i],
                                             result.overlap_amplitude[i][i],
                                             result.overlap_amplitude[i][np + i]});
    }

    auto of_person = [](const std::vector<Trajectory>& set, const std::string& label) {
        std::vector<const Trajectory*> out;
        for (const auto& t : set)
            if (t.person_label == label) out.push_back(&t);
        return out;
    };
    for (const auto& person : result.persons) {
        report::ProfileOverlay o;
        o.person_label = person;
        o.human = detail::mean_profile(of_person(humans, person));
        o.generated = detail::mean_profile(of_person(generated, person));
        o.oscillator = detail::mean_profile(of_person(oscillators, person));
        result.overlays.push_back(std::move(o));
    }
    return result;
}

inline void write_comparison(report::OutputManifest& manifest, const ComparisonResult& cmp) {
    write_analysis(manifest, cmp.analysis);
    manifest.write("overlap_velocity.csv",
                   report::heatmap_csv(cmp.persons, cmp.column_labels, cmp.overlap_velocity));
    manifest.write("distance_velocity.csv",
                   report::heatmap_csv(cmp.persons, cmp.column_labels, cmp.distance_velocity));
    manifest.write("overlap_amplitude.csv",
                   report::heatmap_csv(cmp.persons, cmp.column_labels, cmp.overlap_amplitude));
    manifest.write("distance_amplitude.csv",
                   report::heatmap_csv(cmp.persons, cmp.column_labels, cmp.distance_amplitude));
    manifest.write("diagonal_velocity.csv", report::diagonal_csv(cmp.diagonal_velocity));
    manifest.write("diagonal_amplitude.csv", report::diagonal_csv(cmp.diagonal_amplitude));
    manifest.write("profile_overlays.csv", report::overlay_csv(cmp.overlays));
}

// --------------------------------------------------------------------------
// Config file: one JSON document with optional sections; unknown keys are
// rejected nowhere (forward compatibility), missing keys keep defaults.

inline PipelineConfig config_from_json(const nlohmann::json& j, const PipelineConfig& base) {
    PipelineConfig c = base;
    try {
        if (j.contains("preset")) c = preset_by_name(j.at("preset").get<std::string>());
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("select_duration")) c.select_duration = j.at("select_duration").get<double>();
        if (j.contains("ellipse_mass")) c.ellipse_mass = j.at("ellipse_mass").get<double>();
        if (j.contains("preprocessing")) {
            const auto& p = j.at("preprocessing");
            if (p.contains("cutoff_hz")) c.pre.cutoff_hz = p.at("cutoff_hz").get<double>();
            if (p.contains("filter_order")) c.pre.filter_order = p.at("filter_order").get<int>();
            if (p.contains("target_rate")) c.pre.target_rate = p.at("target_rate").get<double>();
        }
        if (j.contains("network")) {
            const auto& p = j.at("network");
            if (p.contains("input_window_l")) c.net.input_window_l = p.at("input_window_l").get<int>();
            if (p.contains("lstm_units")) c.net.lstm_units = p.at("lstm_units").get<int>();
            if (p.contains("lstm_layers")) c.net.lstm_layers = p.at("lstm_layers").get<int>();
            if (p.contains("learning_rate")) c.net.learning_rate = p.at("learning_rate").get<double>();
            if (p.contains("grad_clip_norm")) c.net.grad_clip_norm = p.at("grad_clip_norm").get<double>();
            c.gen.seed_length_l = c.net.input_window_l;
        }
        if (j.contains("generation")) {
            const auto& p = j.at("generation");
            if (p.contains("beta")) c.gen.beta = p.at("beta").get<double>();
            if (p.contains("total_duration")) c.gen.total_duration = p.at("total_duration").get<double>();
            if (p.contains("guard_bound")) c.gen.guard_bound = p.at("guard_bound").get<double>();
        }
        if (j.contains("training")) {
            const auto& p = j.at("training");
            if (p.contains("window_stride")) c.plan.window_stride = p.at("window_stride").get<int>();
            if (p.contains("train_fraction")) c.plan.train_fraction = p.at("train_fraction").get<double>();
            if (p.contains("batch_size")) c.plan.batch_size = p.at("batch_size").get<int>();
            if (p.contains("epochs")) c.plan.epochs = p.at("epochs").get<int>();
            if (p.contains("checkpoint_every")) c.plan.checkpoint_every = p.at("checkpoint_every").get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace motorsig::pipeline
