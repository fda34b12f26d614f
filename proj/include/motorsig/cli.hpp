#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "motorsig/dataset.hpp"
#include "motorsig/error.hpp"
#include "motorsig/pipeline.hpp"

// Command-line surface. Exit codes: 0 success, 1 runtime/IO failure,
// 2 usage or input-parse failure. Diagnostics go to stderr; results are
// files under --out plus a short confirmation on stdout.

namespace motorsig::cli {

namespace fs = std::filesystem;

namespace detail {

inline nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

struct ConfigArgs {
    std::string preset = "desk";
    std::string config_file;

    pipeline::PipelineConfig resolve() const {
        auto cfg = pipeline::preset_by_name(preset);
        if (!config_file.empty()) cfg = pipeline::config_from_json(read_json_file(config_file), cfg);
        return cfg;
    }
};

inline void add_config_flags(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--preset", args.preset, "configuration preset: desk or paper")
        ->capture_default_str();
    cmd->add_option("--config", args.config_file, "pipeline config JSON (overrides the preset)");
}

// Trials of one person, sorted by trial index; person must exist.
inline std::vector<Trajectory> person_trials(const std::vector<Trajectory>& trials,
                                             const std::string& label) {
    std::vector<Trajectory> out;
    for (const auto& t : trials)
        if (t.person_label == label) out.push_back(t);
    if (out.empty()) throw domain_error("no trials for person '" + label + "' in the corpus");
    std::sort(out.begin(), out.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.trial_index < b.trial_index; });
    return out;
}

inline std::vector<std::string> sorted_persons(const dataset::Corpus& corpus) {
    auto persons = corpus.persons();
    std::sort(persons.begin(), persons.end());
    return persons;
}

inline std::size_t person_index_of(const std::vector<std::string>& persons,
                                   const std::string& label) {
    for (std::size_t i = 0; i < persons.size(); ++i)
        if (persons[i] == label) return i;
    throw domain_error("no trials for person '" + label + "' in the corpus");
}

inline std::string epoch_filename(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%05d.bin", epoch);
    return buf;
}

inline void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------
// ingest

struct IngestArgs {
    std::string synthetic_spec, raw_dir, format = "csv", out_dir;
};

inline void cmd_ingest(const IngestArgs& args) {
    if (args.synthetic_spec.empty() == args.raw_dir.empty())
        throw parse_error("ingest: pass exactly one of --synthetic or --raw");

    dataset::Corpus corpus;
    if (!args.synthetic_spec.empty()) {
        const auto spec = read_json_file(args.synthetic_spec);
        int n_trials = 7;
        double duration = 30.0, rate = 100.0;
        try {
            if (spec.contains("trials")) n_trials = spec.at("trials").get<int>();
            if (spec.contains("duration")) duration = spec.at("duration").get<double>();
            if (spec.contains("rate")) rate = spec.at("rate").get<double>();
            for (const auto& p : spec.at("personas")) {
                const auto persona = dataset::persona_from_json(p);
                auto trials = dataset::synth_persona(persona, n_trials, duration, rate);
                corpus.trials.insert(corpus.trials.end(), trials.begin(), trials.end());
            }
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(args.synthetic_spec + ": " + e.what());
        }
    } else {
        if (args.format != "csv")
            throw parse_error("ingest: only --format csv is supported for raw directories");
        corpus = dataset::adapt_raw_directory(args.raw_dir);
    }

    dataset::store(corpus, args.out_dir);
    std::cout << "wrote " << corpus.trials.size() << " trials for " << corpus.persons().size()
              << " persons to " << args.out_dir << "\n";
}

// ---------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::string corpus_dir, out_dir;
    double mass = 0.7;
    ConfigArgs config;
};

inline void cmd_analyze(const AnalyzeArgs& args) {
    auto cfg = args.config.resolve();
    const auto corpus = dataset::load(args.corpus_dir);
    const auto prepped = pipeline::preprocess_corpus(corpus.trials, cfg.pre);
    const auto analysis = pipeline::analyze(prepped, args.mass);
    print_warnings(analysis.warnings);

    report::OutputManifest manifest(args.out_dir);
    pipeline::write_analysis(manifest, analysis);
    manifest.finish();
    std::cout << "analyzed " << prepped.size() << " trials into " << args.out_dir << "\n";
}

// ---------------------------------------------------------------------
// train

struct TrainArgs {
    std::string corpus_dir, out_dir;
    std::vector<std::string> persons;
    ConfigArgs config;
    // -1 / negative means "keep the preset value".
    int epochs = -1, batch_size = -1, stride = -1, checkpoint_every = -1;
    int units = -1, layers = -1, window = -1;
    double learning_rate = -1.0;
    std::int64_t seed = -1;
};

inline pipeline::PipelineConfig apply_train_overrides(const TrainArgs& args) {
    auto cfg = args.config.resolve();
    if (args.epochs > 0) cfg.plan.epochs = args.epochs;
    if (args.batch_size > 0) cfg.plan.batch_size = args.batch_size;
    if (args.stride > 0) cfg.plan.window_stride = args.stride;
    if (args.checkpoint_every > 0) cfg.plan.checkpoint_every = args.checkpoint_every;
    if (args.units > 0) cfg.net.lstm_units = args.units;
    if (args.layers > 0) cfg.net.lstm_layers = args.layers;
    if (args.window > 0) {
        cfg.net.input_window_l = args.window;
        cfg.gen.seed_length_l = args.window;
    }
    if (args.learning_rate > 0.0) cfg.net.learning_rate = args.learning_rate;
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.validate();
    return cfg;
}

inline void cmd_train(const TrainArgs& args) {
    const auto cfg = apply_train_overrides(args);
    const auto corpus = dataset::load(args.corpus_dir);
    const auto prepped = pipeline::preprocess_corpus(corpus.trials, cfg.pre);
    const auto persons = sorted_persons(corpus);
    const auto selected = args.persons.empty() ? persons : args.persons;

    report::OutputManifest manifest(args.out_dir);
    for (const auto& label : selected) {
        const auto index = person_index_of(persons, label);
        const auto trials = person_trials(prepped, label);
        const auto outcome = pipeline::train_person(cfg, trials, index);
        print_warnings(outcome.result.warnings);

        for (const auto& ckpt : outcome.result.checkpoints) {
            const fs::path rel = fs::path("checkpoints") / label / epoch_filename(ckpt.epoch);
            const fs::path full = fs::path(args.out_dir) / rel;
            fs::create_directories(full.parent_path());
            net::save_checkpoint(ckpt, full);
        }
        manifest.write("loss_" + label + ".csv", training::loss_log_csv(outcome.result.log));
        manifest.write("plan_" + label + ".json", training::plan_to_json(outcome.plan).dump(2) + "\n");
        std::cout << "trained " << label << ": " << outcome.result.checkpoints.size()
                  << " checkpoints, final validation nll "
                  << outcome.result.log.back().val_loss << "\n";
    }
    manifest.finish();
}

// ---------------------------------------------------------------------
// select

struct SelectArgs {
    std::string corpus_dir, checkpoints_dir, out_dir;
    std::vector<std::string> persons;
    double duration = -1.0;
    ConfigArgs config;
};

inline std::vector<net::NetworkCheckpoint> load_person_checkpoints(const fs::path& dir) {
    if (!fs::exists(dir)) throw io_error("missing checkpoint directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".bin") files.push_back(entry.path());
    if (files.empty()) throw io_error("no checkpoints in: " + dir.string());
    std::sort(files.begin(), files.end());
    std::vector<net::NetworkCheckpoint> out;
    for (const auto& f : files) out.push_back(net::load_checkpoint(f));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
    return out;
}

inline void cmd_select(const SelectArgs& args) {
    auto cfg = args.config.resolve();
    if (args.duration > 0.0) cfg.select_duration = args.duration;
    const auto corpus = dataset::load(args.corpus_dir);
    const auto prepped = pipeline::preprocess_corpus(corpus.trials, cfg.pre);
    const auto persons = sorted_persons(corpus);
    const auto selected = args.persons.empty() ? persons : args.persons;

    report::OutputManifest manifest(args.out_dir);
    for (const auto& label : selected) {
        const auto index = person_index_of(persons, label);
        const auto trials = person_trials(prepped, label);
        const auto checkpoints = load_person_checkpoints(fs::path(args.checkpoints_dir) / label);
        auto gcfg = pipeline::selection_config(cfg, index);
        // The checkpoint, not the preset, knows the window it was trained with.
        gcfg.seed_length_l = checkpoints.front().config.input_window_l;
        const auto result = training::select(checkpoints, trials, gcfg);

        auto j = training::selection_to_json(result);
        j["person_label"] = label;
        j["best_checkpoint_file"] =
            (fs::path(args.checkpoints_dir) / label / epoch_filename(result.best_checkpoint_epoch))
                .generic_string();
        manifest.write("selection_" + label + ".json", j.dump(2) + "\n");
        std::cout << "selected epoch " << result.best_checkpoint_epoch << " for " << label << "\n";
    }
    manifest.finish();
}

// ---------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string corpus_dir, checkpoint_file, out_dir, person;
    int trial = 1;
    double seed_seconds = -1.0;  // default: window length / rate
    double duration = -1.0;
    std::int64_t rng_seed = -1;
    bool oscillator = false;
    int osc_trials = 7;
};

// Appends to an existing corpus at out_dir so one corpus can accumulate
// several generated trajectories.
inline void append_and_store(dataset::Corpus&& fresh, const fs::path& out_dir) {
    dataset::Corpus all;
    if (fs::exists(out_dir / "manifest.json")) all = dataset::load(out_dir);
    for (auto& t : fresh.trials) {
        const auto dup = std::find_if(all.trials.begin(), all.trials.end(),
                                      [&](const Trajectory& o) { return o.id == t.id; });
        if (dup != all.trials.end())
            *dup = std::move(t);  // regenerating the same id replaces it
        else
            all.trials.push_back(std::move(t));
    }
    dataset::store(all, out_dir);
}

inline void run_generate(const GenerateArgs& args, const ConfigArgs& config) {
    auto cfg = config.resolve();
    if (args.duration > 0.0) cfg.gen.total_duration = args.duration;
    const auto corpus = dataset::load(args.corpus_dir);
    const auto prepped = pipeline::preprocess_corpus(corpus.trials, cfg.pre);
    const auto persons = sorted_persons(corpus);
    if (args.person.empty()) throw parse_error("generate: --person is required");
    const auto index = person_index_of(persons, args.person);
    const auto trials = person_trials(prepped, args.person);

    if (args.oscillator) {
        auto baseline = pipeline::oscillator_baseline(trials, cfg, index, args.osc_trials,
                                                      cfg.gen.total_duration);
        print_warnings(baseline.fit.warnings);
        nlohmann::json prov{{"kind", "oscillator"},
                            {"person_label", args.person},
                            {"amplitude_a", baseline.fit.amplitude_a},
                            {"omega_mean", baseline.fit.omega_mean},
                            {"omega_std", baseline.fit.omega_std},
                            {"trials", args.osc_trials},
                            {"pipeline_seed", cfg.seed}};
        dataset::Corpus fresh;
        fresh.trials = std::move(baseline.trials);
        append_and_store(std::move(fresh), args.out_dir);
        report::write_file(fs::path(args.out_dir) / ("provenance_O_" + args.person + ".json"),
                           prov.dump(2) + "\n");
        std::cout << "wrote " << args.osc_trials << " oscillator trials for " << args.person
                  << " to " << args.out_dir << "\n";
        return;
    }

    if (args.checkpoint_file.empty())
        throw parse_error("generate: pass --checkpoint (or --oscillator)");
    const auto ckpt = net::load_checkpoint(args.checkpoint_file);

    const auto trial_it =
        std::find_if(trials.begin(), trials.end(),
                     [&](const Trajectory& t) { return t.trial_index == args.trial; });
    if (trial_it == trials.end())
        throw domain_error("generate: person '" + args.person + "' has no trial " +
                           std::to_string(args.trial));

    const double seed_seconds = args.seed_seconds > 0.0
                                    ? args.seed_seconds
                                    : ckpt.config.input_window_l / cfg.pre.target_rate;
    const auto seed_samples =
        static_cast<std::size_t>(std::llround(seed_seconds * cfg.pre.target_rate));
    if (static_cast<int>(seed_samples) != ckpt.config.input_window_l)
        throw domain_error("generate: --seed-seconds  must cover exactly the network window (" +
                           std::to_string(ckpt.config.input_window_l) + " samples at " +
                           format_g17(cfg.pre.target_rate) + " Hz)");
    if (trial_it->positions.size() < seed_samples)
        throw domain_error("generate: trial is shorter than the seed window");

    auto gcfg = cfg.gen;
    gcfg.seed_length_l = ckpt.config.input_window_l;
    gcfg.rng_seed = args.rng_seed >= 0 ? static_cast<std::uint64_t>(args.rng_seed) : cfg.seed;

    std::vector<double> seed(trial_it->positions.begin(),
                             trial_it->positions.begin() + static_cast<long>(seed_samples));
    auto traj = gen::generate(ckpt, seed, gcfg, args.person, args.trial);

    nlohmann::json prov{{"kind", "generated"},
                        {"checkpoint", args.checkpoint_file},
                        {"checkpoint_epoch", ckpt.epoch},
                        {"seed_trial", trial_it->id},
                        {"seed_seconds", seed_seconds},
                        {"rng_seed", gcfg.rng_seed}};
    const auto id = traj.id;
    dataset::Corpus fresh;
    fresh.trials.push_back(std::move(traj));
    append_and_store(std::move(fresh), args.out_dir);
    std::string prov_name = "provenance_" + id + ".json";
    for (auto& c : prov_name)
        if (c == ':') c = '_';
    report::write_file(fs::path(args.out_dir) / prov_name, prov.dump(2) + "\n");
    std::cout << "wrote " << id << " to " << args.out_dir << "\n";
}

// ---------------------------------------------------------------------
// compare

struct CompareArgs {
    std::string corpus_dir, generated_dir, oscillators_dir, out_dir;
    double mass = 0.7;
    ConfigArgs config;
};

inline void cmd_compare(const CompareArgs& args) {
    const auto cfg = args.config.resolve();
    const auto humans = pipeline::preprocess_corpus(dataset::load(args.corpus_dir).trials, cfg.pre);
    const auto generated =
        pipeline::preprocess_corpus(dataset::load(args.generated_dir).trials, cfg.pre);
    const auto oscillators =
        pipeline::preprocess_corpus(dataset::load(args.oscillators_dir).trials, cfg.pre);

    const auto cmp = pipeline::compare(humans, generated, oscillators, args.mass);
    print_warnings(cmp.analysis.warnings);

    report::OutputManifest manifest(args.out_dir);
    pipeline::write_comparison(manifest, cmp);
    manifest.finish();
    std::cout << "compared " << cmp.persons.size() << " persons into " << args.out_dir << "\n";
}

}  // namespace detail

// Builds the CLI and executes one invocation. Never throws.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"individual motor signature analytics"};
    app.require_subcommand(1);

    auto ingest = std::make_shared<detail::IngestArgs>();
    auto* ingest_cmd = app.add_subcommand("ingest", "build a canonical corpus");
    ingest_cmd->add_option("--synthetic", ingest->synthetic_spec, "persona spec JSON");
    ingest_cmd->add_option("--raw", ingest->raw_dir, "directory of raw per-trial files");
    ingest_cmd->add_option("--format", ingest->format, "raw file format (csv)");
    ingest_cmd->add_option("--out", ingest->out_dir, "corpus output directory")->required();
    ingest_cmd->callback([ingest] { detail::cmd_ingest(*ingest); });

    auto analyze = std::make_shared<detail::AnalyzeArgs>();
    auto* analyze_cmd = app.add_subcommand("analyze", "similarity-plane reports for a corpus");
    analyze_cmd->add_option("--corpus", analyze->corpus_dir, "corpus directory")->required();
    analyze_cmd->add_option("--out", analyze->out_dir, "report output directory")->required();
    analyze_cmd->add_option("--mass", analyze->mass, "ellipse probability mass");
    detail::add_config_flags(analyze_cmd, analyze->config);
    analyze_cmd->callback([analyze] { detail::cmd_analyze(*analyze); });

    auto train = std::make_shared<detail::TrainArgs>();
    auto* train_cmd = app.add_subcommand("train", "train per-person models with checkpoints");
    train_cmd->add_option("--corpus", train->corpus_dir, "corpus directory")->required();
    train_cmd->add_option("--out", train->out_dir, "artifact output directory")->required();
    train_cmd->add_option("--person", train->persons, "person label (repeatable; default all)");
    detail::add_config_flags(train_cmd, train->config);
    train_cmd->add_option("--epochs", train->epochs, "training epochs");
    train_cmd->add_option("--batch-size", train->batch_size, "mini-batch size");
    train_cmd->add_option("--stride", train->stride, "window stride");
    train_cmd->add_option("--checkpoint-every", train->checkpoint_every, "checkpoint interval");
    train_cmd->add_option("--units", train->units, "LSTM units per layer");
    train_cmd->add_option("--layers", train->layers, "LSTM layers");
    train_cmd->add_option("--window", train->window, "input window length (samples)");
    train_cmd->add_option("--learning-rate", train->learning_rate, "Adam learning rate");
    train_cmd->add_option("--seed", train->seed, "pipeline seed");
    train_cmd->callback([train] { detail::cmd_train(*train); });

    auto select = std::make_shared<detail::SelectArgs>();
    auto* select_cmd = app.add_subcommand("select", "pick the best checkpoint per person");
    select_cmd->add_option("--corpus", select->corpus_dir, "corpus directory")->required();
    select_cmd->add_option("--checkpoints", select->checkpoints_dir, "checkpoints directory")
        ->required();
    select_cmd->add_option("--out", select->out_dir, "report output directory")->required();
    select_cmd->add_option("--person", select->persons, "person label (repeatable; default all)");
    select_cmd->add_option("--duration", select->duration, "generated seconds per candidate");
    detail::add_config_flags(select_cmd, select->config);
    select_cmd->callback([select] { detail::cmd_select(*select); });

    auto generate = std::make_shared<detail::GenerateArgs>();
    auto generate_config = std::make_shared<detail::ConfigArgs>();
    auto* generate_cmd = app.add_subcommand("generate", "synthesize trajectories");
    generate_cmd->add_option("--corpus", generate->corpus_dir, "corpus directory")->required();
    generate_cmd->add_option("--out", generate->out_dir, "output corpus directory")->required();
    generate_cmd->add_option("--person", generate->person, "person label")->required();
    generate_cmd->add_option("--checkpoint", generate->checkpoint_file, "checkpoint file");
    generate_cmd->add_option("--trial", generate->trial, "seed trial index");
    generate_cmd->add_option("--seed-seconds", generate->seed_seconds, "seed span in seconds");
    generate_cmd->add_option("--duration", generate->duration, "total seconds to synthesize");
    generate_cmd->add_option("--rng-seed", generate->rng_seed, "sampling seed");
    generate_cmd->add_flag("--oscillator", generate->oscillator, "fixed-oscillator baseline");
    generate_cmd->add_option("--trials", generate->osc_trials, "oscillator trial count");
    detail::add_config_flags(generate_cmd, *generate_config);
    generate_cmd->callback(
        [generate, generate_config] { detail::run_generate(*generate, *generate_config); });

    auto compare = std::make_shared<detail::CompareArgs>();
    auto* compare_cmd = app.add_subcommand("compare", "humans vs models vs oscillators");
    compare_cmd->add_option("--corpus", compare->corpus_dir, "human corpus directory")->required();
    compare_cmd->add_option("--generated", compare->generated_dir, "generated corpus directory")
        ->required();
    compare_cmd->add_option("--oscillators", compare->oscillators_dir, "oscillator corpus directory")
        ->required();
    compare_cmd->add_option("--out", compare->out_dir, "report output directory")->required();
    compare_cmd->add_option("--mass", compare->mass, "ellipse probability mass");
    detail::add_config_flags(compare_cmd, compare->config);
    compare_cmd->callback([compare] { detail::cmd_compare(*compare); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, returns 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace motorsig::cli
