#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "motorsig/error.hpp"
#include "motorsig/numio.hpp"
#include "motorsig/rng.hpp"
#include "motorsig/trajectory.hpp"

namespace motorsig::dataset {

// ---------------------------------------------------------------------------
// Raw ingest
// ---------------------------------------------------------------------------

enum class RawFormat { csv, json };

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ' && c != '\t' && c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline bool is_numeric_token(const std::string& tok) {
    try {
        parse_double(tok, "");
        return true;
    } catch (const error&) {
        return false;
    }
}

// Infer the sample rate from a timestamp column and verify the grid is
// uniform (jitter tolerance 1e-6 s) and strictly increasing.
inline double rate_from_timestamps(const std::vector<double>& t) {
    if (t.size() < 2) throw format_error("cannot infer a sample rate from a single timestamp");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1]))
            throw format_error("timestamps not strictly increasing at row " + std::to_string(i + 1));
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - (t.front() + static_cast<double>(i) * dt)) > 1e-6)
            throw format_error("timestamps deviate from a uniform grid at row " + std::to_string(i + 1));
    return 1.0 / dt;
}

inline Trajectory finish_ingest(std::vector<double> positions, double rate,
                                const std::string& person_label, int trial_index) {
    if (positions.empty()) throw domain_error("ingest: empty series");
    Trajectory traj;
    traj.source = Source::human;
    traj.person_label = person_label;
    traj.trial_index = trial_index;
    traj.id = make_trajectory_id(Source::human, person_label, trial_index);
    traj.sample_rate = rate;
    traj.positions = std::move(positions);
    traj.validate();
    return traj;
}

inline Trajectory ingest_csv(std::istream& in, const std::string& person_label, int trial_index,
                             double declared_rate) {
    std::vector<double> times, positions;
    std::string line;
    int line_no = 0;
    bool saw_data = false;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = split_csv(line);
        if (toks.size() == 1 && toks[0].empty()) continue;  // blank line

        if (!saw_data) {
            // A leading non-numeric row is a header.
            bool numeric = true;
            for (const auto& t : toks) numeric = numeric && is_numeric_token(t);
            if (!numeric && line_no == 1) continue;
            saw_data = true;
            columns = toks.size();
            if (columns != 1 && columns != 2)
                throw format_error("line " + std::to_string(line_no) + ": expected 1 or 2 columns, got " +
                                   std::to_string(toks.size()));
        }
        if (toks.size() != columns)
            throw parse_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(columns) + " columns, got " + std::to_string(toks.size()));

        const std::string ctx = "line " + std::to_string(line_no);
        if (columns == 2) {
            times.push_back(parse_double(toks[0], ctx));
            positions.push_back(parse_double(toks[1], ctx));
        } else {
            positions.push_back(parse_double(toks[0], ctx));
        }
    }

    if (positions.empty()) throw domain_error("ingest: empty series");
    double rate = declared_rate;
    if (columns == 2 && times.size() >= 2) {
        rate = rate_from_timestamps(times);
    } else if (!(declared_rate > 0.0)) {
        throw format_error(columns == 2 ? "cannot infer a sample rate from a single row"
                                        : "no time column and no declared sample rate");
    }
    return finish_ingest(std::move(positions), rate, person_label, trial_index);
}

inline Trajectory ingest_json(std::istream& in, const std::string& person_label, int trial_index,
                              double declared_rate) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("positions") || !j["positions"].is_array())
        throw format_error("json: expected an object with a 'positions' array");

    std::vector<double> positions;
    for (const auto& v : j["positions"]) {
        if (!v.is_number()) throw parse_error("json: non-numeric position entry");
        positions.push_back(v.get<double>());
    }

    double rate = declared_rate;
    if (j.contains("sample_rate")) {
        if (!j["sample_rate"].is_number()) throw format_error("json: sample_rate must be a number");
        rate = j["sample_rate"].get<double>();
    } else if (j.contains("time")) {
        std::vector<double> t;
        for (const auto& v : j["time"]) {
            if (!v.is_number()) throw parse_error("json: non-numeric time entry");
            t.push_back(v.get<double>());
        }
        if (t.size() != positions.size()) throw format_error("json: time/positions length mismatch");
        rate = rate_from_timestamps(t);
    } else if (!(rate > 0.0)) {
        throw format_error("json: need sample_rate, a time array, or a declared rate");
    }
    return finish_ingest(std::move(positions), rate, person_label, trial_index);
}

}  // namespace detail

inline Trajectory ingest_raw(std::istream& in, RawFormat format, const std::string& person_label,
                             int trial_index, double declared_rate = 0.0) {
    switch (format) {
        case RawFormat::csv: return detail::ingest_csv(in, person_label, trial_index, declared_rate);
        case RawFormat::json: return detail::ingest_json(in, person_label, trial_index, declared_rate);
    }
    throw domain_error("ingest: unknown format");
}

// ---------------------------------------------------------------------------
// Synthetic personas
// ---------------------------------------------------------------------------

// Test-fixture stand-in for a human participant: a sinusoid whose amplitude
// and instantaneous frequency drift as mean-reverting AR(1) walks, with the
// negative half-swing scaled by an asymmetry ratio.
struct PersonaSpec {
    std::string label;
    double base_amplitude = 0.0;   // cm
    double base_frequency = 0.0;   // Hz
    double amplitude_jitter = 0.0; // relative stationary std
    double frequency_jitter = 0.0;
    double asymmetry = 1.0;        // negative-to-positive amplitude ratio
    std::uint64_t seed = 0;

    void validate() const {
        if (label.empty()) throw domain_error("persona: empty label");
        if (!(base_amplitude > 0.0)) throw domain_error("persona: base_amplitude must be > 0");
        if (!(base_frequency > 0.0)) throw domain_error("persona: base_frequency must be > 0");
        if (amplitude_jitter < 0.0 || frequency_jitter < 0.0)
            throw domain_error("persona: jitters must be >= 0");
        if (!(asymmetry > 0.0)) throw domain_error("persona: asymmetry must be > 0");
    }
};

inline PersonaSpec persona_from_json(const nlohmann::json& j) {
    PersonaSpec s;
    s.label = j.at("label").get<std::string>();
    s.base_amplitude = j.at("base_amplitude").get<double>();
    s.base_frequency = j.at("base_frequency").get<double>();
    s.amplitude_jitter = j.value("amplitude_jitter", 0.0);
    s.frequency_jitter = j.value("frequency_jitter", 0.0);
    s.asymmetry = j.value("asymmetry", 1.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
}

inline std::vector<Trajectory> synth_persona(const PersonaSpec& spec, int n_trials,
                                             double duration, double rate) {
    spec.validate();
    if (n_trials < 1) throw domain_error("synth_persona: n_trials must be >= 1");
    if (!(duration > 0.0) || !(rate > 0.0))
        throw domain_error("synth_persona: duration and rate must be > 0");

    constexpr double rho = 0.99;  // per-sample mean reversion
    const double step_scale = std::sqrt(1.0 - rho * rho);  // keeps stationary std = jitter
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));

    std::vector<Trajectory> out;
    for (int trial = 1; trial <= n_trials; ++trial) {
        Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(trial));
        Trajectory traj;
        traj.source = Source::human;
        traj.person_label = spec.label;
        traj.trial_index = trial;
        traj.id = make_trajectory_id(Source::human, spec.label, trial);
        traj.sample_rate = rate;
        traj.positions.assign(n, 0.0);

        double ar_amp = 0.0, ar_freq = 0.0, phase = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ar_amp = rho * ar_amp + spec.amplitude_jitter * step_scale * rng.normal();
            ar_freq = rho * ar_freq + spec.frequency_jitter * step_scale * rng.normal();
            const double amp = spec.base_amplitude * std::max(1.0 + ar_amp, 0.05);
            const double freq = spec.base_frequency * std::max(1.0 + ar_freq, 0.05);
            const double s = std::sin(phase);
            traj.positions[i] = amp * s * (s < 0.0 ? spec.asymmetry : 1.0);
            phase += 2.0 * M_PI * freq / rate;
        }
        out.push_back(std::move(traj));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonical corpus
// ---------------------------------------------------------------------------

struct Corpus {
    std::vector<Trajectory> trials;

    std::vector<std::string> persons() const {
        std::vector<std::string> labels;
        for (const auto& t : trials)
            if (std::find(labels.begin(), labels.end(), t.person_label) == labels.end())
                labels.push_back(t.person_label);
        return labels;
    }

    std::vector<const Trajectory*> trials_of(const std::string& label) const {
        std::vector<const Trajectory*> out;
        for (const auto& t : trials)
            if (t.person_label == label) out.push_back(&t);
        return out;
    }
};

inline constexpr int kManifestVersion = 1;

namespace detail {

inline std::string trial_filename(const Trajectory& t) {
    std::string name = t.id;
    std::replace(name.begin(), name.end(), ':', '_');
    return name + ".csv";
}

}  // namespace detail

// One CSV per trial (t_seconds, position_cm) plus a JSON manifest. Values
// are printed with 17 significant digits so store/load round-trips bits.
inline void store(const Corpus& corpus, const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    fs::create_directories(path / "trials");

    nlohmann::json manifest;
    manifest["version"] = kManifestVersion;
    manifest["trials"] = nlohmann::json::array();
    for (const auto& t : corpus.trials) {
        t.validate();
        const std::string fname = detail::trial_filename(t);
        manifest["trials"].push_back({{"person_label", t.person_label},
                                      {"trial_index", t.trial_index},
                                      {"sample_rate", t.sample_rate},
                                      {"source", to_string(t.source)},
                                      {"file", "trials/" + fname}});

        std::ofstream out(path / "trials" / fname);
        if (!out) throw io_error("cannot write " + (path / "trials" / fname).string());
        out << "t_seconds,position_cm\n";
        for (std::size_t i = 0; i < t.positions.size(); ++i)
            out << format_g17(static_cast<double>(i) / t.sample_rate) << ","
                << format_g17(t.positions[i]) << "\n";
        if (!out.good()) throw io_error("short write to " + fname);
    }

    std::ofstream mf(path / "manifest.json");
    if (!mf) throw io_error("cannot write manifest at " + path.string());
    mf << manifest.dump(2) << "\n";
}

inline Corpus load(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    const fs::path mpath = path / "manifest.json";
    if (!fs::exists(mpath)) throw io_error("missing manifest: " + mpath.string());

    std::ifstream mf(mpath);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mf);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("manifest: ") + e.what());
    }
    if (!manifest.contains("version") || manifest["version"].get<int>() != kManifestVersion)
        throw format_error("manifest version mismatch: expected " + std::to_string(kManifestVersion));

    // Surface every missing file at once.
    std::string missing;
    for (const auto& entry : manifest["trials"]) {
        const fs::path f = path / entry["file"].get<std::string>();
        if (!fs::exists(f)) missing += (missing.empty() ? "" : ", ") + f.string();
    }
    if (!missing.empty()) throw io_error("partial corpus, missing trials: " + missing);

    Corpus corpus;
    for (const auto& entry : manifest["trials"]) {
        std::ifstream in(path / entry["file"].get<std::string>());
        if (!in) throw io_error("cannot open " + entry["file"].get<std::string>());
        const double manifest_declared = entry["sample_rate"].get<double>();
        Trajectory t = detail::ingest_csv(in, entry["person_label"].get<std::string>(),
                                          entry["trial_index"].get<int>(), manifest_declared);
        t.source = source_from_string(entry["source"].get<std::string>());
        t.id = make_trajectory_id(t.source, t.person_label, t.trial_index);
        if (std::abs(t.sample_rate - manifest_declared) > 1e-6 * manifest_declared)
            throw format_error("trial " + t.id + ": file rate disagrees with manifest");
        t.sample_rate = manifest_declared;  // manifest is authoritative, bit-exact
        corpus.trials.push_back(std::move(t));
    }
    return corpus;
}

// The reference corpus shape: 5 persons with 7 trials each.
inline bool is_paper_shaped(const Corpus& corpus) {
    std::map<std::string, int> counts;
    for (const auto& t : corpus.trials) ++counts[t.person_label];
    if (counts.size() != 5) return false;
    for (const auto& [label, n] : counts)
        if (n != 7) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Raw-directory adapter
// ---------------------------------------------------------------------------

// Best-effort adapter for an external dataset laid out as one CSV per trial
// with names like "<person>_<trial>.csv" or "<person>-t<trial>.csv". Every
// mismatch fails loudly and points at the conversion guide instead of
// guessing further.
inline Corpus adapt_raw_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw io_error("raw dataset path is not a directory: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw io_error("no .csv files in " + dir.string() +
                       "; see README section 'Converting a raw dataset'");

    Corpus corpus;
    for (const auto& f : files) {
        const std::string stem = f.stem().string();
        const auto sep = stem.find_last_of("_-");
        std::string trial_part = sep == std::string::npos ? "" : stem.substr(sep + 1);
        if (!trial_part.empty() && (trial_part[0] == 't' || trial_part[0] == 'T'))
            trial_part = trial_part.substr(1);
        int trial = 0;
        try {
            std::size_t used = 0;
            trial = std::stoi(trial_part, &used);
            if (used != trial_part.size()) trial = 0;
        } catch (...) {
            trial = 0;
        }
        if (sep == std::string::npos || trial < 1)
            throw io_error("cannot derive person/trial from file name '" + f.filename().string() +
                           "'; see README section 'Converting a raw dataset'");

        std::ifstream in(f);
        if (!in) throw io_error("cannot open " + f.string());
        try {
            corpus.trials.push_back(detail::ingest_csv(in, stem.substr(0, sep), trial, 0.0));
        } catch (const error& e) {
            throw io_error("while converting '" + f.filename().string() + "': " + e.what() +
                           "; see README section 'Converting a raw dataset'");
        }
    }
    return corpus;
}

}  // namespace motorsig::dataset
