#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "motorsig/error.hpp"

namespace motorsig {

enum class Source { human, oscillator, generated };

inline const char* to_string(Source s) {
    switch (s) {
        case Source::human: return "human";
        case Source::oscillator: return "oscillator";
        case Source::generated: return "generated";
    }
    return "unknown";
}

inline Source source_from_string(const std::string& s) {
    if (s == "human") return Source::human;
    if (s == "oscillator") return Source::oscillator;
    if (s == "generated") return Source::generated;
    throw format_error("unknown trajectory source '" + s + "'");
}

// Uniformly sampled 1-D position timeseries in cm. Zero is the sensor
// center, positive is rightward.
struct Trajectory {
    std::string id;
    Source source = Source::human;
    std::string person_label;
    int trial_index = 1;       // 1-based
    double sample_rate = 0.0;  // Hz
    std::vector<double> positions;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(positions.size()) / sample_rate : 0.0;
    }

    void validate() const {
        if (positions.empty()) throw domain_error("trajectory '" + id + "': empty series");
        if (!(sample_rate > 0)) throw domain_error("trajectory '" + id + "': sample_rate must be > 0");
        if (trial_index < 1) throw domain_error("trajectory '" + id + "': trial_index must be >= 1");
        for (double p : positions)
            if (!std::isfinite(p))
                throw domain_error("trajectory '" + id + "': non-finite position sample");
    }
};

inline std::string make_trajectory_id(Source source, const std::string& person_label, int trial_index) {
    std::string prefix;
    switch (source) {
        case Source::human: prefix = "P"; break;
        case Source::oscillator: prefix = "O"; break;
        case Source::generated: prefix = "GM"; break;
    }
    return prefix + ":" + person_label + ":t" + std::to_string(trial_index);
}

// Backward-difference velocity of a trajectory, cm/s, with v(0) = 0.
struct VelocitySeries {
    std::vector<double> values;
    double sample_rate = 0.0;
    std::string parent_id;
};

// Time averages of the positive/negative amplitude envelopes, cm.
struct AmplitudeSummary {
    double mean_positive = 0.0;  // >= 0
    double mean_negative = 0.0;  // <= 0
};

}  // namespace motorsig
