#pragma once

#include <stdexcept>
#include <string>

namespace motorsig {

// Base class for everything this library throws on purpose.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (CSV/JSON rows, bad numbers). CLI exit code 2.
struct parse_error : error {
    explicit parse_error(const std::string& msg) : error(msg) {}
};

// Structurally valid input that violates a format contract
// (non-uniform timestamps, version mismatch, missing manifest entries).
struct format_error : error {
    explicit format_error(const std::string& msg) : error(msg) {}
};

// Precondition violation on an operation's arguments.
struct domain_error : error {
    explicit domain_error(const std::string& msg) : error(msg) {}
};

struct io_error : error {
    explicit io_error(const std::string& msg) : error(msg) {}
};

// Non-finite value produced where finite arithmetic was expected.
struct numeric_error : error {
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

// Autoregressive generation left the plausible workspace or lost finiteness.
struct generation_error : error {
    explicit generation_error(const std::string& msg) : error(msg) {}
};

// Specifically: |position| crossed the guard bound. Model selection treats
// this as "candidate unusable", not as a fatal failure.
struct divergence_error : generation_error {
    explicit divergence_error(const std::string& msg) : generation_error(msg) {}
};

}  // namespace motorsig
