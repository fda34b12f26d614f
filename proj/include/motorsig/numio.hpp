#pragma once

#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <string>

#include "motorsig/error.hpp"

namespace motorsig {

// All numeric report output goes through this: 17 significant digits
// round-trip an IEEE double exactly, so CSVs can be re-read without loss.
inline std::string format_g17(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// Shorter form for SVG coordinates where exactness is not needed.
inline std::string format_g6(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

// Strict double parser: the whole token must be consumed and the result
// finite. `context` names the offending location in the error message.
inline double parse_double(const std::string& token, const std::string& context) {
    if (token.empty()) throw parse_error("empty numeric field at " + context);
    const char* begin = token.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0'))
        throw parse_error("malformed number '" + token + "' at " + context);
    if (!std::isfinite(value))
        throw parse_error("non-finite number '" + token + "' at " + context);
    return value;
}

}  // namespace motorsig
