#pragma once

#include <stdexcept>
#include <string>

namespace diskbif {

// Bad user input: unparsable spec source, unknown identifier, parameter out
// of its admissible range, malformed config. CLI exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failure: step-size underflow, missing zero crossing,
// non-monotone time variable, divergent iteration. CLI exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace diskbif
