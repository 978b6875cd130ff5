#ifndef PREDDF_COMMON_HPP
#define PREDDF_COMMON_HPP

#include <stdexcept>
#include <string>

namespace preddf {

// Bad arguments, rank/threshold violations, unparseable input. CLI exit 2.
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Conditioning failures, non-finite results, failed convergence. CLI exit 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const char* version_string() { return "preddf-0.1.0"; }

}  // namespace preddf

#endif
