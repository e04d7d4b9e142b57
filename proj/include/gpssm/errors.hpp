#ifndef GPSSM_ERRORS_HPP
#define GPSSM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gpssm {

// Base class for everything this library throws.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite or otherwise out-of-contract arguments.
struct InvalidInputError : Error {
    explicit InvalidInputError(const std::string& msg) : Error(msg) {}
};

// A symmetric factorization failed even after jitter.
struct IllConditionedError : Error {
    IllConditionedError(const std::string& msg, double pivot)
        : Error(msg + " (smallest pivot " + std::to_string(pivot) + ")"),
          smallest_pivot(pivot) {}
    double smallest_pivot;
};

// Input that is structurally empty or too small to act on
// (all-missing grid, single-sample trace, too few draws).
struct DegenerateInputError : Error {
    explicit DegenerateInputError(const std::string& msg) : Error(msg) {}
};

// Bad run configuration (files, iteration counts, layout mismatches).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed data files.
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

}  // namespace gpssm

#endif
