#ifndef IMV_ERRORS_HPP
#define IMV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace imv {

// Shape/extent mismatches between operands.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid argument values (empty input, bad fraction, ...).
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Caller broke an API contract (wrong variant, non-scalar loss, ...).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Configuration rejected during validation.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (CSV, TOML, checkpoint).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures, always carrying the path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Training aborted (non-finite loss and similar).
struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace imv

#endif  // IMV_ERRORS_HPP
