#pragma once

#include <stdexcept>
#include <string>

namespace semiq {

/// Coarse failure categories; the CLI maps them one-to-one onto exit codes.
enum class ErrorCategory : int {
    config = 1,       // bad input file / flags / invariant violations at setup
    numerical = 2,    // integration or algebra failure at runtime
    unreachable = 3,  // requested regime does not exist (pure/delta limits)
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

/// The multiplier representation is undefined at or below I = hbar^2/4.
struct PureLimitError : Error {
    explicit PureLimitError(const std::string& what) : Error(ErrorCategory::unreachable, what) {}
};

/// The classical Gaussian degenerates to a Dirac delta at I_cl = 0.
struct DeltaLimitError : Error {
    explicit DeltaLimitError(const std::string& what) : Error(ErrorCategory::unreachable, what) {}
};

struct DriftExceededError : NumericalError {
    explicit DriftExceededError(const std::string& what) : NumericalError(what) {}
};

struct StepUnderflowError : NumericalError {
    explicit StepUnderflowError(const std::string& what) : NumericalError(what) {}
};

struct NoCrossingsError : NumericalError {
    explicit NoCrossingsError(const std::string& what) : NumericalError(what) {}
};

struct NonConvergedError : NumericalError {
    explicit NonConvergedError(const std::string& what) : NumericalError(what) {}
};

}  // namespace semiq
