#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sdfvr {

// Bad user-supplied configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension / precondition violations on library calls.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid parameter values (non-positive radius, alpha <= 0, ...).
struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FilesystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimization diverged; carries the loss history recorded so far.
struct TrainingError : std::runtime_error {
    std::vector<double> history;
    TrainingError(const std::string& msg, std::vector<double> h)
        : std::runtime_error(msg), history(std::move(h)) {}
};

// Consistency evaluation could not produce a result (e.g. every ray filtered).
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sdfvr
