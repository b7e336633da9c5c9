#pragma once

#include <stdexcept>
#include <string>

namespace latentcd {

// Invalid configuration, file contents, or argument values.
// The command line tool maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical divergence (NaN/Inf loss or gradients) during training.
// Raised before any parameter mutation so the model stays usable. Exit code 2.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem or file format failure. Exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace latentcd
