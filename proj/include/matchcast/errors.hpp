#pragma once

#include <stdexcept>
#include <string>

namespace matchcast {

// Base of every error raised by the library. The CLI maps the three
// subclasses to exit codes 1, 2 and 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration or command-line usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

// A model could not be fitted or applied.
class ModelError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public ModelError {
public:
    NonConvergenceError(double grad_norm, int iterations)
        : ModelError("optimizer did not converge after " + std::to_string(iterations) +
                     " iterations (gradient max-norm " + std::to_string(grad_norm) + ")"),
          grad_norm_(grad_norm),
          iterations_(iterations) {}

    double grad_norm() const { return grad_norm_; }
    int iterations() const { return iterations_; }

private:
    double grad_norm_;
    int iterations_;
};

}  // namespace matchcast
