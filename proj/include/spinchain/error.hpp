#pragma once

#include <stdexcept>
#include <string>

namespace spinchain {

/// Invalid user-facing configuration (bad field value, missing key, unsupported spin).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A requested basis or matrix would exceed the configured memory budget.
class CapacityError : public std::length_error {
  public:
    CapacityError(const std::string &what, std::size_t requested)
        : std::length_error(what), requested_(requested) {}
    std::size_t requested() const noexcept { return requested_; }

  private:
    std::size_t requested_;
};

/// Iterative eigensolver gave up before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string &what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

  private:
    double best_residual_;
};

/// A density matrix or spectrum failed a physical sanity check (negative weight, bad trace).
class IntegrityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Finite-difference stencil with a vanishing denominator.
class SingularityError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Reading or writing an output file failed.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace spinchain
