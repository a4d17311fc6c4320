#pragma once

#include <stdexcept>
#include <string>

#include "ipgobs/types.hpp"

namespace ipgobs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes disagree with the model they are used with.
class DimensionError : public Error {
   public:
    using Error::Error;
};

/// Invalid or unsupported configuration, caught before any iteration runs.
class ConfigError : public Error {
   public:
    using Error::Error;
};

/// A function returned NaN/Inf where a finite value was required.
class NumericalError : public Error {
   public:
    using Error::Error;
};

/// An operation was called with arguments violating its precondition.
class PreconditionError : public Error {
   public:
    using Error::Error;
};

/// Too few usable samples for a statistical fit.
class InsufficientDataError : public Error {
   public:
    using Error::Error;
};

/// Observer iterate left the finite range (or exceeded the blow-up bound) at (k, i).
class DivergenceError : public NumericalError {
   public:
    DivergenceError(int k, int i, const std::string& what)
        : NumericalError("divergence at k=" + std::to_string(k) + ", i=" + std::to_string(i) + ": " + what),
          k_(k),
          i_(i) {}

    int k() const { return k_; }
    int i() const { return i_; }

   private:
    int k_;
    int i_;
};

/// Observability Jacobian singular or too ill-conditioned to solve against.
class SingularJacobianError : public NumericalError {
   public:
    SingularJacobianError(Vector w, double condition_estimate, const std::string& what)
        : NumericalError(what), w_(std::move(w)), condition_(condition_estimate) {}

    const Vector& w() const { return w_; }
    double condition_estimate() const { return condition_; }

   private:
    Vector w_;
    double condition_;
};

}  // namespace ipgobs
