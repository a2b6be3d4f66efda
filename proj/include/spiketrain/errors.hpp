#ifndef SPIKETRAIN_ERRORS_HPP
#define SPIKETRAIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spiketrain {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sequences of incompatible length, or an empty signal.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input values (NaN nodes, non-positive bounds, bad config).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The Hankel system has fewer than the requested number of spikes.
class ModelOrderError : public Error {
 public:
  using Error::Error;
};

/// Prony roots are not real within tolerance.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

/// A Jacobian that must be inverted is numerically singular.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Query outside the measured band, or a bandwidth above 1/(2 pi h) for an
/// adversarial pair.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Two signals whose Fourier transforms agree to roundoff.
class UnderflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace spiketrain

#endif  // SPIKETRAIN_ERRORS_HPP
