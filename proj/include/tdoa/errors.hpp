#pragma once

#include <stdexcept>
#include <string>

namespace tdoa {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad shapes, out-of-range indices, malformed configuration.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// The inputs are well-formed but the requested computation has no
/// (unique, finite) answer.
class NumericalError : public Error {
public:
  using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Evaluation point coincides with a sensor, or an information matrix is singular.
class SingularityError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class RankDeficientError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Planar inversion: the TDOA pair is not produced by any source.
class NotInImageError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Planar inversion: the TDOA pair lies on the tangent ellipse and only
/// corresponds to a source placed at infinity.
class SourceAtInfinityError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace tdoa
