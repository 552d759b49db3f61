#pragma once

#include <stdexcept>
#include <string>

namespace flexquad {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class NonFiniteDerivative : public Error {
 public:
  using Error::Error;
};

class RankDeficientConstraints : public Error {
 public:
  using Error::Error;
};

class InputOutOfRange : public Error {
 public:
  using Error::Error;
};

class ProjectFirst : public Error {
 public:
  using Error::Error;
};

// Simulator failed to produce a usable state; ends the episode.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class StaleCache : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class DivergedTraining : public Error {
 public:
  using Error::Error;
};

class ExplodingUnroll : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

class MissingArtifact : public Error {
 public:
  using Error::Error;
};

class RejectionExhausted : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

template <typename E = Error>
inline void check(bool cond, const std::string& msg) {
  if (!cond) throw E(msg);
}

}  // namespace flexquad
