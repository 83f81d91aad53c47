#pragma once

#include <stdexcept>
#include <string>

namespace ionphoton {

// Inconsistent matrix or subsystem dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A matrix that should be a physical state violates Hermiticity, trace or positivity.
class PhysicalityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Far-detuned elimination requested on resonance.
class ResonanceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Adaptive integrator could not make progress.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Reconstruction requested with no usable counts.
class NoDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed configuration or level scheme.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ionphoton
