#pragma once

#include <stdexcept>
#include <string>

namespace rfa {

// Invalid capture/scene/pipeline configuration. The message names the
// violated invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedSourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Frames with different frequency calibration were combined.
class CalibrationMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An outgoing request would leak evaluation metadata to a model.
class HygieneError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public TransportError {
 public:
  TimeoutError(const std::string& what, double elapsed_s)
      : TransportError(what), elapsed_s_(elapsed_s) {}
  double elapsed_s() const noexcept { return elapsed_s_; }

 private:
  double elapsed_s_;
};

}  // namespace rfa
