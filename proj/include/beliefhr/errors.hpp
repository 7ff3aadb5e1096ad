#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace beliefhr {

// Broad classes of failure; the CLI maps each class to an exit status.
enum class ErrorClass { kConfig, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

// Invalid argument values (sigma <= 0, m < bin_count, Nyquist violations...).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ErrorClass::kConfig, what) {}
};

// Missing or inconsistent configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::kConfig, what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

// A parsed value violates a structural invariant (row sums, monotone times).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what)
      : Error(ErrorClass::kData, source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Prediction and emission share no mass to machine precision.
class BeliefCollapseError : public Error {
 public:
  explicit BeliefCollapseError(std::size_t timestep)
      : Error(ErrorClass::kNumeric,
              "belief collapse at timestep " + std::to_string(timestep) +
                  " (normalizer below 1e-300)"),
        timestep_(timestep) {}
  std::size_t timestep() const noexcept { return timestep_; }

 private:
  std::size_t timestep_;
};

class DecodeFailureError : public Error {
 public:
  explicit DecodeFailureError(std::size_t timestep)
      : Error(ErrorClass::kNumeric, "viterbi decode failure at timestep " +
                                        std::to_string(timestep) +
                                        ": every state has zero probability"),
        timestep_(timestep) {}
  std::size_t timestep() const noexcept { return timestep_; }

 private:
  std::size_t timestep_;
};

}  // namespace beliefhr
