#pragma once

#include <stdexcept>
#include <string>

namespace cgigan {

/// Violated precondition on an argument (shape mismatch, out-of-range value).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model or run configuration that cannot be realised.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed input data file. `file()` names the offender.
class IngestionError : public std::runtime_error {
 public:
  IngestionError(std::string file, const std::string& what)
      : std::runtime_error(file + ": " + what), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

/// A cached artifact whose format or version this build cannot read.
class IncompatibleFormat : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required artifact is absent. `producer()` names the command that makes it.
class DependencyError : public std::runtime_error {
 public:
  DependencyError(std::string producer, const std::string& what)
      : std::runtime_error(what + " (run `" + producer + "` first)"), producer_(std::move(producer)) {}
  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string producer_;
};

/// Training produced a NaN/Inf in the named loss term.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(std::string term, const std::string& what)
      : std::runtime_error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// A trained model failed its quality thresholds.
class TrainingQualityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cgigan
