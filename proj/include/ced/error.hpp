#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ced {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad syntax, missing fields, wrong shapes.
class ConfigError : public Error {
 public:
  ConfigError(std::string locus, std::string what)
      : Error(locus.empty() ? what : locus + ": " + what), locus_(std::move(locus)), message_(std::move(what)) {}
  const std::string& locus() const noexcept { return locus_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string locus_;
  std::string message_;
};

// A parsed value violates a type invariant. `field` names the offender.
class InvariantError : public Error {
 public:
  InvariantError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Solver or integrator failed for numerical reasons.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Requested parameters leave the model's valid domain (e.g. overdamped SFR).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace ced
