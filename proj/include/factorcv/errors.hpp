#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace factorcv {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed something that violates a precondition (bad sizes, bad
/// fold counts, malformed files). The CLI maps these to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// The numbers themselves made the computation undefined. Exit code 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class EmptyMatrix : public UsageError {
 public:
  EmptyMatrix() : UsageError("matrix has zero rows or zero columns") {}
};

class DimensionError : public UsageError {
 public:
  using UsageError::UsageError;
};

class BadFoldCount : public UsageError {
 public:
  using UsageError::UsageError;
};

class ParseError : public UsageError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : UsageError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyPanel : public UsageError {
 public:
  using UsageError::UsageError;
};

class IoError : public UsageError {
 public:
  using UsageError::UsageError;
};

class NonFiniteInput : public NumericalError {
 public:
  NonFiniteInput() : NumericalError("input contains NaN or Inf") {}
};

/// Carries the (fold, d) location when raised from inside a DCV sweep.
class FoldNumericalError : public NumericalError {
 public:
  FoldNumericalError(const std::string& what, std::optional<int> fold,
                     std::optional<int> d)
      : NumericalError(decorate(what, fold, d)), fold_(fold), d_(d) {}

  std::optional<int> fold() const noexcept { return fold_; }
  std::optional<int> working_d() const noexcept { return d_; }

 private:
  static std::string decorate(const std::string& what, std::optional<int> fold,
                              std::optional<int> d) {
    std::string out = what;
    if (fold || d) {
      out += " (";
      if (fold) out += "fold " + std::to_string(*fold);
      if (fold && d) out += ", ";
      if (d) out += "d=" + std::to_string(*d);
      out += ")";
    }
    return out;
  }

  std::optional<int> fold_;
  std::optional<int> d_;
};

class RankDeficient : public FoldNumericalError {
 public:
  explicit RankDeficient(const std::string& what,
                         std::optional<int> fold = std::nullopt,
                         std::optional<int> d = std::nullopt)
      : FoldNumericalError(what, fold, d) {}
};

class LeverageSaturated : public FoldNumericalError {
 public:
  explicit LeverageSaturated(const std::string& what,
                             std::optional<int> fold = std::nullopt,
                             std::optional<int> d = std::nullopt)
      : FoldNumericalError(what, fold, d) {}
};

}  // namespace factorcv
