#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oed {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (dimensions, parameters, non-PSD moments).
class InputError : public Error {
 public:
  using Error::Error;
};

/// File content that does not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A numerical evaluation produced a non-finite value.
class ComputationError : public Error {
 public:
  using Error::Error;
};

/// The kernel submatrix of a design is numerically singular.
class DegenerateSubsetError : public Error {
 public:
  DegenerateSubsetError(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  /// Pool index whose addition made the submatrix singular.
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Greedy selection ran out of admissible candidates before reaching n.
class DegeneratePoolError : public Error {
 public:
  DegeneratePoolError(std::size_t achieved, const std::string& what)
      : Error(what), achieved_(achieved) {}
  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t achieved_;
};

}  // namespace oed
