#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsglasso {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or non-finite input, dimension mismatches, bad flags.
class InputError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (e.g. q outside (0,1)).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A matrix expected to be positive definite is not.
class DefinitenessError : public Error {
 public:
  DefinitenessError(const std::string& what, std::size_t pivot)
      : Error(what + " (non-positive pivot at index " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// A dense linear system is numerically singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

}  // namespace dsglasso
