#pragma once

#include <stdexcept>
#include <string>

namespace tdl {

// Invalid argument outside a function's domain (x <= 0, |arcsin arg| > 1, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularError : ConvergenceError {
  using ConvergenceError::ConvergenceError;
};

struct NotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tdl
