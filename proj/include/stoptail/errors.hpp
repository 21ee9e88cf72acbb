#pragma once

#include <stdexcept>
#include <string>

namespace stoptail {

// Bad inputs: shapes, stochasticity, domains, reducible chains.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iteration did not converge, overflow, ill-conditioned intermediate.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stoptail
