#pragma once

// Nonnegative-matrix spectral utilities: radius, Perron vectors,
// irreducibility of the support graph, entrywise ops.

#include <Eigen/Dense>

#include <utility>

#include "stoptail/errors.hpp"

namespace stoptail {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Entries with |a_ij| below this are structural zeros of the support graph.
inline constexpr double kStructuralZero = 1e-14;

struct PerronPair {
  double radius = 0.0;
  Vector right;  // A x = radius x, entries > 0, sums to 1
  Vector left;   // A' y = radius y, entries > 0, sums to 1
};

void require_square(const Matrix& a, const char* where);
void require_nonnegative(const Matrix& a, const char* where);

// Largest eigenvalue modulus. Dense eigensolve for n <= 64, power iteration
// beyond that.
double spectral_radius(const Matrix& a, double tol = 1e-12, int max_iter = 10000);

// Perron root and positive left/right eigenvectors of a nonnegative
// irreducible matrix. Throws ValidationError naming an unreachable state pair
// when the support graph is not strongly connected.
PerronPair perron_pair(const Matrix& a, double tol = 1e-12, int max_iter = 10000);

// Support graph strongly connected (single SCC)?
bool is_irreducible(const Matrix& a);

// (from, to) with no directed path from->to, or (-1, -1) if strongly
// connected. States are 0-based.
std::pair<int, int> find_unreachable_pair(const Matrix& a);

Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix entrywise_pow(const Matrix& a, double z);

// Left Perron vector of a row-stochastic matrix, normalized to sum 1.
Vector stationary_distribution(const Matrix& pi);

}  // namespace stoptail
