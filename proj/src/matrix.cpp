#include "stoptail/matrix.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

namespace stoptail {

void require_square(const Matrix& a, const char* where) {
  if (a.rows() == 0 || a.rows() != a.cols())
    throw ValidationError(std::string(where) + ": matrix must be square and nonempty, got " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  if (!a.allFinite())
    throw ValidationError(std::string(where) + ": matrix has nonfinite entries");
}

void require_nonnegative(const Matrix& a, const char* where) {
  if (a.minCoeff() < 0.0)
    throw ValidationError(std::string(where) + ": matrix has negative entries");
}

namespace {

std::vector<std::vector<int>> support_graph(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(a(i, j)) > kStructuralZero) adj[i].push_back(j);
  return adj;
}

// Power iteration on a + shift*I; the shift makes the iteration converge even
// for periodic support graphs (eigenvalues move to lambda + shift, Perron
// vectors unchanged).
PerronPair shifted_power_iteration(const Matrix& a, double shift, double tol, int max_iter) {
  const int n = static_cast<int>(a.rows());
  Matrix b = a + shift * Matrix::Identity(n, n);
  Vector x = Vector::Constant(n, 1.0 / n);
  Vector y = Vector::Constant(n, 1.0 / n);
  const double scale = a.cwiseAbs().maxCoeff();
  double rho = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    x = b * x;
    x /= x.sum();
    y = b.transpose() * y;
    y /= y.sum();
    rho = y.dot(a * x) / y.dot(x);
    const double rx = (a * x - rho * x).cwiseAbs().maxCoeff();
    const double ry = (a.transpose() * y - rho * y).cwiseAbs().maxCoeff();
    if (rx <= tol * std::max(1.0, scale) && ry <= tol * std::max(1.0, scale))
      return {rho, x, y};
  }
  throw NumericalError("perron_pair: power iteration did not converge in " +
                       std::to_string(max_iter) + " iterations");
}

}  // namespace

double spectral_radius(const Matrix& a, double tol, int max_iter) {
  require_square(a, "spectral_radius");
  const int n = static_cast<int>(a.rows());
  if (n == 1) return std::abs(a(0, 0));
  if (n <= 64) {
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      throw NumericalError("spectral_radius: dense eigensolve failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (a.minCoeff() >= 0.0) {
    // Nonnegative: shifted power iteration is safe regardless of periodicity.
    const double shift = std::max(1.0, a.rowwise().sum().maxCoeff());
    Vector x = Vector::Constant(n, 1.0 / n);
    Matrix b = a + shift * Matrix::Identity(n, n);
    double est = 0.0, prev = -1.0;
    for (int it = 0; it < max_iter; ++it) {
      Vector bx = b * x;
      est = bx.sum();  // x sums to 1 and stays nonnegative
      x = bx / est;
      if (std::abs(est - prev) <= tol * std::max(1.0, est)) {
        const double rho = est - shift;
        const double res = (a * x - rho * x).cwiseAbs().maxCoeff();
        if (res <= std::sqrt(tol) * std::max(1.0, a.cwiseAbs().maxCoeff())) return rho;
      }
      prev = est;
    }
    throw NumericalError("spectral_radius: power iteration did not converge");
  }
  // General sign pattern: track growth of ||A^k x|| over doubled steps so a
  // dominant complex pair does not stall the estimate.
  Vector x = Vector::Random(n).cwiseAbs() + Vector::Constant(n, 0.1);
  x /= x.norm();
  double prev = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector ax = a * x;
    Vector aax = a * ax;
    const double num = aax.norm();
    if (num == 0.0) return 0.0;
    const double est = std::sqrt(num / x.norm());
    x = aax / num;
    if (prev >= 0.0 && std::abs(est - prev) <= tol * std::max(1.0, est)) return est;
    prev = est;
  }
  throw NumericalError("spectral_radius: power iteration did not converge");
}

namespace {

// Extract the eigenvector of the largest real eigenvalue among those tied for
// maximum modulus, rotated to a real positive scale.
Vector dominant_real_vector(const Eigen::EigenSolver<Matrix>& es, double& rho_out) {
  const auto& vals = es.eigenvalues();
  const double top = vals.cwiseAbs().maxCoeff();
  int pick = -1;
  for (int i = 0; i < vals.size(); ++i)
    if (std::abs(vals(i)) >= top * (1.0 - 1e-12) &&
        (pick < 0 || vals(i).real() > vals(pick).real()))
      pick = i;
  rho_out = vals(pick).real();
  Eigen::VectorXcd v = es.eigenvectors().col(pick);
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::conj(v(imax)) / std::abs(v(imax));
  return v.real();
}

}  // namespace

PerronPair perron_pair(const Matrix& a, double tol, int max_iter) {
  require_square(a, "perron_pair");
  require_nonnegative(a, "perron_pair");
  const auto bad = find_unreachable_pair(a);
  if (bad.first >= 0)
    throw ValidationError("perron_pair: support graph is not strongly connected: no path from state " +
                          std::to_string(bad.first) + " to state " + std::to_string(bad.second));
  const int n = static_cast<int>(a.rows());
  if (n == 1) return {a(0, 0), Vector::Ones(1), Vector::Ones(1)};
  if (n <= 64) {
    const Eigen::EigenSolver<Matrix> res(a, /*computeEigenvectors=*/true);
    const Eigen::EigenSolver<Matrix> les(Matrix(a.transpose()), /*computeEigenvectors=*/true);
    if (res.info() == Eigen::Success && les.info() == Eigen::Success) {
      double rr = 0.0, rl = 0.0;
      Vector x = dominant_real_vector(res, rr);
      Vector y = dominant_real_vector(les, rl);
      if (x.minCoeff() > 0.0 && y.minCoeff() > 0.0) {
        x /= x.sum();
        y /= y.sum();
        return {0.5 * (rr + rl), x, y};
      }
    }
    // A Perron vector with entries near roundoff can come out of the dense
    // solve with the wrong sign; the power iteration preserves positivity.
  }
  const double rho0 = spectral_radius(a, tol, max_iter);
  // Irreducible and n >= 2 forces rho0 > 0; shift by it.
  PerronPair pp = shifted_power_iteration(a, rho0, tol, max_iter);
  if (pp.right.minCoeff() <= 0.0 || pp.left.minCoeff() <= 0.0)
    throw NumericalError("perron_pair: iterate lost positivity");
  return pp;
}

bool is_irreducible(const Matrix& a) {
  require_square(a, "is_irreducible");
  const int n = static_cast<int>(a.rows());
  const auto adj = support_graph(a);
  // Tarjan, iterative. Irreducible iff the first SCC found covers all of [0,n).
  std::vector<int> index(n, -1), low(n, 0), stk;
  std::vector<char> on_stack(n, 0);
  int next_index = 0, scc_count = 0;
  struct Frame {
    int v;
    size_t child;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = next_index++;
    stk.push_back(root);
    on_stack[root] = 1;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.child < adj[f.v].size()) {
        const int w = adj[f.v][f.child++];
        if (index[w] < 0) {
          index[w] = low[w] = next_index++;
          stk.push_back(w);
          on_stack[w] = 1;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          ++scc_count;
          if (scc_count > 1) return false;
          int size = 0, w;
          do {
            w = stk.back();
            stk.pop_back();
            on_stack[w] = 0;
            ++size;
          } while (w != f.v);
          if (size != n) return false;
        }
        const int v = f.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      }
    }
  }
  return scc_count == 1;
}

std::pair<int, int> find_unreachable_pair(const Matrix& a) {
  require_square(a, "find_unreachable_pair");
  const int n = static_cast<int>(a.rows());
  const auto adj = support_graph(a);
  std::vector<std::vector<int>> radj(n);
  for (int i = 0; i < n; ++i)
    for (int j : adj[i]) radj[j].push_back(i);
  auto bfs = [n](const std::vector<std::vector<int>>& g) {
    std::vector<char> seen(n, 0);
    std::vector<int> q{0};
    seen[0] = 1;
    for (size_t h = 0; h < q.size(); ++h)
      for (int w : g[q[h]])
        if (!seen[w]) {
          seen[w] = 1;
          q.push_back(w);
        }
    return seen;
  };
  const auto fwd = bfs(adj);
  for (int j = 0; j < n; ++j)
    if (!fwd[j]) return {0, j};  // 0 cannot reach j
  const auto bwd = bfs(radj);
  for (int j = 0; j < n; ++j)
    if (!bwd[j]) return {j, 0};  // j cannot reach 0
  return {-1, -1};
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError("hadamard: dimension mismatch");
  return a.cwiseProduct(b);
}

Matrix entrywise_pow(const Matrix& a, double z) {
  require_nonnegative(a, "entrywise_pow");
  return a.array().pow(z).matrix();
}

Vector stationary_distribution(const Matrix& pi) {
  require_square(pi, "stationary_distribution");
  const auto pp = perron_pair(pi.transpose());
  if (std::abs(pp.radius - 1.0) > 1e-8)
    throw ValidationError("stationary_distribution: matrix is not stochastic (Perron root " +
                          std::to_string(pp.radius) + ")");
  return pp.right / pp.right.sum();
}

}  // namespace stoptail
