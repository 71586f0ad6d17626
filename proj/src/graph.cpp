#include "rsr/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rsr {

AdjacencyGraph load_graph(const std::vector<std::pair<Index, Index>>& edges, Index n) {
  if (n <= 0) throw Error(Errc::invalid_parameter, "vertex count must be positive");
  AdjacencyGraph g;
  g.n = n;
  g.A = Matrix::Zero(n, n);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw Error(Errc::invalid_edge, "vertex index out of range: (" + std::to_string(i) +
                                          "," + std::to_string(j) + ") with n=" + std::to_string(n));
    }
    if (i == j) throw Error(Errc::invalid_edge, "self-loop at vertex " + std::to_string(i));
    g.A(i, j) = 1.0;
    g.A(j, i) = 1.0;
  }
  return g;
}

AdjacencyGraph load_graph_file(const std::string& path, std::optional<Index> n) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open graph file " + path);
  std::vector<std::pair<Index, Index>> edges;
  Index max_vertex = -1;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long i, j;
    if (!(ls >> i)) continue;  // blank or comment-only line
    if (!(ls >> j)) {
      throw Error(Errc::io_error,
                  path + ":" + std::to_string(lineno) + ": expected \"i j\" pair");
    }
    edges.emplace_back(static_cast<Index>(i), static_cast<Index>(j));
    max_vertex = std::max<Index>(max_vertex, std::max<Index>(i, j));
  }
  return load_graph(edges, n.value_or(max_vertex + 1));
}

void apply_sign_convention(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    const double scale = max_abs(vectors.col(c));
    if (scale == 0.0) continue;
    for (Index r = 0; r < vectors.rows(); ++r) {
      if (std::abs(vectors(r, c)) > 1e-12 * scale) {
        if (vectors(r, c) < 0.0) vectors.col(c) = -vectors.col(c);
        break;
      }
    }
  }
}

Matrix laplacian_matrix(const AdjacencyGraph& g) {
  const Index n = g.n;
  // Degrees are exact small integers, so Q*1 = 0 holds exactly.
  Matrix Q = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    long deg = 0;
    for (Index j = 0; j < n; ++j) {
      if (g.A(i, j) != 0.0) {
        ++deg;
        Q(i, j) = -1.0;
      }
    }
    Q(i, i) = static_cast<double>(deg);
  }
  return Q;
}

LaplacianEigen laplacian_eigen(const AdjacencyGraph& g) {
  LaplacianEigen eig;
  eig.Q = laplacian_matrix(g);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(eig.Q);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "Laplacian eigendecomposition did not converge");
  }
  // Solver returns ascending order; flip to descending.
  eig.lambda = solver.eigenvalues().reverse();
  eig.V = solver.eigenvectors().rowwise().reverse();
  apply_sign_convention(eig.V);
  return eig;
}

std::vector<std::vector<Index>> connected_components(const AdjacencyGraph& g) {
  std::vector<std::vector<Index>> comps;
  std::vector<bool> seen(static_cast<size_t>(g.n), false);
  for (Index s = 0; s < g.n; ++s) {
    if (seen[static_cast<size_t>(s)]) continue;
    std::vector<Index> comp, stack{s};
    seen[static_cast<size_t>(s)] = true;
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (Index w = 0; w < g.n; ++w) {
        if (g.A(v, w) != 0.0 && !seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = true;
          stack.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

Vector sample_icar(const LaplacianEigen& eig, double tau_s, RngStream& rng) {
  if (!(tau_s > 0.0)) throw Error(Errc::invalid_parameter, "tau_s must be > 0");
  const Index n = eig.n();
  if (eig.kernel_dim() != 1) {
    throw Error(Errc::invalid_parameter, "sample_icar requires a connected graph");
  }
  Vector delta = Vector::Zero(n);
  for (Index i = 0; i + 1 < n; ++i) {
    delta += eig.V.col(i) * (rng.normal() / std::sqrt(tau_s * eig.lambda[i]));
  }
  return delta;
}

}  // namespace rsr
