#pragma once

#include "rsr/rng.hpp"
#include "rsr/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rsr {

// Undirected simple graph over vertices 0..n-1, binary adjacency.
struct AdjacencyGraph {
  Index n = 0;
  Matrix A;  // n x n, symmetric, zero diagonal, entries in {0,1}

  Index edge_count() const { return static_cast<Index>(A.sum() / 2.0 + 0.5); }
};

// Graph Laplacian Q = diag(A*1) - A with its full spectral decomposition.
// Eigenvalues are sorted descending, so the kernel sits at the tail; each
// eigenvector is normalized with its first nonzero component positive.
struct LaplacianEigen {
  Matrix Q;
  Matrix V;        // columns are orthonormal eigenvectors
  Vector lambda;   // descending, lambda[n-1] = 0 on a connected graph

  Index n() const { return lambda.size(); }
  double zero_tol() const { return 1e-8 * std::max(1.0, lambda.size() ? lambda[0] : 0.0); }
  Index kernel_dim() const {
    Index k = 0;
    for (Index i = lambda.size(); i-- > 0 && std::abs(lambda[i]) <= zero_tol();) ++k;
    return k;
  }
};

AdjacencyGraph load_graph(const std::vector<std::pair<Index, Index>>& edges, Index n);

// Q = diag(A*1) - A, assembled in integer arithmetic.
Matrix laplacian_matrix(const AdjacencyGraph& g);

// Edge-list text file: one "i j" pair per line, 0-based, '#' comments.
AdjacencyGraph load_graph_file(const std::string& path, std::optional<Index> n = std::nullopt);

LaplacianEigen laplacian_eigen(const AdjacencyGraph& g);

std::vector<std::vector<Index>> connected_components(const AdjacencyGraph& g);

// Zero-mean ICAR realization: delta = sum_{i<n-1} v_i z_i / sqrt(tau_s * lambda_i),
// the spectral form of sampling under the intrinsic precision tau_s * Q.
Vector sample_icar(const LaplacianEigen& eig, double tau_s, RngStream& rng);

// Flips eigenvector columns so the first component over threshold is positive.
void apply_sign_convention(Matrix& vectors);

}  // namespace rsr
