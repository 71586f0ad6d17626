#include "rsr/basis.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace rsr {

namespace {

// Orthonormal eigenvalue-1 eigenvectors of a weighted complement projector.
// Shared by the unweighted RHZ basis (h = 1) and the count-data variant.
Matrix projector_one_eigenvectors(const Matrix& P, Index expected) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(P);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "projector eigendecomposition did not converge");
  }
  const Vector& vals = solver.eigenvalues();  // ascending
  std::vector<Index> keep;
  for (Index i = 0; i < vals.size(); ++i) {
    if (std::abs(vals[i] - 1.0) <= 1e-8) keep.push_back(i);
  }
  if (static_cast<Index>(keep.size()) != expected) {
    throw Error(Errc::numerical_failure,
                "projector has " + std::to_string(keep.size()) +
                    " unit eigenvalues, expected " + std::to_string(expected));
  }
  Matrix L(P.rows(), expected);
  for (Index c = 0; c < expected; ++c) L.col(c) = solver.eigenvectors().col(keep[c]);
  apply_sign_convention(L);
  return L;
}

Vector sqrt_weights(const Vector& diag) {
  for (Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) {
      throw Error(Errc::invalid_parameter,
                  "weight " + std::to_string(i) + " is not positive");
    }
  }
  return diag.cwiseSqrt();
}

// Restricted Moran spectrum: eigenpairs of B^T A B for an orthonormal basis B
// of the smoothing-permitted subspace. Columns come back ordered by
// descending eigenvalue, ties keeping solver order, sign convention applied.
std::pair<Matrix, Vector> restricted_moran_eigen(const Matrix& A, const Matrix& B) {
  Matrix R = B.transpose() * A * B;
  R = 0.5 * (R + R.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(R);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "Moran eigendecomposition did not converge");
  }
  const Index m = R.rows();
  std::vector<Index> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  // Solver order is ascending, so descending eigenvalue = descending solver
  // index; stable sort keeps that as the tie-break.
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return solver.eigenvalues()[a] > solver.eigenvalues()[b];
  });
  Matrix W(B.rows(), m);
  Vector vals(m);
  for (Index c = 0; c < m; ++c) {
    W.col(c) = B * solver.eigenvectors().col(order[static_cast<size_t>(c)]);
    vals[c] = solver.eigenvalues()[order[static_cast<size_t>(c)]];
  }
  apply_sign_convention(W);
  return {std::move(W), std::move(vals)};
}

}  // namespace

Index design_rank(const Matrix& X) {
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  return qr.rank();
}

ProjectionPair ProjectionPair::from_design(const DesignMatrix& d) {
  if (design_rank(d.X) < d.p()) {
    throw Error(Errc::rank_deficient_design, "design matrix is rank deficient");
  }
  ProjectionPair pp;
  pp.P_X = d.X * (d.X.transpose() * d.X).ldlt().solve(d.X.transpose());
  pp.P_X = 0.5 * (pp.P_X + pp.P_X.transpose()).eval();
  pp.P_perp = Matrix::Identity(d.n(), d.n()) - pp.P_X;
  return pp;
}

SpatialBasis complement_basis(const DesignMatrix& d) {
  if (design_rank(d.X) < d.p()) {
    throw Error(Errc::rank_deficient_design, "design matrix is rank deficient");
  }
  const auto pp = ProjectionPair::from_design(d);
  SpatialBasis basis;
  basis.W = projector_one_eigenvectors(pp.P_perp, d.n() - d.p());
  basis.kind = BasisKind::rhz_l;
  return basis;
}

Matrix moran_operator(const AdjacencyGraph& g, const ProjectionPair& pp) {
  if (pp.P_perp.rows() != g.n) {
    throw Error(Errc::invalid_parameter, "projection and graph dimensions disagree");
  }
  Matrix M = pp.P_perp * g.A * pp.P_perp;
  return 0.5 * (M + M.transpose()).eval();
}

Index attractive_count(const Vector& moran_eigenvalues) {
  if (moran_eigenvalues.size() == 0) return 0;
  const double tol = 1e-8 * max_abs(moran_eigenvalues);
  Index count = 0;
  for (Index i = 0; i < moran_eigenvalues.size(); ++i) {
    if (moran_eigenvalues[i] > tol) ++count;
  }
  return count;
}

SpatialBasis hh_basis(const AdjacencyGraph& g, const DesignMatrix& d, Index q,
                      bool attractive_only) {
  const SpatialBasis comp = complement_basis(d);
  auto [W_all, vals] = restricted_moran_eigen(g.A, comp.W);
  const Index avail = attractive_only ? attractive_count(vals) : W_all.cols();
  if (q < 0 || q > avail) {
    throw Error(Errc::insufficient_basis,
                "requested q=" + std::to_string(q) + " exceeds available " +
                    std::to_string(avail) + " basis vectors");
  }
  SpatialBasis basis;
  basis.W = W_all.leftCols(q);
  basis.kind = BasisKind::hh_moran;
  basis.moran_eigenvalues = vals.head(q);
  return basis;
}

Matrix weighted_projection(const DesignMatrix& d, const Vector& h_diag) {
  if (h_diag.size() != d.n()) {
    throw Error(Errc::invalid_parameter, "weight vector length does not match design");
  }
  const Vector s = sqrt_weights(h_diag);
  const Matrix Xh = s.asDiagonal() * d.X;
  Matrix P = Xh * (Xh.transpose() * Xh).ldlt().solve(Xh.transpose());
  P = Matrix::Identity(d.n(), d.n()) - P;
  return 0.5 * (P + P.transpose()).eval();
}

SpatialBasis count_rhz_basis(const AdjacencyGraph& g, const DesignMatrix& d,
                             const Vector& h_diag) {
  const Matrix P = weighted_projection(d, h_diag);
  const Matrix L = projector_one_eigenvectors(P, d.n() - d.p());
  const Vector s = sqrt_weights(h_diag);
  const Matrix Q = laplacian_matrix(g);
  const Matrix Ls = s.asDiagonal() * L;  // H^{1/2} L

  SpatialBasis basis;
  basis.W = s.cwiseInverse().asDiagonal() * L;  // H^{-1/2} L enters the linear predictor
  basis.kind = BasisKind::count_rhz;
  basis.penalty = Ls.transpose() * Q * Ls;
  basis.penalty = 0.5 * (basis.penalty + basis.penalty.transpose()).eval();
  return basis;
}

SpatialBasis count_hh_basis(const AdjacencyGraph& g, const DesignMatrix& d, const Vector& r_diag,
                            Index q) {
  const Matrix P = weighted_projection(d, r_diag);
  const Matrix LR = projector_one_eigenvectors(P, d.n() - d.p());
  auto [W_all, vals] = restricted_moran_eigen(g.A, LR);
  if (q < 0 || q > W_all.cols()) {
    throw Error(Errc::insufficient_basis,
                "requested q=" + std::to_string(q) + " exceeds available " +
                    std::to_string(W_all.cols()) + " basis vectors");
  }
  const Matrix Q = laplacian_matrix(g);
  SpatialBasis basis;
  basis.W = W_all.leftCols(q);
  basis.kind = BasisKind::count_hh;
  basis.moran_eigenvalues = vals.head(q);
  basis.penalty = basis.W.transpose() * Q * basis.W;
  basis.penalty = 0.5 * (basis.penalty + basis.penalty.transpose()).eval();
  return basis;
}

}  // namespace rsr
