#pragma once

#include "rsr/graph.hpp"
#include "rsr/types.hpp"

#include <optional>

namespace rsr {

struct DesignMatrix {
  Matrix X;                    // n x p, full column rank
  bool with_intercept = false; // leading column of ones present

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  static DesignMatrix plain(Matrix covariates) { return {std::move(covariates), false}; }
  static DesignMatrix with_ones(const Matrix& covariates) {
    Matrix X(covariates.rows(), covariates.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(covariates.cols()) = covariates;
    return {std::move(X), true};
  }
};

struct ProjectionPair {
  Matrix P_X;     // projection onto C(X)
  Matrix P_perp;  // I - P_X

  static ProjectionPair from_design(const DesignMatrix& d);
};

enum class BasisKind { rhz_l, hh_moran, count_rhz, count_hh, custom };

// Orthonormal spatial basis. For the Gaussian kinds the columns are
// orthogonal to C(X); the count-data kinds are orthogonal in the metric of
// their IWLS weights and carry the matching prior penalty.
struct SpatialBasis {
  Matrix W;  // n x q
  BasisKind kind = BasisKind::custom;
  Vector moran_eigenvalues;  // empty unless a Moran construction
  Matrix penalty;            // q x q prior precision; empty unless a count kind

  Index q() const { return W.cols(); }
};

Index design_rank(const Matrix& X);

// Eigenvalue-1 eigenvectors of P_perp: an orthonormal basis of C(X)^perp.
SpatialBasis complement_basis(const DesignMatrix& d);

// P_perp * A * P_perp, symmetrized.
Matrix moran_operator(const AdjacencyGraph& g, const ProjectionPair& pp);

// Number of Moran eigenvalues above the scale-relative positivity threshold.
Index attractive_count(const Vector& moran_eigenvalues);

SpatialBasis hh_basis(const AdjacencyGraph& g, const DesignMatrix& d, Index q,
                      bool attractive_only = false);

// I - H^{1/2} X (X^T H X)^{-1} X^T H^{1/2} for positive diagonal weights.
Matrix weighted_projection(const DesignMatrix& d, const Vector& h_diag);

// Count-data bases (IWLS-weighted): W carries the model-space columns and
// penalty the prior precision to use as F.
SpatialBasis count_rhz_basis(const AdjacencyGraph& g, const DesignMatrix& d, const Vector& h_diag);
SpatialBasis count_hh_basis(const AdjacencyGraph& g, const DesignMatrix& d, const Vector& r_diag,
                            Index q);

}  // namespace rsr
