#include "rsr/model.hpp"

#include "rsr/samplers.hpp"

#include <cmath>

namespace rsr {

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::ns: return "ns";
    case ModelKind::icar: return "icar";
    case ModelKind::rhz: return "rhz";
    case ModelKind::hh: return "hh";
    case ModelKind::custom: return "custom";
  }
  return "?";
}

const char* family_name(Family f) {
  return f == Family::gaussian ? "gaussian" : "poisson";
}

void PriorConfig::validate() const {
  if (!(a_eps > 0 && b_eps > 0 && a_s > 0 && b_s > 0)) {
    throw Error(Errc::invalid_parameter, "gamma hyperparameters must be positive");
  }
  if (beta_prior == BetaPrior::normal && !(beta_sd > 0)) {
    throw Error(Errc::invalid_parameter, "beta prior sd must be positive");
  }
}

Index ModelSpec::penalty_rank() const {
  if (F.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(F, Eigen::EigenvaluesOnly);
  const double tol = 1e-8 * std::max(1.0, max_abs(solver.eigenvalues()));
  Index r = 0;
  for (Index i = 0; i < solver.eigenvalues().size(); ++i) {
    if (std::abs(solver.eigenvalues()[i]) > tol) ++r;
  }
  return r;
}

namespace {

bool has_constant_column(const Matrix& X) {
  for (Index c = 0; c < X.cols(); ++c) {
    if (X.rows() > 0 && (X.col(c).array() - X(0, c)).abs().maxCoeff() <= 1e-12 &&
        std::abs(X(0, c)) > 1e-12) {
      return true;
    }
  }
  return false;
}

void check_a12(const ModelSpec& spec) {
  const Index rank_f = spec.penalty_rank();
  if (spec.q() == 0) return;
  if (rank_f >= 2) return;
  const double margin = spec.priors.a_eps / 2.0 + spec.n() / 2.0 - spec.p() / 2.0 -
                        static_cast<double>(spec.q()) / 2.0;
  if (rank_f == 1 && margin > 0.5) return;
  throw Error(Errc::invalid_penalty_rank,
              "penalty rank " + std::to_string(rank_f) + " violates the integrability condition");
}

}  // namespace

ModelSpec make_model(ModelKind kind, const AdjacencyGraph& graph, const Matrix& covariates,
                     const PriorConfig& priors, Family family, std::optional<Index> q,
                     const Vector& counts, const Vector& offset) {
  priors.validate();
  if (covariates.rows() != graph.n) {
    throw Error(Errc::invalid_parameter, "covariate rows do not match graph vertex count");
  }
  if (connected_components(graph).size() != 1) {
    throw Error(Errc::invalid_parameter, "graph must be connected for model fitting");
  }
  if (offset.size() && offset.size() != graph.n) {
    throw Error(Errc::invalid_parameter, "offset length does not match graph vertex count");
  }

  ModelSpec spec;
  spec.kind = kind;
  spec.family = family;
  spec.offset = offset;
  spec.priors = priors;
  if (family == Family::gaussian) {
    spec.priors.beta_prior = PriorConfig::BetaPrior::flat;
  } else if (priors.beta_prior == PriorConfig::BetaPrior::flat) {
    spec.priors.beta_prior = PriorConfig::BetaPrior::normal;
  }

  const bool count_basis = (family == Family::poisson);
  switch (kind) {
    case ModelKind::ns: {
      spec.design = DesignMatrix::with_ones(covariates);
      spec.W = Matrix(graph.n, 0);
      spec.F = Matrix(0, 0);
      break;
    }
    case ModelKind::icar: {
      if (has_constant_column(covariates)) {
        throw Error(Errc::implicit_intercept_conflict,
                    "ICAR design must not carry an explicit intercept column");
      }
      spec.design = DesignMatrix::plain(covariates);
      spec.W = Matrix::Identity(graph.n, graph.n);
      spec.F = laplacian_matrix(graph);
      break;
    }
    case ModelKind::rhz: {
      spec.design = DesignMatrix::with_ones(covariates);
      if (count_basis) {
        if (counts.size() != graph.n) {
          throw Error(Errc::invalid_parameter,
                      "Poisson RHZ basis requires the observed counts");
        }
        const IwlsFit fit = iwls_poisson(spec.design, counts, spec.offset_or_zero());
        const SpatialBasis b = count_rhz_basis(graph, spec.design, fit.h_diag);
        spec.W = b.W;
        spec.F = b.penalty;
      } else {
        const SpatialBasis b = complement_basis(spec.design);
        const Matrix Q = laplacian_matrix(graph);
        spec.W = b.W;
        spec.F = b.W.transpose() * Q * b.W;
        spec.F = 0.5 * (spec.F + spec.F.transpose()).eval();
      }
      break;
    }
    case ModelKind::hh: {
      spec.design = DesignMatrix::with_ones(covariates);
      const Index q_eff = q.value_or(static_cast<Index>(std::ceil(0.1 * graph.n)));
      if (count_basis) {
        if (counts.size() != graph.n) {
          throw Error(Errc::invalid_parameter, "Poisson HH basis requires the observed counts");
        }
        const IwlsFit fit = iwls_poisson(spec.design, counts, spec.offset_or_zero());
        const SpatialBasis b = count_hh_basis(graph, spec.design, fit.w_diag.cwiseInverse(), q_eff);
        spec.W = b.W;
        spec.F = b.penalty;
      } else {
        const SpatialBasis b = hh_basis(graph, spec.design, q_eff);
        const Matrix Q = laplacian_matrix(graph);
        spec.W = b.W;
        spec.F = b.W.transpose() * Q * b.W;
        spec.F = 0.5 * (spec.F + spec.F.transpose()).eval();
      }
      break;
    }
    case ModelKind::custom:
      throw Error(Errc::invalid_parameter, "use make_custom_model for custom specs");
  }
  if (design_rank(spec.design.X) < spec.p()) {
    throw Error(Errc::rank_deficient_design, "design matrix is rank deficient");
  }
  check_a12(spec);
  return spec;
}

ModelSpec make_custom_model(DesignMatrix design, Matrix W, Matrix F, const PriorConfig& priors,
                            Family family, const Vector& offset) {
  priors.validate();
  if (W.rows() != design.n()) {
    throw Error(Errc::invalid_parameter, "basis rows do not match design rows");
  }
  if (F.rows() != W.cols() || F.cols() != W.cols()) {
    throw Error(Errc::invalid_parameter, "penalty must be q x q");
  }
  ModelSpec spec;
  spec.kind = ModelKind::custom;
  spec.design = std::move(design);
  spec.W = std::move(W);
  spec.F = std::move(F);
  spec.family = family;
  spec.offset = offset;
  spec.priors = priors;
  if (design_rank(spec.design.X) < spec.p()) {
    throw Error(Errc::rank_deficient_design, "design matrix is rank deficient");
  }
  return spec;
}

ConditionsReport validate_conditions(const ModelSpec& spec) {
  ConditionsReport rep;
  const Index q = spec.q();

  // A.1[1]: F symmetric non-negative definite.
  if (q == 0) {
    rep.penalty_symmetric_nnd = true;
  } else {
    const double sym = max_abs(spec.F - spec.F.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> fe(0.5 * (spec.F + spec.F.transpose()),
                                             Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, max_abs(fe.eigenvalues()));
    rep.penalty_symmetric_nnd =
        sym <= 1e-8 * scale && fe.eigenvalues().minCoeff() >= -1e-8 * scale;
  }

  // A.1[2]: rank(F) >= 2, or rank 1 with enough residual degrees of freedom.
  const Index rank_f = spec.penalty_rank();
  if (q == 0) {
    rep.penalty_rank_ok = true;
  } else if (rank_f >= 2) {
    rep.penalty_rank_ok = true;
  } else if (rank_f == 1) {
    rep.penalty_rank_ok = spec.priors.a_eps / 2.0 + spec.n() / 2.0 - spec.p() / 2.0 -
                              static_cast<double>(q) / 2.0 >
                          0.5;
  } else {
    rep.penalty_rank_ok = false;
  }

  // A.1[3]: rank(W) = q <= n - p.
  rep.basis_rank_ok = q == 0 || (design_rank(spec.W) == q && q <= spec.n() - spec.p());
  if (spec.kind == ModelKind::icar) {
    // W = I has q = n; the table's ICAR row sits outside the RSR class.
    rep.basis_rank_ok = true;
    rep.detail = "ICAR: A.1[3] not applicable (W = I)";
  }

  // A.1[4]: rank(X) = p < n.
  rep.design_rank_ok = design_rank(spec.design.X) == spec.p() && spec.p() < spec.n();

  // A.1[5]: F and W^T W commute.
  if (q == 0) {
    rep.commute_ok = true;
  } else {
    const Matrix WtW = spec.W.transpose() * spec.W;
    const Matrix comm = spec.F * WtW - WtW * spec.F;
    rep.commutator_norm = max_abs(comm);
    const double scale = std::max(1.0, max_abs(spec.F) * std::max(1.0, max_abs(WtW)));
    rep.commute_ok = rep.commutator_norm <= 1e-8 * scale;
  }
  return rep;
}

}  // namespace rsr
