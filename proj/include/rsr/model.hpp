#pragma once

#include "rsr/basis.hpp"
#include "rsr/graph.hpp"
#include "rsr/types.hpp"

#include <optional>
#include <string>

namespace rsr {

enum class Family { gaussian, poisson };
enum class ModelKind { ns, icar, rhz, hh, custom };

const char* model_kind_name(ModelKind k);
const char* family_name(Family f);

// Gamma hyperparameters use the shape/SCALE convention: the prior density is
// proportional to tau^{a-1} exp{-tau/b}, so mean = a*b and the conditional
// updates add 1/b to the rate. Mixing this up flips the stochastic ordering
// of the conditional, so it is pinned here once.
struct PriorConfig {
  double a_eps = 0.01;
  double b_eps = 100.0;
  double a_s = 0.01;
  double b_s = 100.0;
  enum class BetaPrior { flat, normal } beta_prior = BetaPrior::flat;
  double beta_sd = 1000.0;

  void validate() const;
};

struct ModelSpec {
  ModelKind kind = ModelKind::custom;
  DesignMatrix design;
  Matrix W;       // n x q (q may be 0)
  Matrix F;       // q x q symmetric non-negative definite penalty
  Family family = Family::gaussian;
  Vector offset;  // log expected counts; empty means zero offset
  PriorConfig priors;

  Index n() const { return design.n(); }
  Index p() const { return design.p(); }
  Index q() const { return W.cols(); }
  Index penalty_rank() const;
  Vector offset_or_zero() const {
    return offset.size() ? offset : Vector::Zero(n());
  }
};

// Builds the spec for one row of the model family table. `covariates` holds
// the non-constant columns only; NS/RHZ/HH prepend the intercept, ICAR must
// not carry one (its improper prior supplies it). Poisson RHZ/HH bases
// depend on the IWLS weights, so those kinds require the observed counts.
ModelSpec make_model(ModelKind kind, const AdjacencyGraph& graph, const Matrix& covariates,
                     const PriorConfig& priors, Family family,
                     std::optional<Index> q = std::nullopt,
                     const Vector& counts = Vector(), const Vector& offset = Vector());

ModelSpec make_custom_model(DesignMatrix design, Matrix W, Matrix F, const PriorConfig& priors,
                            Family family = Family::gaussian, const Vector& offset = Vector());

struct ConditionsReport {
  bool penalty_symmetric_nnd = false;  // A.1[1]
  bool penalty_rank_ok = false;        // A.1[2]
  bool basis_rank_ok = false;          // A.1[3]
  bool design_rank_ok = false;         // A.1[4]
  bool commute_ok = false;             // A.1[5]
  double commutator_norm = 0.0;
  std::string detail;

  bool all() const {
    return penalty_symmetric_nnd && penalty_rank_ok && basis_rank_ok && design_rank_ok &&
           commute_ok;
  }
};

ConditionsReport validate_conditions(const ModelSpec& spec);

}  // namespace rsr
