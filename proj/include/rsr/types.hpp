#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

enum class Errc {
  invalid_edge,
  numerical_failure,
  invalid_parameter,
  rank_deficient_design,
  insufficient_basis,
  implicit_intercept_conflict,
  invalid_penalty_rank,
  iwls_diverged,
  moment_undefined,
  invalid_comparison,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_edge: return "InvalidEdge";
    case Errc::numerical_failure: return "NumericalFailure";
    case Errc::invalid_parameter: return "InvalidParameter";
    case Errc::rank_deficient_design: return "RankDeficientDesign";
    case Errc::insufficient_basis: return "InsufficientBasis";
    case Errc::implicit_intercept_conflict: return "ImplicitInterceptConflict";
    case Errc::invalid_penalty_rank: return "InvalidPenaltyRank";
    case Errc::iwls_diverged: return "IwlsDiverged";
    case Errc::moment_undefined: return "MomentUndefined";
    case Errc::invalid_comparison: return "InvalidComparison";
    case Errc::io_error: return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Max-norm of an Eigen expression; zero for empty blocks.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.derived().cwiseAbs().maxCoeff();
}

}  // namespace rsr
