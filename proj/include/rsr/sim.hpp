#pragma once

#include "rsr/io.hpp"
#include "rsr/model.hpp"
#include "rsr/posterior.hpp"
#include "rsr/samplers.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rsr {

// Spatially-structured covariate: l = s_l * sqrt(n-1) * V * rho + l_bar * 1
// with rho supported on the target eigenvectors, unit norm.
struct CovariateRecipe {
  Index k = 0;                       // number of targeted eigenvectors
  std::vector<Index> target_indices; // empty = k lowest-nonzero-eigenvalue columns
  double s_l = 1.0;
  double l_bar = 0.0;
};

Vector gen_covariate(const LaplacianEigen& eig, const CovariateRecipe& recipe, RngStream& rng);

struct CovariateDecomposition {
  double s_l = 0.0;
  double l_bar = 0.0;
  Vector rho;  // correlations with the eigenvector columns; kernel entry 0
};

CovariateDecomposition covariate_decompose(const LaplacianEigen& eig, const Vector& l);
Vector covariate_reconstruct(const LaplacianEigen& eig, const CovariateDecomposition& d);

enum class GeneratingKind { ns, rhz, icar };
const char* generating_kind_name(GeneratingKind k);

// Draws responses for one generating design. The RHZ random effect treats
// L^T Q L as a precision matrix; set rhz_covariance to read it as a
// covariance instead.
class ResponseGenerator {
 public:
  ResponseGenerator(const LaplacianEigen& eig, Matrix x_full, bool rhz_covariance = false);

  Vector draw(GeneratingKind kind, const Vector& beta_full, double tau_s, Family family,
              RngStream& rng) const;
  Vector draw_effect(GeneratingKind kind, double tau_s, RngStream& rng) const;

 private:
  const LaplacianEigen& eig_;
  Matrix x_full_;
  Matrix l_;
  Matrix l_u_;     // eigenvectors of L^T Q L
  Vector l_zeta_;  // its eigenvalues
  bool rhz_covariance_ = false;
};

Vector gen_response(GeneratingKind kind, const LaplacianEigen& eig, const Matrix& x_full,
                    const Vector& beta_full, double tau_s, Family family, RngStream& rng);

enum class Agreement { agree, rhz_plus, ns_plus };

Agreement agreement_classify(std::pair<double, double> ci_rhz, std::pair<double, double> ci_ns,
                             double truth);

enum class Study { sim1, sim2, sim3 };
const char* study_name(Study s);

struct StudyConfig {
  Study study = Study::sim1;
  bool small_effect = false;  // beta_0 = .1, beta_1 = .2 instead of 1 and 2
  int replicates = 0;         // 0 = study default
  long iterations = 0;        // 0 = study default
  long burn_in = -1;          // negative = 10% of iterations
  std::uint64_t seed = 1;
  bool paper_scale = false;
  bool rhz_gen_covariance = false;
  PriorConfig priors;
  double delta_step = 0.1;

  int effective_replicates() const;
  long effective_iterations() const;
};

struct ReportRow {
  std::string generating;
  std::string analysis;
  std::string coefficient;
  std::string metric;
  double value = 0.0;
};

struct SimulationReport {
  std::string study;
  int replicates = 0;
  long iterations = 0;
  long burn_in = 0;
  std::uint64_t seed = 0;
  int failed_replicates = 0;
  std::vector<ReportRow> rows;

  bool has(const std::string& gen, const std::string& analysis, const std::string& coef,
           const std::string& metric) const;
  double value(const std::string& gen, const std::string& analysis, const std::string& coef,
               const std::string& metric) const;
  CsvTable to_csv() const;
  std::string render_text() const;
};

SimulationReport run_simulation(const AdjacencyGraph& graph, const StudyConfig& cfg);

// Flat-prior NS fits with 0..(n-p-1) appended synthetic covariates drawn from
// an orthogonal complement basis, ordered by |correlation| with P_perp Y.
struct OverfitTrajectory {
  Matrix variance;  // (n-p) x p posterior variances, row m = m synthetic columns
  Vector e_sigma;   // matching E[sigma | Y] values
};

OverfitTrajectory overfit_demo(const DesignMatrix& design, const Vector& y,
                               const PriorConfig& priors);

}  // namespace rsr
