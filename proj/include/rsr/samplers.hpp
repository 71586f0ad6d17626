#pragma once

#include "rsr/model.hpp"
#include "rsr/rng.hpp"
#include "rsr/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rsr {

struct ChainConfig {
  long iterations = 20000;
  long burn_in = -1;  // negative means 10% of iterations
  std::uint64_t seed = 1;
  double delta_step = 0.1;   // Poisson random-walk scale for the delta block
  bool adapt_burn_in = true; // Robbins-Monro step adaptation, frozen after burn-in
  bool store_delta = false;

  long effective_burn_in() const {
    return burn_in >= 0 ? burn_in : iterations / 10;
  }
  void validate() const {
    if (iterations <= 0) throw Error(Errc::invalid_parameter, "iterations must be positive");
    if (effective_burn_in() >= iterations) {
      throw Error(Errc::invalid_parameter, "burn-in must be smaller than iterations");
    }
    if (!(delta_step > 0)) throw Error(Errc::invalid_parameter, "delta_step must be positive");
  }
};

struct ChainOutput {
  Matrix beta_samples;    // retained x p
  Matrix delta_samples;   // retained x q when stored, else 0 x 0
  Vector tau_eps_samples; // empty for Poisson chains
  Vector tau_s_samples;
  std::map<std::string, double> acceptance_rates;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  Index retained() const { return beta_samples.rows(); }
};

struct IwlsFit {
  Vector beta_hat;
  Matrix fisher_information;  // X^T W X at convergence
  Vector h_diag;              // conditional variances at the fit
  Vector w_diag;              // final IWLS weights
  bool converged = false;
  int iterations = 0;
};

ChainOutput gibbs_gaussian(const ModelSpec& spec, const Vector& y, const ChainConfig& cfg);

IwlsFit iwls_poisson(const DesignMatrix& design, const Vector& counts, const Vector& offset);

ChainOutput mh_poisson(const ModelSpec& spec, const Vector& counts, const ChainConfig& cfg);

// Batch-means Monte Carlo standard error with floor(sqrt(m)) batches.
double batch_means_mcse(const Vector& samples);
double effective_sample_size(const Vector& samples);

struct ChainDiagnostics {
  std::vector<std::string> names;
  Vector mcse;
  Vector ess;
};

ChainDiagnostics run_chain_diagnostics(const ChainOutput& out);

}  // namespace rsr
