#include "rsr/samplers.hpp"

#include <algorithm>
#include <cmath>

namespace rsr {

namespace {

void check_counts(const Vector& y) {
  for (Index i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0) || std::abs(y[i] - std::round(y[i])) > 1e-9) {
      throw Error(Errc::invalid_parameter,
                  "counts must be non-negative integers (row " + std::to_string(i) + ")");
    }
  }
}

bool is_identity(const Matrix& W) {
  return W.rows() == W.cols() && W.size() > 0 &&
         max_abs(W - Matrix::Identity(W.rows(), W.cols())) == 0.0;
}

// Sampler for the delta full conditional with precision tau_eps*W^TW + tau_s*F.
// When W has orthonormal columns the precision is diagonal in the eigenbasis
// of F, so one decomposition up front serves every iteration.
class DeltaConditional {
 public:
  DeltaConditional(const Matrix& W, const Matrix& F) : W_(W), F_(F), q_(W.cols()) {
    if (q_ == 0) return;
    const Matrix WtW = W.transpose() * W;
    orthonormal_ = max_abs(WtW - Matrix::Identity(q_, q_)) <= 1e-10;
    if (orthonormal_) {
      Eigen::SelfAdjointEigenSolver<Matrix> solver(F);
      if (solver.info() != Eigen::Success) {
        throw Error(Errc::numerical_failure, "penalty eigendecomposition did not converge");
      }
      U_ = solver.eigenvectors();
      zeta_ = solver.eigenvalues().cwiseMax(0.0);
    } else {
      WtW_ = WtW;
    }
  }

  Vector draw(const Vector& resid, double tau_eps, double tau_s, RngStream& rng,
              long iteration) const {
    Vector t = W_.transpose() * resid;
    if (orthonormal_) {
      Vector s = U_.transpose() * t;
      Vector c(q_);
      for (Index i = 0; i < q_; ++i) {
        const double prec = tau_eps + tau_s * zeta_[i];
        if (!(prec > 0.0) || !std::isfinite(prec)) {
          throw Error(Errc::numerical_failure,
                      "degenerate delta precision at iteration " + std::to_string(iteration));
        }
        c[i] = tau_eps * s[i] / prec + rng.normal() / std::sqrt(prec);
      }
      return U_ * c;
    }
    Matrix P = tau_eps * WtW_ + tau_s * F_;
    Eigen::LLT<Matrix> llt(P);
    if (llt.info() != Eigen::Success) {
      throw Error(Errc::numerical_failure,
                  "singular delta precision at iteration " + std::to_string(iteration));
    }
    Vector mean = llt.solve(tau_eps * t);
    Vector z = rng.normal_vector(q_);
    return mean + llt.matrixU().solve(z);
  }

 private:
  const Matrix& W_;
  const Matrix& F_;
  Index q_;
  bool orthonormal_ = false;
  Matrix U_;
  Vector zeta_;
  Matrix WtW_;
};

}  // namespace

ChainOutput gibbs_gaussian(const ModelSpec& spec, const Vector& y, const ChainConfig& cfg) {
  cfg.validate();
  spec.priors.validate();
  if (spec.family != Family::gaussian) {
    throw Error(Errc::invalid_parameter, "gibbs_gaussian requires a Gaussian spec");
  }
  if (y.size() != spec.n()) {
    throw Error(Errc::invalid_parameter, "response length does not match design");
  }
  if (!y.allFinite()) throw Error(Errc::invalid_parameter, "response must be finite");

  const Index n = spec.n(), p = spec.p(), q = spec.q();
  const auto& pr = spec.priors;
  const double rank_f = static_cast<double>(spec.penalty_rank());

  const Matrix XtX = spec.design.X.transpose() * spec.design.X;
  Eigen::LLT<Matrix> xtx_llt(XtX);
  if (xtx_llt.info() != Eigen::Success) {
    throw Error(Errc::rank_deficient_design, "X^T X is not positive definite");
  }
  const DeltaConditional delta_cond(spec.W, spec.F);

  const long burn = cfg.effective_burn_in();
  const long keep = cfg.iterations - burn;
  RngStream rng(cfg.seed);

  ChainOutput out;
  out.seed = cfg.seed;
  out.beta_samples.resize(keep, p);
  if (cfg.store_delta) out.delta_samples.resize(keep, q);
  out.tau_eps_samples.resize(keep);
  out.tau_s_samples.resize(keep);

  Vector beta = xtx_llt.solve(spec.design.X.transpose() * y);
  Vector delta = Vector::Zero(q);
  Vector w_delta = q ? (spec.W * delta).eval() : Vector::Zero(n);
  double tau_eps = 1.0, tau_s = 1.0;

  for (long it = 0; it < cfg.iterations; ++it) {
    // beta | rest
    Vector mean = xtx_llt.solve(spec.design.X.transpose() * (y - w_delta));
    Vector z = rng.normal_vector(p);
    beta = mean + xtx_llt.matrixU().solve(z) / std::sqrt(tau_eps);

    // delta | rest
    if (q) {
      delta = delta_cond.draw(y - spec.design.X * beta, tau_eps, tau_s, rng, it);
      w_delta = spec.W * delta;
    }

    // tau_s | rest: shape a_s + rank(F)/2, rate 1/b_s + delta'F delta/2
    const double quad_s = q ? double(delta.dot(spec.F * delta)) : 0.0;
    tau_s = rng.gamma_rate(pr.a_s + 0.5 * rank_f, 1.0 / pr.b_s + 0.5 * std::max(quad_s, 0.0));

    // tau_eps | rest: shape a_eps + n/2, rate 1/b_eps + ||resid||^2/2
    const double ss = (y - spec.design.X * beta - w_delta).squaredNorm();
    tau_eps = rng.gamma_rate(pr.a_eps + 0.5 * n, 1.0 / pr.b_eps + 0.5 * ss);

    if (!std::isfinite(tau_eps) || !std::isfinite(tau_s) || tau_eps <= 0.0 || tau_s <= 0.0) {
      throw Error(Errc::numerical_failure,
                  "degenerate precision draw at iteration " + std::to_string(it));
    }

    if (it >= burn) {
      const long k = it - burn;
      out.beta_samples.row(k) = beta.transpose();
      if (cfg.store_delta) out.delta_samples.row(k) = delta.transpose();
      out.tau_eps_samples[k] = tau_eps;
      out.tau_s_samples[k] = tau_s;
    }
  }
  return out;
}

IwlsFit iwls_poisson(const DesignMatrix& design, const Vector& counts, const Vector& offset) {
  check_counts(counts);
  const Index n = design.n(), p = design.p();
  if (counts.size() != n) throw Error(Errc::invalid_parameter, "counts length mismatch");
  Vector off = offset.size() ? offset : Vector::Zero(n);
  if (off.size() != n) throw Error(Errc::invalid_parameter, "offset length mismatch");

  IwlsFit fit;
  Vector eta = counts.cwiseMax(0.5).array().log();
  Vector beta = Vector::Zero(p);
  double dev_prev = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= 50; ++iter) {
    const Vector mu = eta.array().exp();
    const Vector w = mu;  // log link: var = mean = weight
    const Vector z = (eta - off) + (counts - mu).cwiseQuotient(mu);
    const Matrix Xw = w.asDiagonal() * design.X;
    Eigen::LDLT<Matrix> ldlt(design.X.transpose() * Xw);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(Errc::iwls_diverged, "weighted information matrix is singular");
    }
    beta = ldlt.solve(Xw.transpose() * z);
    if (!beta.allFinite() || max_abs(beta) > 1e3) {
      throw Error(Errc::iwls_diverged, "coefficients diverged at iteration " +
                                           std::to_string(iter));
    }
    eta = off + design.X * beta;
    double dev = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double mu_i = std::exp(eta[i]);
      if (counts[i] > 0.0) dev += counts[i] * std::log(counts[i] / mu_i);
      dev -= counts[i] - mu_i;
    }
    dev *= 2.0;
    fit.iterations = iter;
    if (std::abs(dev - dev_prev) <= 1e-10 * (std::abs(dev) + 1.0)) {
      fit.converged = true;
      break;
    }
    dev_prev = dev;
  }
  if (!fit.converged) {
    throw Error(Errc::iwls_diverged, "no convergence within 50 iterations");
  }
  fit.beta_hat = beta;
  fit.h_diag = eta.array().exp();
  fit.w_diag = fit.h_diag;
  fit.fisher_information = design.X.transpose() * (fit.w_diag.asDiagonal() * design.X);
  return fit;
}

ChainOutput mh_poisson(const ModelSpec& spec, const Vector& counts, const ChainConfig& cfg) {
  cfg.validate();
  spec.priors.validate();
  if (spec.family != Family::poisson) {
    throw Error(Errc::invalid_parameter, "mh_poisson requires a Poisson spec");
  }
  check_counts(counts);
  const Index n = spec.n(), p = spec.p(), q = spec.q();
  if (counts.size() != n) throw Error(Errc::invalid_parameter, "counts length mismatch");
  const Vector off = spec.offset_or_zero();
  const auto& pr = spec.priors;
  const double rank_f = static_cast<double>(spec.penalty_rank());

  // Proposal covariance: inverse Fisher information of the non-spatial fit.
  // ICAR designs drop the intercept, so the proposal comes from the matching
  // block of the intercept-augmented fit.
  Matrix prop_cov;
  Vector beta_init;
  if (spec.design.with_intercept || p == 0) {
    const IwlsFit fit = iwls_poisson(spec.design, counts, off);
    prop_cov = fit.fisher_information.inverse();
    beta_init = fit.beta_hat;
  } else {
    const IwlsFit fit = iwls_poisson(DesignMatrix::with_ones(spec.design.X), counts, off);
    const Matrix cov_full = fit.fisher_information.inverse();
    prop_cov = cov_full.bottomRightCorner(p, p);
    beta_init = fit.beta_hat.tail(p);
  }
  Eigen::LLT<Matrix> prop_llt(0.5 * (prop_cov + prop_cov.transpose()));
  if (prop_llt.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "proposal covariance is not positive definite");
  }
  const Matrix prop_chol = prop_llt.matrixL();

  const bool identity_w = is_identity(spec.W);
  const bool normal_prior = pr.beta_prior == PriorConfig::BetaPrior::normal;
  const double beta_prec = normal_prior ? 1.0 / (pr.beta_sd * pr.beta_sd) : 0.0;

  const long burn = cfg.effective_burn_in();
  const long keep = cfg.iterations - burn;
  RngStream rng(cfg.seed);

  ChainOutput out;
  out.seed = cfg.seed;
  out.beta_samples.resize(keep, p);
  if (cfg.store_delta) out.delta_samples.resize(keep, q);
  out.tau_s_samples.resize(keep);

  Vector beta = beta_init;
  Vector delta = Vector::Zero(q);
  Vector eta_beta = spec.design.X * beta;
  Vector eta_delta = Vector::Zero(n);
  double quad_f = 0.0;
  double tau_s = 1.0;

  auto loglik = [&](const Vector& eb, const Vector& ed) {
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double eta = off[i] + eb[i] + ed[i];
      ll += counts[i] * eta - std::exp(eta);
    }
    return ll;
  };
  double ll_cur = loglik(eta_beta, eta_delta);

  double log_step = std::log(cfg.delta_step);
  long accept_beta = 0, accept_delta = 0, tuned = 0;

  for (long it = 0; it < cfg.iterations; ++it) {
    // beta block: random walk with the asymptotic-covariance proposal.
    {
      const Vector step = prop_chol * rng.normal_vector(p);
      const Vector beta_new = beta + step;
      const Vector eta_beta_new = spec.design.X * beta_new;
      const double ll_new = loglik(eta_beta_new, eta_delta);
      double log_alpha = ll_new - ll_cur;
      if (normal_prior) {
        log_alpha += -0.5 * beta_prec * (beta_new.squaredNorm() - beta.squaredNorm());
      }
      if (std::log(rng.uniform_pos()) < log_alpha) {
        beta = beta_new;
        eta_beta = eta_beta_new;
        ll_cur = ll_new;
        if (it >= burn) ++accept_beta;
      }
    }

    // delta block: spherical random walk.
    if (q) {
      const double step_scale = std::exp(log_step);
      const Vector z = rng.normal_vector(q);
      const Vector w_z = identity_w ? z : (spec.W * z).eval();
      const Vector eta_delta_new = eta_delta + step_scale * w_z;
      const Vector f_z = spec.F * z;
      const double quad_new = quad_f + 2.0 * step_scale * delta.dot(f_z) +
                              step_scale * step_scale * z.dot(f_z);
      const double ll_new = loglik(eta_beta, eta_delta_new);
      const double log_alpha = ll_new - ll_cur - 0.5 * tau_s * (quad_new - quad_f);
      const bool accepted = std::log(rng.uniform_pos()) < log_alpha;
      if (accepted) {
        delta += step_scale * z;
        eta_delta = eta_delta_new;
        quad_f = quad_new;
        ll_cur = ll_new;
        if (it >= burn) ++accept_delta;
      }
      if (cfg.adapt_burn_in && it < burn) {
        ++tuned;
        const double alpha = std::min(1.0, std::exp(std::min(0.0, log_alpha)));
        log_step += (alpha - 0.25) / std::pow(static_cast<double>(tuned), 0.6);
      }
      if ((it + 1) % 100000 == 0) {
        // refresh incrementally-tracked state
        eta_delta = identity_w ? delta : (spec.W * delta).eval();
        quad_f = delta.dot(spec.F * delta);
        ll_cur = loglik(eta_beta, eta_delta);
      }
    }

    // tau_s | rest: exact gamma conditional.
    tau_s = rng.gamma_rate(pr.a_s + 0.5 * rank_f, 1.0 / pr.b_s + 0.5 * std::max(quad_f, 0.0));
    if (!std::isfinite(tau_s) || tau_s <= 0.0) {
      throw Error(Errc::numerical_failure,
                  "degenerate tau_s draw at iteration " + std::to_string(it));
    }

    if (it >= burn) {
      const long k = it - burn;
      out.beta_samples.row(k) = beta.transpose();
      if (cfg.store_delta) out.delta_samples.row(k) = delta.transpose();
      out.tau_s_samples[k] = tau_s;
    }
  }

  out.acceptance_rates["beta"] = keep ? static_cast<double>(accept_beta) / keep : 0.0;
  if (q) {
    out.acceptance_rates["delta"] = keep ? static_cast<double>(accept_delta) / keep : 0.0;
  }
  for (const auto& [block, rate] : out.acceptance_rates) {
    if (rate < 0.05 || rate > 0.7) {
      out.warnings.push_back("acceptance rate for block '" + block + "' is " +
                             std::to_string(rate) + ", outside [0.05, 0.7]");
    }
  }
  return out;
}

double batch_means_mcse(const Vector& samples) {
  const Index m = samples.size();
  if (m < 4) throw Error(Errc::invalid_parameter, "too few samples for batch means");
  const Index a = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(m))));
  const Index b = m / a;
  const Index used = a * b;
  const double grand = samples.head(used).mean();
  double ssb = 0.0;
  for (Index k = 0; k < a; ++k) {
    const double bm = samples.segment(k * b, b).mean();
    ssb += (bm - grand) * (bm - grand);
  }
  const double var_asym = static_cast<double>(b) * ssb / static_cast<double>(a - 1);
  return std::sqrt(var_asym / static_cast<double>(used));
}

double effective_sample_size(const Vector& samples) {
  const Index m = samples.size();
  if (m < 4) throw Error(Errc::invalid_parameter, "too few samples for ESS");
  const double mean = samples.mean();
  const double var = (samples.array() - mean).square().sum() / static_cast<double>(m - 1);
  if (var <= 0.0) return static_cast<double>(m);
  const double mcse = batch_means_mcse(samples);
  if (mcse <= 0.0) return static_cast<double>(m);
  return var / (mcse * mcse);
}

ChainDiagnostics run_chain_diagnostics(const ChainOutput& out) {
  if (out.retained() < 100) {
    throw Error(Errc::invalid_parameter, "diagnostics need at least 100 retained samples");
  }
  ChainDiagnostics d;
  const Index p = out.beta_samples.cols();
  std::vector<double> mcse, ess;
  for (Index j = 0; j < p; ++j) {
    d.names.push_back("beta_" + std::to_string(j));
    mcse.push_back(batch_means_mcse(out.beta_samples.col(j)));
    ess.push_back(effective_sample_size(out.beta_samples.col(j)));
  }
  if (out.tau_eps_samples.size()) {
    d.names.push_back("tau_eps");
    mcse.push_back(batch_means_mcse(out.tau_eps_samples));
    ess.push_back(effective_sample_size(out.tau_eps_samples));
  }
  if (out.tau_s_samples.size()) {
    d.names.push_back("tau_s");
    mcse.push_back(batch_means_mcse(out.tau_s_samples));
    ess.push_back(effective_sample_size(out.tau_s_samples));
  }
  d.mcse = Eigen::Map<Vector>(mcse.data(), static_cast<Index>(mcse.size()));
  d.ess = Eigen::Map<Vector>(ess.data(), static_cast<Index>(ess.size()));
  return d;
}

}  // namespace rsr
