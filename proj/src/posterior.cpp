#include "rsr/posterior.hpp"

#include "rsr/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rsr {

namespace {

constexpr double kLogDrop = 46.0;  // exp(-46) ~ 1e-20 of the peak

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double std_normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double quantile_type7(Vector samples, double prob) {
  const Index m = samples.size();
  if (m == 0) throw Error(Errc::invalid_parameter, "quantile of empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw Error(Errc::invalid_parameter, "quantile probability outside [0,1]");
  }
  std::sort(samples.data(), samples.data() + m);
  const double h = (static_cast<double>(m) - 1.0) * prob;
  const Index lo = static_cast<Index>(std::floor(h));
  if (lo + 1 >= m) return samples[m - 1];
  const double frac = h - static_cast<double>(lo);
  return samples[lo] + frac * (samples[lo + 1] - samples[lo]);
}

PosteriorSummary summarize_samples(const Matrix& samples, const std::vector<std::string>& names,
                                   double alpha) {
  if (samples.rows() < 100) {
    throw Error(Errc::invalid_parameter, "summaries need at least 100 retained samples");
  }
  if (static_cast<Index>(names.size()) != samples.cols()) {
    throw Error(Errc::invalid_parameter, "name count does not match sample columns");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(Errc::invalid_parameter, "alpha must be in (0,1)");
  }
  const Index k = samples.cols();
  PosteriorSummary s;
  s.names = names;
  s.alpha = alpha;
  s.mean.resize(k);
  s.variance.resize(k);
  s.median.resize(k);
  s.ci_lo.resize(k);
  s.ci_hi.resize(k);
  s.mcse.resize(k);
  const double m = static_cast<double>(samples.rows());
  for (Index j = 0; j < k; ++j) {
    const Vector col = samples.col(j);
    s.mean[j] = col.mean();
    s.variance[j] = (col.array() - s.mean[j]).square().sum() / (m - 1.0);
    s.median[j] = quantile_type7(col, 0.5);
    s.ci_lo[j] = quantile_type7(col, alpha / 2.0);
    s.ci_hi[j] = quantile_type7(col, 1.0 - alpha / 2.0);
    s.mcse[j] = batch_means_mcse(col);
  }
  return s;
}

PosteriorSummary summarize(const ChainOutput& chain, double alpha) {
  const Index p = chain.beta_samples.cols();
  const bool has_eps = chain.tau_eps_samples.size() > 0;
  const bool has_s = chain.tau_s_samples.size() > 0;
  Matrix samples(chain.beta_samples.rows(), p + (has_eps ? 1 : 0) + (has_s ? 1 : 0));
  std::vector<std::string> names;
  samples.leftCols(p) = chain.beta_samples;
  for (Index j = 0; j < p; ++j) names.push_back("beta_" + std::to_string(j));
  Index c = p;
  if (has_eps) {
    samples.col(c++) = chain.tau_eps_samples;
    names.push_back("tau_eps");
  }
  if (has_s) {
    samples.col(c++) = chain.tau_s_samples;
    names.push_back("tau_s");
  }
  return summarize_samples(samples, names, alpha);
}

double ns_posterior_sigma_mean(const DesignMatrix& design, const Vector& y,
                               const PriorConfig& priors) {
  priors.validate();
  const Index n = design.n(), p = design.p();
  const double denom = (priors.a_eps - 1.0) + 0.5 * static_cast<double>(n - p);
  if (!(denom > 0.0)) {
    throw Error(Errc::moment_undefined, "posterior mean of sigma does not exist");
  }
  const Vector ols = (design.X.transpose() * design.X)
                         .ldlt()
                         .solve(design.X.transpose() * y);
  const double ssq = (y - design.X * ols).squaredNorm();
  return (1.0 / priors.b_eps + 0.5 * ssq) / denom;
}

double conditional_sigma_mean(const ModelSpec& spec, const Vector& y, double r) {
  if (!(r >= 0.0)) throw Error(Errc::invalid_parameter, "ratio r must be >= 0");
  const Index q = spec.q();
  if (q > 0) {
    const Matrix WtW = spec.W.transpose() * spec.W;
    if (max_abs(WtW - Matrix::Identity(q, q)) > 1e-8) {
      throw Error(Errc::invalid_parameter, "conditional_sigma_mean needs orthonormal W");
    }
  }
  const double denom =
      spec.priors.a_eps + 0.5 * static_cast<double>(spec.n() - spec.p()) - 1.0;
  if (!(denom > 0.0)) {
    throw Error(Errc::moment_undefined, "posterior mean of sigma does not exist");
  }
  double quad = 0.0;
  if (q > 0) {
    const Vector t = spec.W.transpose() * y;
    const Matrix inner =
        Matrix::Identity(q, q) -
        (Matrix::Identity(q, q) + r * spec.F).ldlt().solve(Matrix::Identity(q, q));
    quad = t.dot(inner * t);
  }
  return (1.0 / spec.priors.b_eps + 0.5 * quad) / denom;
}

// ---------------------------------------------------------------------------
// GaussianMarginalOracle

GaussianMarginalOracle::GaussianMarginalOracle(const ModelSpec& spec, const Vector& y) {
  if (spec.family != Family::gaussian) {
    throw Error(Errc::invalid_parameter, "oracle requires a Gaussian spec");
  }
  if (y.size() != spec.n()) throw Error(Errc::invalid_parameter, "response length mismatch");
  n_ = spec.n();
  p_ = spec.p();
  q_ = spec.q();
  priors_ = spec.priors;
  priors_.validate();
  X_ = spec.design.X;
  W_ = spec.W;
  y_ = y;

  if (q_ > 0) {
    const double ortho = max_abs(X_.transpose() * W_);
    if (ortho > 1e-8 * std::max(1.0, max_abs(X_))) {
      throw Error(Errc::invalid_parameter,
                  "oracle requires a restricted basis: ||X^T W|| = " + std::to_string(ortho));
    }
  }

  xtx_ = X_.transpose() * X_;
  Eigen::LLT<Matrix> llt(xtx_);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::rank_deficient_design, "X^T X is not positive definite");
  }
  ols_ = llt.solve(X_.transpose() * y_);
  const Matrix xtx_inv = llt.solve(Matrix::Identity(p_, p_));
  xtx_inv_diag_ = xtx_inv.diagonal();
  ssq_perp_ = (y_ - X_ * ols_).squaredNorm();

  if (q_ > 0) {
    wtw_ = W_.transpose() * W_;
    f_ = 0.5 * (spec.F + spec.F.transpose());
    wty_ = W_.transpose() * y_;
    orthonormal_w_ = max_abs(wtw_ - Matrix::Identity(q_, q_)) <= 1e-8;
    Eigen::SelfAdjointEigenSolver<Matrix> fe(f_);
    if (fe.info() != Eigen::Success) {
      throw Error(Errc::numerical_failure, "penalty eigendecomposition failed");
    }
    const double scale = std::max(1.0, max_abs(fe.eigenvalues()));
    if (fe.eigenvalues().minCoeff() < -1e-8 * scale) {
      throw Error(Errc::invalid_parameter, "penalty is not non-negative definite");
    }
    zeta_ = fe.eigenvalues().cwiseMax(0.0);
    u_basis_ = fe.eigenvectors();
    s_coord_ = u_basis_.transpose() * wty_;
    for (Index i = 0; i < q_; ++i) {
      if (zeta_[i] > 1e-8 * scale) rank_f_ += 1.0;
    }
  }

  // Locate the mode of the log kernel, then integration bounds where the
  // kernel has fallen kLogDrop below it.
  double best_u = 0.0, best_v = 0.0, best = -std::numeric_limits<double>::infinity();
  for (double u = -34.0; u <= 34.0; u += 1.0) {
    if (q_ == 0) {
      const double val = log_kernel(u, 0.0);
      if (val > best) best = val, best_u = u;
    } else {
      for (double v = -34.0; v <= 34.0; v += 1.0) {
        const double val = log_kernel(u, v);
        if (val > best) best = val, best_u = u, best_v = v;
      }
    }
  }
  double step = 1.0;
  for (int round = 0; round < 8; ++round) {
    step /= 4.0;
    double cu = best_u, cv = best_v;
    for (double du = -3.0; du <= 3.0; du += 1.0) {
      if (q_ == 0) {
        const double val = log_kernel(cu + du * step, 0.0);
        if (val > best) best = val, best_u = cu + du * step;
      } else {
        for (double dv = -3.0; dv <= 3.0; dv += 1.0) {
          const double val = log_kernel(cu + du * step, cv + dv * step);
          if (val > best) best = val, best_u = cu + du * step, best_v = cv + dv * step;
        }
      }
    }
  }
  mode_u_ = best_u;
  mode_v_ = best_v;
  log_peak_ = best;

  auto walk = [&](double from, double dir, const std::function<double(double)>& f) {
    double x = from;
    while (f(x) > log_peak_ - kLogDrop && std::abs(x - from) < 80.0) x += dir * 0.5;
    return x + dir * 2.0;
  };
  u_lo_ = walk(mode_u_, -1.0, [&](double u) {
    return q_ == 0 ? log_kernel(u, 0.0) : log_kernel(u, mode_v_);
  });
  u_hi_ = walk(mode_u_, 1.0, [&](double u) {
    return q_ == 0 ? log_kernel(u, 0.0) : log_kernel(u, mode_v_);
  });
  if (q_ > 0) {
    v_lo_ = std::numeric_limits<double>::infinity();
    v_hi_ = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 6; ++k) {
      const double u = u_lo_ + (u_hi_ - u_lo_) * k / 6.0;
      double cv = mode_v_, cbest = log_kernel(u, cv);
      for (double v = -40.0; v <= 40.0; v += 1.0) {
        const double val = log_kernel(u, v);
        if (val > cbest) cbest = val, cv = v;
      }
      v_lo_ = std::min(v_lo_, walk(cv, -1.0, [&](double v) { return log_kernel(u, v); }));
      v_hi_ = std::max(v_hi_, walk(cv, 1.0, [&](double v) { return log_kernel(u, v); }));
    }
    v_lo_ -= 1.0;
    v_hi_ += 1.0;
  }
}

void GaussianMarginalOracle::kernel_terms(double r, double& logdet, double& c_quad) const {
  if (orthonormal_w_) {
    logdet = 0.0;
    c_quad = 0.0;
    for (Index i = 0; i < q_; ++i) {
      const double g = 1.0 + r * zeta_[i];
      logdet += std::log(g);
      c_quad += s_coord_[i] * s_coord_[i] / g;
    }
    return;
  }
  Matrix M = wtw_ + r * f_;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "W^T W + r F is not positive definite");
  }
  logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  c_quad = wty_.dot(llt.solve(wty_));
}

double GaussianMarginalOracle::log_kernel(double u, double v) const {
  const double tau_eps = std::exp(u);
  double val = (priors_.a_eps + 0.5 * static_cast<double>(n_ - p_ - q_)) * u -
               tau_eps / priors_.b_eps;
  if (q_ > 0) {
    const double tau_s = std::exp(v);
    const double r = std::exp(v - u);
    double logdet, c_quad;
    kernel_terms(r, logdet, c_quad);
    val += (priors_.a_s + 0.5 * rank_f_) * v - tau_s / priors_.b_s - 0.5 * logdet -
           0.5 * tau_eps * (ssq_perp_ - c_quad);
  } else {
    val += -0.5 * tau_eps * ssq_perp_;
  }
  return val;
}

Vector GaussianMarginalOracle::integrate(
    const std::function<Vector(double, double)>& components, Index dim) const {
  const double rel_outer = 1e-10;
  if (q_ == 0) {
    auto f = [&](double u) -> Vector {
      return std::exp(log_kernel(u, 0.0) - log_peak_) * components(u, 0.0);
    };
    return adaptive_gauss_kronrod(f, u_lo_, u_hi_, rel_outer, 0.0, 4000).value;
  }
  auto outer = [&](double u) -> Vector {
    auto inner = [&](double v) -> Vector {
      return std::exp(log_kernel(u, v) - log_peak_) * components(u, v);
    };
    return adaptive_gauss_kronrod(inner, v_lo_, v_hi_, 1e-11,
                                  1e-13 * (v_hi_ - v_lo_), 4000)
        .value;
  };
  return adaptive_gauss_kronrod(outer, u_lo_, u_hi_, rel_outer,
                                0.0, 4000).value;
}

QuadratureMoments GaussianMarginalOracle::moments() const {
  const Index dim = 2 + q_;
  auto comps = [&](double u, double v) -> Vector {
    Vector c(dim);
    c[0] = 1.0;
    c[1] = std::exp(-u);
    if (q_ > 0) {
      const double r = std::exp(v - u);
      if (orthonormal_w_) {
        for (Index i = 0; i < q_; ++i) c[2 + i] = s_coord_[i] / (1.0 + r * zeta_[i]);
      } else {
        const Vector m = (wtw_ + r * f_).llt().solve(wty_);
        c.tail(q_) = m;
      }
    }
    return c;
  };
  const Vector z = integrate(comps, dim);
  QuadratureMoments mom;
  mom.e_sigma = z[1] / z[0];
  mom.var_beta = xtx_inv_diag_ * mom.e_sigma;
  mom.e_beta = ols_;
  if (q_ > 0) {
    Vector e_delta = z.tail(q_) / z[0];
    if (orthonormal_w_) e_delta = (u_basis_ * e_delta).eval();
    mom.e_beta = ols_ - xtx_.llt().solve(X_.transpose() * (W_ * e_delta));
  }
  return mom;
}

Vector GaussianMarginalOracle::coef_density(Index coef, const Vector& grid) const {
  const double xid = xtx_inv_diag_[coef];
  const double center = ols_[coef];
  const Index g_count = grid.size();
  auto comps = [&](double u, double /*v*/) -> Vector {
    Vector c(1 + g_count);
    c[0] = 1.0;
    const double sd = std::sqrt(xid) * std::exp(-0.5 * u);
    for (Index g = 0; g < g_count; ++g) {
      const double z = (grid[g] - center) / sd;
      c[1 + g] = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
    }
    return c;
  };
  const Vector z = integrate(comps, 1 + g_count);
  return z.tail(g_count) / z[0];
}

double GaussianMarginalOracle::coef_side_mass(Index coef, double x, bool upper) const {
  const double xid = xtx_inv_diag_[coef];
  const double center = ols_[coef];
  auto comps = [&](double u, double /*v*/) -> Vector {
    Vector c(2);
    c[0] = 1.0;
    const double z = (x - center) * std::exp(0.5 * u) / std::sqrt(xid);
    c[1] = upper ? std_normal_tail(z) : std_normal_cdf(z);
    return c;
  };
  const Vector z = integrate(comps, 2);
  return z[1] / z[0];
}

double GaussianMarginalOracle::coef_tail_above(Index coef, double x) const {
  return coef_side_mass(coef, x, true);
}

double GaussianMarginalOracle::coef_cdf(Index coef, double x) const {
  return x > ols_[coef] ? 1.0 - coef_side_mass(coef, x, true) : coef_side_mass(coef, x, false);
}

double GaussianMarginalOracle::log_joint_normalizer() const {
  if (p_ != 1) {
    throw Error(Errc::invalid_parameter, "joint normalizer is defined for p = 1");
  }
  auto comps = [&](double, double) -> Vector { return Vector::Ones(1); };
  const double z0 = integrate(comps, 1)[0];
  double log_prefac = -0.5 * static_cast<double>(n_ - 1) * std::log(2.0 * M_PI) -
                      0.5 * std::log(xtx_(0, 0)) - std::lgamma(priors_.a_eps) -
                      priors_.a_eps * std::log(priors_.b_eps);
  if (q_ > 0) {
    log_prefac += -std::lgamma(priors_.a_s) - priors_.a_s * std::log(priors_.b_s);
  }
  return log_prefac + log_peak_ + std::log(z0);
}

QuadratureMoments quadrature_moments(const ModelSpec& spec, const Vector& y) {
  return GaussianMarginalOracle(spec, y).moments();
}

// ---------------------------------------------------------------------------
// Closed-form NS marginal, p = 1

double ClosedFormNS::log_pdf(double beta) const {
  // ||Y - X beta||^2 / 2 + 1/b_eps = (xtx/2) ((beta-b)^2 + c)
  return -log_d_h - d * std::log((xtx / 2.0) * ((beta - b) * (beta - b) + c));
}

double ClosedFormNS::side_mass(double beta, bool upper) const {
  // Mixture representation: beta | tau_eps is normal, tau_eps | Y gamma with
  // shape a_eps + (n-1)/2 and rate 1/b_eps + ||P_perp Y||^2 / 2 = (xtx/2) c.
  const double shape = a_eps + 0.5 * static_cast<double>(n - 1);
  const double rate = (xtx / 2.0) * c;
  const double lo = std::log(shape / rate) - 40.0;
  const double hi = std::log(shape / rate) + 12.0;
  auto f = [&](double u) {
    const double tau = std::exp(u);
    const double log_gamma_pdf = shape * u - rate * tau - std::lgamma(shape) +
                                 shape * std::log(rate);
    const double z = (beta - b) * std::sqrt(tau * xtx);
    const double phi = upper ? std_normal_tail(z) : std_normal_cdf(z);
    return std::exp(log_gamma_pdf) * phi;
  };
  return integrate_scalar(f, lo, hi, 1e-11, 1e-16);
}

double ClosedFormNS::tail_above(double beta) const { return side_mass(beta, true); }

double ClosedFormNS::cdf(double beta) const {
  return beta > b ? 1.0 - side_mass(beta, true) : side_mass(beta, false);
}

ClosedFormNS closed_form_ns_density(const DesignMatrix& design, const Vector& y,
                                    const PriorConfig& priors) {
  priors.validate();
  if (design.p() != 1) {
    throw Error(Errc::invalid_parameter, "closed form requires a single-column design");
  }
  ClosedFormNS h;
  h.n = design.n();
  h.a_eps = priors.a_eps;
  h.b_eps = priors.b_eps;
  h.xtx = design.X.col(0).squaredNorm();
  const double xty = design.X.col(0).dot(y);
  h.b = xty / h.xtx;
  h.c = (2.0 / h.xtx) * (0.5 * y.squaredNorm() - 0.5 * xty * xty / h.xtx + 1.0 / priors.b_eps);
  h.d = priors.a_eps + 0.5 * static_cast<double>(h.n);
  if (!(h.c > 0.0)) throw Error(Errc::numerical_failure, "normalizing constant c <= 0");
  if (!(h.d > 0.5)) throw Error(Errc::moment_undefined, "density normalizer undefined");
  h.log_d_h = -h.d * std::log(h.xtx / 2.0) + 0.5 * std::log(M_PI) +
              std::lgamma(h.d - 0.5) - std::lgamma(h.d) + (0.5 - h.d) * std::log(h.c);
  return h;
}

// ---------------------------------------------------------------------------
// Theorem and lemma verification

Thm2Report verify_thm2(const ModelSpec& rsr_spec, const Vector& y) {
  Thm2Report rep;
  rep.var_rsr = GaussianMarginalOracle(rsr_spec, y).moments().var_beta;
  ModelSpec ns;
  ns.kind = ModelKind::ns;
  ns.design = rsr_spec.design;
  ns.W = Matrix(rsr_spec.n(), 0);
  ns.F = Matrix(0, 0);
  ns.family = Family::gaussian;
  ns.priors = rsr_spec.priors;
  rep.var_ns = GaussianMarginalOracle(ns, y).moments().var_beta;
  rep.ordered = ((rep.var_rsr - rep.var_ns).array() <= 1e-10).all();
  return rep;
}

Thm4Report verify_thm4(const DesignMatrix& design, const Matrix& W1, const Matrix& W2,
                       const Matrix& B, const Vector& y, const PriorConfig& priors,
                       bool assert_same_space) {
  if (W1.rows() != W2.rows() || W1.cols() != W2.cols()) {
    throw Error(Errc::invalid_comparison, "bases must have matching dimensions");
  }
  Thm4Report rep;
  const Matrix p1 = W1 * (W1.transpose() * W1).ldlt().solve(W1.transpose());
  const Matrix p2 = W2 * (W2.transpose() * W2).ldlt().solve(W2.transpose());
  const double mismatch =
      std::max(max_abs(W2 - p1 * W2), max_abs(W1 - p2 * W1));
  rep.same_space = mismatch < 1e-8;
  if (assert_same_space && !rep.same_space) {
    throw Error(Errc::invalid_comparison,
                "bases span different subspaces (residual " + std::to_string(mismatch) + ")");
  }

  auto build = [&](const Matrix& W) {
    Matrix F = W.transpose() * B * W;
    F = 0.5 * (F + F.transpose()).eval();
    return make_custom_model(design, W, F, priors);
  };
  const ModelSpec spec1 = build(W1);
  const ModelSpec spec2 = build(W2);
  const GaussianMarginalOracle o1(spec1, y), o2(spec2, y);
  const QuadratureMoments m1 = o1.moments(), m2 = o2.moments();
  rep.moment_diff = std::max(max_abs(m1.e_beta - m2.e_beta), max_abs(m1.var_beta - m2.var_beta));

  for (Index coef = 0; coef < design.p(); ++coef) {
    const double sd = std::sqrt(m1.var_beta[coef]);
    Vector grid(41);
    for (Index g = 0; g < 41; ++g) {
      grid[g] = m1.e_beta[coef] + sd * (-5.0 + 0.25 * static_cast<double>(g));
    }
    const Vector d1 = o1.coef_density(coef, grid);
    const Vector d2 = o2.coef_density(coef, grid);
    rep.density_diff = std::max(rep.density_diff, max_abs(d1 - d2));
  }
  rep.equal_within_tol = rep.moment_diff <= 1e-8 && rep.density_diff <= 1e-8;
  return rep;
}

void simultaneous_eigen(const Matrix& G, const Matrix& F, Vector& omega, Vector& zeta) {
  const Index q = F.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> fe(F);
  if (fe.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "eigendecomposition failed");
  }
  Matrix U = fe.eigenvectors();
  zeta = fe.eigenvalues();
  Matrix Gt = U.transpose() * G * U;
  const double scale = std::max(1.0, max_abs(zeta));
  // Within each eigenvalue cluster of F, rotating the block leaves F
  // diagonal, so the cluster blocks of G can be diagonalized independently.
  Index start = 0;
  while (start < q) {
    Index end = start + 1;
    while (end < q && std::abs(zeta[end] - zeta[start]) <= 1e-8 * scale) ++end;
    const Index len = end - start;
    if (len > 1) {
      Eigen::SelfAdjointEigenSolver<Matrix> ge(Gt.block(start, start, len, len));
      U.middleCols(start, len) = (U.middleCols(start, len) * ge.eigenvectors()).eval();
    }
    start = end;
  }
  Gt = U.transpose() * G * U;
  double off = 0.0;
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < q; ++j) {
      if (i != j) off = std::max(off, std::abs(Gt(i, j)));
    }
  }
  if (off > 1e-6 * std::max(1.0, max_abs(Gt))) {
    throw Error(Errc::invalid_parameter, "matrices do not commute; no common eigenbasis");
  }
  omega = Gt.diagonal();
}

LemmaReport verify_lemmas(const ModelSpec& spec, const Vector& ratios) {
  const Index q = spec.q();
  if (q == 0) throw Error(Errc::invalid_parameter, "lemma checks need q > 0");
  LemmaReport rep;
  const Matrix WtW = spec.W.transpose() * spec.W;
  const Matrix F = 0.5 * (spec.F + spec.F.transpose());
  Vector omega, zeta;
  simultaneous_eigen(WtW, F, omega, zeta);
  if (omega.minCoeff() <= 0.0) {
    throw Error(Errc::invalid_parameter, "W^T W must be positive definite");
  }
  const double z_tol = 1e-8 * std::max(1.0, max_abs(zeta));

  // Coefficients of prod_{i in NZ} (omega_i + t zeta_i), scaled by the
  // omega-product over the F-kernel directions.
  std::vector<double> poly{1.0};
  double kernel_factor = 1.0;
  for (Index i = 0; i < q; ++i) {
    if (zeta[i] > z_tol) {
      std::vector<double> next(poly.size() + 1, 0.0);
      for (size_t k = 0; k < poly.size(); ++k) {
        next[k] += poly[k] * omega[i];
        next[k + 1] += poly[k] * zeta[i];
      }
      poly = std::move(next);
    } else {
      kernel_factor *= omega[i];
    }
  }
  const Index rank_f = static_cast<Index>(poly.size()) - 1;
  const double det_wtw = poly[0] * kernel_factor;

  const ProjectionPair pp = ProjectionPair::from_design(spec.design);
  rep.min_sigma_eigenvalue = std::numeric_limits<double>::infinity();
  rep.det_margin_min = std::numeric_limits<double>::infinity();
  bool det_ok = true;
  for (Index k = 0; k < ratios.size(); ++k) {
    const double r = ratios[k];
    if (!(r > 0.0)) throw Error(Errc::invalid_parameter, "ratios must be positive");
    const Matrix M = WtW + r * F;
    const double lhs = M.determinant();
    for (Index j = 1; j <= rank_f; ++j) {
      const double rhs = det_wtw + poly[static_cast<size_t>(j)] * kernel_factor * std::pow(r, j);
      const double margin = (lhs - rhs) / std::max(1.0, std::abs(lhs));
      rep.det_margin_min = std::min(rep.det_margin_min, margin);
      if (margin < -1e-9) det_ok = false;
    }
    const Matrix sigma = pp.P_perp - spec.W * M.llt().solve(spec.W.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> se(0.5 * (sigma + sigma.transpose()),
                                             Eigen::EigenvaluesOnly);
    rep.min_sigma_eigenvalue = std::min(rep.min_sigma_eigenvalue, se.eigenvalues().minCoeff());
  }
  rep.det_bound_ok = det_ok;
  rep.sigma_nnd = rep.min_sigma_eigenvalue >= -1e-10;
  return rep;
}

Cor1Report cor1_analysis(const ModelSpec& spec, const Vector& y) {
  if (spec.p() != 1) throw Error(Errc::invalid_parameter, "corollary analysis needs p = 1");
  const Index q = spec.q();
  if (q == 0) throw Error(Errc::invalid_parameter, "corollary analysis needs q > 0");
  if (spec.penalty_rank() != q) {
    throw Error(Errc::invalid_parameter, "corollary analysis needs positive definite F");
  }
  Cor1Report rep;
  const GaussianMarginalOracle oracle(spec, y);
  const ClosedFormNS h = closed_form_ns_density(spec.design, y, spec.priors);

  // C_q with |W^T W + r F| > C_q (1 + r^q), from the paired eigenvalue
  // products: min of the r^0 and r^q coefficients.
  Vector omega, zeta;
  simultaneous_eigen(spec.W.transpose() * spec.W, 0.5 * (spec.F + spec.F.transpose()), omega,
                     zeta);
  double log_c0 = 0.0, log_cq = 0.0;
  for (Index i = 0; i < q; ++i) {
    log_c0 += std::log(omega[i]);
    log_cq += std::log(zeta[i]);
  }
  rep.log_c_q = std::min(log_c0, log_cq);

  rep.log_d_g_star = oracle.log_joint_normalizer();
  rep.log_k = -0.5 * static_cast<double>(h.n) * std::log(2.0 * M_PI) +
              std::lgamma(0.5 * h.n + h.a_eps) - std::lgamma(h.a_eps) -
              h.a_eps * std::log(h.b_eps) + h.log_d_h - 0.5 * rep.log_c_q;
  rep.premise = rep.log_d_g_star > rep.log_k;

  const double sd_h = std::sqrt(h.c / (2.0 * h.d - 3.0));
  const double lo = h.b - 10.0 * sd_h;
  const double hi = h.b + 10.0 * sd_h;
  rep.left_ratio = oracle.coef_cdf(0, lo) / h.cdf(lo);
  rep.right_ratio = oracle.coef_tail_above(0, hi) / h.tail_above(hi);

  auto bracket = [&](double beta) {
    const double mu = h.xtx * beta * beta - 2.0 * beta * (h.b * h.xtx);
    return 0.5 * mu + 1.0 / h.b_eps > 0.0;
  };
  rep.evaluable = bracket(lo) && bracket(hi);
  rep.nested_at_test_points = rep.left_ratio <= 1.0 && rep.right_ratio <= 1.0;
  return rep;
}

}  // namespace rsr
