#include "rsr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rsr {

const char* generating_kind_name(GeneratingKind k) {
  switch (k) {
    case GeneratingKind::ns: return "ns";
    case GeneratingKind::rhz: return "rhz";
    case GeneratingKind::icar: return "icar";
  }
  return "?";
}

const char* study_name(Study s) {
  switch (s) {
    case Study::sim1: return "sim1";
    case Study::sim2: return "sim2";
    case Study::sim3: return "sim3";
  }
  return "?";
}

Vector gen_covariate(const LaplacianEigen& eig, const CovariateRecipe& recipe, RngStream& rng) {
  const Index n = eig.n();
  std::vector<Index> targets = recipe.target_indices;
  if (targets.empty()) {
    if (recipe.k > n - 1) {
      throw Error(Errc::invalid_parameter, "recipe targets more eigenvectors than available");
    }
    // Lowest nonzero eigenvalues sit just before the kernel tail position.
    for (Index i = n - 1 - recipe.k; i < n - 1; ++i) targets.push_back(i);
  }
  Vector rho = Vector::Zero(n);
  for (Index t : targets) {
    if (t < 0 || t >= n - 1) {
      throw Error(Errc::invalid_parameter, "target index outside the nonzero spectrum");
    }
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    rho[t] = sign * rng.uniform();
  }
  const double norm = rho.norm();
  if (norm > 0.0) rho /= norm;
  return recipe.s_l * std::sqrt(static_cast<double>(n - 1)) * (eig.V * rho) +
         Vector::Constant(n, recipe.l_bar);
}

CovariateDecomposition covariate_decompose(const LaplacianEigen& eig, const Vector& l) {
  const Index n = eig.n();
  if (l.size() != n) throw Error(Errc::invalid_parameter, "vector length mismatch");
  CovariateDecomposition d;
  d.l_bar = l.mean();
  const Vector centered = l.array() - d.l_bar;
  d.s_l = std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1));
  d.rho = Vector::Zero(n);
  if (d.s_l > 0.0) {
    for (Index i = 0; i + 1 < n; ++i) {
      d.rho[i] = eig.V.col(i).dot(centered) / (d.s_l * std::sqrt(static_cast<double>(n - 1)));
    }
  }
  return d;
}

Vector covariate_reconstruct(const LaplacianEigen& eig, const CovariateDecomposition& d) {
  const Index n = eig.n();
  return d.s_l * std::sqrt(static_cast<double>(n - 1)) * (eig.V * d.rho) +
         Vector::Constant(n, d.l_bar);
}

ResponseGenerator::ResponseGenerator(const LaplacianEigen& eig, Matrix x_full,
                                     bool rhz_covariance)
    : eig_(eig), x_full_(std::move(x_full)), rhz_covariance_(rhz_covariance) {
  DesignMatrix d{x_full_, true};
  l_ = complement_basis(d).W;
  Matrix m = l_.transpose() * eig_.Q * l_;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "restricted Laplacian eigendecomposition failed");
  }
  l_u_ = solver.eigenvectors();
  l_zeta_ = solver.eigenvalues();
  if (l_zeta_.minCoeff() <= 0.0) {
    throw Error(Errc::numerical_failure, "L^T Q L is not positive definite");
  }
}

Vector ResponseGenerator::draw_effect(GeneratingKind kind, double tau_s, RngStream& rng) const {
  const Index n = eig_.n();
  switch (kind) {
    case GeneratingKind::ns:
      return Vector::Zero(n);
    case GeneratingKind::rhz: {
      const Index m = l_zeta_.size();
      Vector coord(m);
      for (Index i = 0; i < m; ++i) {
        const double scale = rhz_covariance_ ? std::sqrt(l_zeta_[i] / tau_s)
                                             : 1.0 / std::sqrt(tau_s * l_zeta_[i]);
        coord[i] = scale * rng.normal();
      }
      return l_ * (l_u_ * coord);
    }
    case GeneratingKind::icar:
      return sample_icar(eig_, tau_s, rng);
  }
  throw Error(Errc::invalid_parameter, "unknown generating kind");
}

Vector ResponseGenerator::draw(GeneratingKind kind, const Vector& beta_full, double tau_s,
                               Family family, RngStream& rng) const {
  if (beta_full.size() != x_full_.cols()) {
    throw Error(Errc::invalid_parameter, "coefficient vector does not match design");
  }
  const Index n = eig_.n();
  Vector eta = x_full_ * beta_full + draw_effect(kind, tau_s, rng);
  if (family == Family::gaussian) {
    for (Index i = 0; i < n; ++i) eta[i] += rng.normal();
    return eta;
  }
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = static_cast<double>(rng.poisson(std::exp(eta[i])));
  return y;
}

Vector gen_response(GeneratingKind kind, const LaplacianEigen& eig, const Matrix& x_full,
                    const Vector& beta_full, double tau_s, Family family, RngStream& rng) {
  return ResponseGenerator(eig, x_full).draw(kind, beta_full, tau_s, family, rng);
}

Agreement agreement_classify(std::pair<double, double> ci_rhz, std::pair<double, double> ci_ns,
                             double truth) {
  const bool rhz_covers = ci_rhz.first <= truth && truth <= ci_rhz.second;
  const bool ns_covers = ci_ns.first <= truth && truth <= ci_ns.second;
  if (rhz_covers == ns_covers) return Agreement::agree;
  return rhz_covers ? Agreement::rhz_plus : Agreement::ns_plus;
}

int StudyConfig::effective_replicates() const {
  if (replicates > 0) return replicates;
  if (paper_scale) return study == Study::sim3 ? 100 : 1000;
  return study == Study::sim3 ? 50 : 200;
}

long StudyConfig::effective_iterations() const {
  if (iterations > 0) return iterations;
  if (paper_scale) return study == Study::sim3 ? 1000000 : 80000;
  return study == Study::sim3 ? 200000 : 20000;
}

bool SimulationReport::has(const std::string& gen, const std::string& analysis,
                           const std::string& coef, const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.generating == gen && r.analysis == analysis && r.coefficient == coef &&
        r.metric == metric) {
      return true;
    }
  }
  return false;
}

double SimulationReport::value(const std::string& gen, const std::string& analysis,
                               const std::string& coef, const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.generating == gen && r.analysis == analysis && r.coefficient == coef &&
        r.metric == metric) {
      return r.value;
    }
  }
  throw Error(Errc::invalid_parameter, "no report cell (" + gen + "," + analysis + "," + coef +
                                           "," + metric + ")");
}

CsvTable SimulationReport::to_csv() const {
  CsvTable t;
  t.headers = {"study",  "generating",  "analysis", "coefficient", "metric",
               "value",  "replicates",  "failed",   "iterations",  "burn_in",
               "seed"};
  for (const auto& r : rows) {
    t.rows.push_back({study, r.generating, r.analysis, r.coefficient, r.metric,
                      format_double(r.value), std::to_string(replicates),
                      std::to_string(failed_replicates), std::to_string(iterations),
                      std::to_string(burn_in), std::to_string(seed)});
  }
  return t;
}

namespace {

struct CellKey {
  std::string analysis, coef, metric;
};

}  // namespace

std::string SimulationReport::render_text() const {
  std::ostringstream out;
  out << "study " << study << ": " << replicates << " replicates, " << iterations
      << " iterations (burn-in " << burn_in << "), seed " << seed;
  if (failed_replicates) out << ", " << failed_replicates << " failed replicates excluded";
  out << "\n";
  std::vector<std::string> gens;
  std::vector<CellKey> keys;
  for (const auto& r : rows) {
    if (std::find(gens.begin(), gens.end(), r.generating) == gens.end()) {
      gens.push_back(r.generating);
    }
    bool seen = false;
    for (const auto& k : keys) {
      if (k.analysis == r.analysis && k.coef == r.coefficient && k.metric == r.metric) {
        seen = true;
        break;
      }
    }
    if (!seen) keys.push_back({r.analysis, r.coefficient, r.metric});
  }
  out << "generating model columns:";
  for (const auto& g : gens) out << "  " << g;
  out << "\n";
  for (const auto& k : keys) {
    std::ostringstream label;
    label << k.analysis << " " << k.coef << " " << k.metric;
    out << label.str();
    for (size_t pad = label.str().size(); pad < 34; ++pad) out << ' ';
    for (const auto& g : gens) {
      if (has(g, k.analysis, k.coef, k.metric)) {
        const std::string v = format_double(value(g, k.analysis, k.coef, k.metric));
        out << "  " << v;
        for (size_t pad = v.size(); pad < 8; ++pad) out << ' ';
      } else {
        out << "  -       ";
      }
    }
    out << "\n";
  }
  return out.str();
}

namespace {

struct CoefFit {
  double mean = 0.0, lo = 0.0, hi = 0.0;
};

struct ReplicateFits {
  bool ok = false;
  // [analysis][coef]; coef 0 = beta1, 1 = beta2; entries may be unused
  CoefFit cell[3][2];
  bool coef_present[3][2] = {{false, false}, {false, false}, {false, false}};
};

constexpr int kNs = 0, kRhz = 1, kIcar = 2;
const char* kAnalysisNames[3] = {"ns", "rhz", "icar"};

double pct(double num, double den) { return den > 0 ? 100.0 * num / den : 0.0; }

}  // namespace

SimulationReport run_simulation(const AdjacencyGraph& graph, const StudyConfig& cfg) {
  cfg.priors.validate();
  const LaplacianEigen eig = laplacian_eigen(graph);
  if (eig.kernel_dim() != 1) {
    throw Error(Errc::invalid_parameter, "simulation graph must be connected");
  }
  const Index n = graph.n;
  const int reps = cfg.effective_replicates();
  const long iters = cfg.effective_iterations();
  const long burn = cfg.burn_in >= 0 ? cfg.burn_in : iters / 10;
  const Family family = cfg.study == Study::sim3 ? Family::poisson : Family::gaussian;
  const bool two_covariates = cfg.study != Study::sim1;

  const double beta0 = cfg.small_effect ? 0.1 : 1.0;
  const double beta1 = cfg.small_effect ? 0.2 : (cfg.study == Study::sim3 ? 1.0 : 2.0);

  const std::uint64_t study_id = static_cast<std::uint64_t>(cfg.study) + 11;

  // Covariates are generated once per study and held fixed across replicates.
  CovariateRecipe recipe1{static_cast<Index>(std::ceil(0.2 * n)), {}, 1.0, 0.0};
  RngStream rng_x1 = RngStream::derive(cfg.seed, {study_id, 101});
  const Vector x1 = gen_covariate(eig, recipe1, rng_x1);
  Vector x2;
  if (two_covariates) {
    CovariateRecipe recipe2{static_cast<Index>(std::ceil(0.5 * n)), {}, 1.0, 0.0};
    RngStream rng_x2 = RngStream::derive(cfg.seed, {study_id, 102});
    x2 = gen_covariate(eig, recipe2, rng_x2);
  }

  Matrix x_gen_full(n, two_covariates ? 3 : 2);
  x_gen_full.col(0).setOnes();
  x_gen_full.col(1) = x1;
  if (two_covariates) x_gen_full.col(2) = x2;
  Vector beta_full(two_covariates ? 3 : 2);
  beta_full[0] = beta0;
  beta_full[1] = beta1;
  if (two_covariates) beta_full[2] = 0.0;
  const ResponseGenerator generator(eig, x_gen_full, cfg.rhz_gen_covariance);

  SimulationReport report;
  report.study = study_name(cfg.study) + std::string(cfg.small_effect ? "-small" : "");
  report.replicates = reps;
  report.iterations = iters;
  report.burn_in = burn;
  report.seed = cfg.seed;

  const GeneratingKind gens[3] = {GeneratingKind::ns, GeneratingKind::rhz, GeneratingKind::icar};
  for (int g = 0; g < 3; ++g) {
    const GeneratingKind gen = gens[g];
    // Analysis design: the NS generating case omits the spatially varying x1
    // in the two-covariate studies (residual dependence via an unobserved
    // covariate), otherwise all covariates enter.
    const bool omit_x1 = two_covariates && gen == GeneratingKind::ns;
    Matrix covs;
    int idx_beta1 = -1, idx_beta2 = -1;  // column in the covariate matrix
    if (!two_covariates) {
      covs = x1;
      idx_beta1 = 0;
    } else if (omit_x1) {
      covs = x2;
      idx_beta2 = 0;
    } else {
      covs.resize(n, 2);
      covs.col(0) = x1;
      covs.col(1) = x2;
      idx_beta1 = 0;
      idx_beta2 = 1;
    }

    // Data-independent analysis specs are built once per generating model.
    const ModelSpec ns_spec = make_model(ModelKind::ns, graph, covs, cfg.priors, family);
    const ModelSpec icar_spec = make_model(ModelKind::icar, graph, covs, cfg.priors, family);
    ModelSpec rhz_spec;  // Gaussian only; the Poisson RHZ basis depends on y
    if (family == Family::gaussian) {
      rhz_spec = make_model(ModelKind::rhz, graph, covs, cfg.priors, family);
    }

    std::vector<ReplicateFits> fits(static_cast<size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
      RngStream rng =
          RngStream::derive(cfg.seed, {study_id, static_cast<std::uint64_t>(g), 1000 + rep});
      const Vector y = generator.draw(gen, beta_full, 1.0, family, rng);
      ReplicateFits& rec = fits[static_cast<size_t>(rep)];
      try {
        for (int a = 0; a < 3; ++a) {
          ChainConfig chain;
          chain.iterations = iters;
          chain.burn_in = burn;
          chain.delta_step = cfg.delta_step;
          chain.seed = RngStream::derive_seed(
              cfg.seed, {study_id, static_cast<std::uint64_t>(g), 1000 + rep,
                         static_cast<std::uint64_t>(a) + 7});
          const ModelSpec* spec = nullptr;
          ModelSpec rhz_local;
          if (a == kNs) {
            spec = &ns_spec;
          } else if (a == kIcar) {
            spec = &icar_spec;
          } else if (family == Family::gaussian) {
            spec = &rhz_spec;
          } else {
            rhz_local = make_model(ModelKind::rhz, graph, covs, cfg.priors, family,
                                   std::nullopt, y);
            spec = &rhz_local;
          }
          const ChainOutput chain_out = family == Family::gaussian
                                            ? gibbs_gaussian(*spec, y, chain)
                                            : mh_poisson(*spec, y, chain);
          // Coefficient positions: intercept-led designs shift by one.
          const int shift = spec->design.with_intercept ? 1 : 0;
          const PosteriorSummary s = summarize(chain_out);
          auto fill = [&](int coef_slot, int col) {
            if (col < 0) return;
            const Index j = static_cast<Index>(col + shift);
            rec.cell[a][coef_slot] = {s.mean[j], s.ci_lo[j], s.ci_hi[j]};
            rec.coef_present[a][coef_slot] = true;
          };
          fill(0, idx_beta1);
          fill(1, idx_beta2);
        }
        rec.ok = true;
      } catch (const Error&) {
        rec.ok = false;
      }
    }

    const std::string gen_name = generating_kind_name(gen);
    int used = 0;
    for (const auto& rec : fits) {
      if (rec.ok) ++used;
    }
    report.failed_replicates += reps - used;

    const double truths[2] = {beta1, 0.0};
    const char* coef_names[2] = {"beta1", "beta2"};
    for (int a = 0; a < 3; ++a) {
      for (int c = 0; c < 2; ++c) {
        bool present = false;
        for (const auto& rec : fits) {
          if (rec.ok && rec.coef_present[a][c]) present = true;
        }
        if (!present) continue;
        const double truth = truths[c];
        int covered = 0, excl_zero = 0, count = 0;
        std::vector<double> biases;
        double sq_err = 0.0;
        for (const auto& rec : fits) {
          if (!rec.ok) continue;
          const CoefFit& f = rec.cell[a][c];
          ++count;
          if (f.lo <= truth && truth <= f.hi) ++covered;
          if (!(f.lo <= 0.0 && 0.0 <= f.hi)) ++excl_zero;
          biases.push_back(truth - f.mean);
          sq_err += (f.mean - truth) * (f.mean - truth);
        }
        if (!count) continue;
        Vector bias_v = Eigen::Map<Vector>(biases.data(), static_cast<Index>(biases.size()));
        const std::string an = kAnalysisNames[a];
        const std::string cn = coef_names[c];
        report.rows.push_back({gen_name, an, cn, "coverage_pct", pct(covered, count)});
        if (truth == 0.0) {
          report.rows.push_back({gen_name, an, cn, "type_s_pct", pct(excl_zero, count)});
        } else {
          report.rows.push_back({gen_name, an, cn, "power_pct", pct(excl_zero, count)});
        }
        report.rows.push_back({gen_name, an, cn, "bias_p10", quantile_type7(bias_v, 0.10)});
        report.rows.push_back({gen_name, an, cn, "bias_p90", quantile_type7(bias_v, 0.90)});
        report.rows.push_back({gen_name, an, cn, "avg_mse", sq_err / count});
      }
    }

    // RHZ-vs-NS comparisons for coefficients present in both fits.
    for (int c = 0; c < 2; ++c) {
      int agree = 0, rhz_plus = 0, ns_plus = 0, nested = 0, count = 0;
      int agree_s = 0, rhz_plus_s = 0, ns_plus_s = 0;
      int gap_small = 0;
      for (const auto& rec : fits) {
        if (!rec.ok || !rec.coef_present[kNs][c] || !rec.coef_present[kRhz][c]) continue;
        ++count;
        const CoefFit& r = rec.cell[kRhz][c];
        const CoefFit& s = rec.cell[kNs][c];
        const double truth = truths[c];
        switch (agreement_classify({r.lo, r.hi}, {s.lo, s.hi}, truth)) {
          case Agreement::agree: ++agree; break;
          case Agreement::rhz_plus: ++rhz_plus; break;
          case Agreement::ns_plus: ++ns_plus; break;
        }
        // Type-S agreement uses zero as the reference point.
        const bool r_excl = !(r.lo <= 0.0 && 0.0 <= r.hi);
        const bool s_excl = !(s.lo <= 0.0 && 0.0 <= s.hi);
        if (r_excl == s_excl) {
          ++agree_s;
        } else if (s_excl) {
          ++rhz_plus_s;  // NS made the Type-S error, RHZ did not
        } else {
          ++ns_plus_s;
        }
        if (s.lo <= r.lo && r.hi <= s.hi) ++nested;
        if (std::abs(r.lo - s.lo) < 0.05 && std::abs(r.hi - s.hi) < 0.05) ++gap_small;
      }
      if (!count) continue;
      const std::string cn = coef_names[c];
      report.rows.push_back({gen_name, "rhz_vs_ns", cn, "agree_pct", pct(agree, count)});
      report.rows.push_back({gen_name, "rhz_vs_ns", cn, "rhz_plus_pct", pct(rhz_plus, count)});
      report.rows.push_back({gen_name, "rhz_vs_ns", cn, "ns_plus_pct", pct(ns_plus, count)});
      if (truths[c] == 0.0) {
        report.rows.push_back({gen_name, "rhz_vs_ns", cn, "type_s_agree_pct", pct(agree_s, count)});
        report.rows.push_back(
            {gen_name, "rhz_vs_ns", cn, "type_s_rhz_plus_pct", pct(rhz_plus_s, count)});
        report.rows.push_back(
            {gen_name, "rhz_vs_ns", cn, "type_s_ns_plus_pct", pct(ns_plus_s, count)});
      }
      report.rows.push_back({gen_name, "rhz_vs_ns", cn, "nesting_pct", pct(nested, count)});
      report.rows.push_back({gen_name, "rhz_vs_ns", cn, "ci_gap_lt_05_pct", pct(gap_small, count)});
    }
  }
  return report;
}

OverfitTrajectory overfit_demo(const DesignMatrix& design, const Vector& y,
                               const PriorConfig& priors) {
  priors.validate();
  const Index n = design.n(), p = design.p();
  const SpatialBasis comp = complement_basis(design);
  const Vector resid = y - design.X * (design.X.transpose() * design.X)
                                          .ldlt()
                                          .solve(design.X.transpose() * y);

  // Order complement columns by |correlation| with P_perp Y, descending.
  std::vector<Index> order(static_cast<size_t>(comp.W.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  Vector cors(comp.W.cols());
  const double resid_norm = (resid.array() - resid.mean()).matrix().norm();
  for (Index j = 0; j < comp.W.cols(); ++j) {
    const Vector col = comp.W.col(j);
    const Vector col_c = col.array() - col.mean();
    const double denom = col_c.norm() * resid_norm;
    cors[j] = denom > 0 ? std::abs(col_c.dot((resid.array() - resid.mean()).matrix()) / denom)
                        : 0.0;
  }
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return cors[a] > cors[b]; });

  const Index steps = n - p;  // m = 0 .. n-p-1 synthetic covariates
  OverfitTrajectory traj;
  traj.variance.resize(steps, p);
  traj.e_sigma.resize(steps);
  Matrix T = design.X;
  for (Index m = 0; m < steps; ++m) {
    if (m > 0) {
      T.conservativeResize(Eigen::NoChange, p + m);
      T.col(p + m - 1) = comp.W.col(order[static_cast<size_t>(m - 1)]);
    }
    DesignMatrix dm{T, design.with_intercept};
    const double e_sigma = ns_posterior_sigma_mean(dm, y, priors);
    const Matrix xtx_inv = (T.transpose() * T).ldlt().solve(Matrix::Identity(p + m, p + m));
    traj.e_sigma[m] = e_sigma;
    for (Index j = 0; j < p; ++j) traj.variance(m, j) = xtx_inv(j, j) * e_sigma;
  }
  return traj;
}

}  // namespace rsr
