#include "kobalab/scaling.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "kobalab/kobayashi.hpp"
#include "kobalab/rng.hpp"

namespace kobalab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

HoloMap build_L(int dim, double r) {
  if (!(r > 0)) throw Error(ErrorKind::NonpositiveRadius, "L_j needs r_j > 0");
  COperator d = COperator::Identity(dim, dim) / std::sqrt(r);
  d(0, 0) = 1.0 / r;
  return HoloMap::affine(d, CVector::Zero(dim), MapKind::Dilation, "L");
}

ScalingStage build_stage(const NormalizedDomain& normalized, const CVector& q_j, int j, const StageOptions& options) {
  const DomainSpec& local = normalized.local;
  const int n = local.dimension;
  if (!local.contains(q_j)) throw Error(ErrorKind::DegenerateInput, "q_j is not interior to the normalized domain");
  const RayHit hit = ray_boundary_point(local, q_j);
  const CVector d = local.defining.holomorphic_gradient(hit.boundary);
  const double d1 = std::abs(d(0));
  if (!(d1 > 1e-8 * d.norm())) throw Error(ErrorKind::DegenerateTangent, "normal at p_j is orthogonal to e1");

  ScalingStage s{j, q_j, hit.boundary, hit.r, 0.0, 1.0, CVector::Zero(n), HoloMap::identity(n),
                 HoloMap::identity(n), 0.0, 0.0, 0.0};
  s.phase = -d(0) / d1;
  s.theta_j = std::arg(s.phase);
  for (int m = 1; m < n; ++m) s.tilt(m) = -d(m) / d1;

  COperator h = COperator::Identity(n, n);
  h(0, 0) = s.phase;
  for (int m = 1; m < n; ++m) h(0, m) = s.tilt(m);
  s.H = HoloMap::affine(h, -(h * s.p_j), MapKind::Affine, "H_j");
  s.L = build_L(n, s.r_j);

  s.c2_residual = std::abs(local.rho(s.p_j));
  s.c3_error = (s.H(q_j) - s.phase * s.r_j * basis_vector(n, 1)).norm();

  // (C1): boundary points near p_j land in {Re w1 >= 0}.
  double c1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < options.c1_samples; ++i) {
    Stream rng(options.seed, streams::kScaling, (static_cast<std::uint64_t>(j) << 32) + static_cast<std::uint64_t>(i));
    CVector delta = random_in_ball(rng, n, options.c1_radius);
    const double t = s.p_j(0).imag() + delta(0).real();
    delta(0) = 0.0;
    CVector zp = s.p_j + delta;
    try {
      const double re = normalized.psi(t, zp);
      zp(0) = Complex(re, t);
      c1 = std::min(c1, s.H(zp)(0).real());
    } catch (const Error&) {
      // outside the chart: not part of Omega_U
    }
  }
  s.c1_margin = c1;
  return s;
}

PipelineMaps compose_pipeline(const NormalizedDomain& normalized, const ScalingStage& stage, const HoloMap& phi_j,
                              const HoloMap& psi, bool shifted) {
  HoloMap omega = compose_chain({phi_j, shifted ? normalized.G_shift : normalized.G, stage.H, stage.L});
  return {omega, compose(psi, omega)};
}

Calibration calibrate(const HoloMap& tau, const CVector& q) {
  const CVector c = tau(q);
  if (!(c.norm() < 1.0 - 1e-12)) throw Error(ErrorKind::DomainEscape, "tau(q) is not inside the unit ball");
  const HoloMap recentered = c.norm() == 0.0 ? tau : compose(ball_mobius(c), tau);
  const COperator j = recentered.jacobian(q);
  if (!(condition_number(j) < 1e8)) throw Error(ErrorKind::SingularDifferential, "d tau(q) is not invertible");
  const int n = static_cast<int>(j.cols());
  std::vector<CVector> cols;
  for (int m = 0; m < n; ++m) cols.emplace_back(j.col(m));
  const GramSchmidtResult gs = gram_schmidt(cols);
  COperator f(n, n);
  for (int m = 0; m < n; ++m) f.col(m) = gs.orthonormal[static_cast<std::size_t>(m)];
  const COperator S = f.adjoint();
  const HoloMap sigma = compose(HoloMap::affine(S, CVector::Zero(n), MapKind::Calibration, "S_j"), recentered);
  return {S, recentered, sigma, gs.norms, S * j};
}

double ScalingState::c0(std::size_t k) const {
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= k && i < calibrations.size(); ++i)
    for (double v : calibrations[i].norms) c = std::min(c, v);
  return c;
}

namespace {

// Random points of B^K(q, R) plus the images of the coordinate axes, which
// carry the extremal directions for the ball.
std::vector<CVector> kobayashi_ball_points(const DomainSpec& domain, const CVector& q, double R, int samples,
                                           std::uint64_t seed) {
  std::vector<CVector> pts = sample_kobayashi_ball(domain, q, R, samples, seed);
  const HoloMap& T = *domain.to_unit_ball;
  const HoloMap Tinv = T.inverse();
  const HoloMap center = ball_mobius(T(q));
  const double t = std::tanh(R) * (1.0 - 1e-9);
  for (int m = 1; m <= domain.dimension; ++m)
    for (Complex dir : {Complex(1, 0), Complex(-1, 0), kI, -kI})
      pts.push_back(Tinv(center(basis_vector(domain.dimension, m) * (t * dir))));
  return pts;
}

}  // namespace

double localization_radius(const DomainSpec& domain, const NormalizedDomain& normalized, const HoloMap& phi,
                           const CVector& q, double cap, int samples, std::uint64_t seed, bool shifted) {
  auto inside = [&](double R) {
    for (const CVector& x : kobayashi_ball_points(domain, q, R, samples, seed))
      if (!((shifted ? phi(x) : CVector(phi(x) - normalized.p)).norm() < normalized.chart_radius * (1.0 - 1e-9))) return false;
    return true;
  };
  if (inside(cap)) return cap;
  double lo = 0.0, hi = cap;
  for (int k = 0; k < 50; ++k) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

ScalingState run_scaling(const DomainSpec& domain, const OrbitSchedule& orbit, const ScalingOptions& options) {
  ScalingState st{domain,
                  orbit.q,
                  orbit.p,
                  normalize_at(domain, orbit.p, options.normalize),
                  cayley(domain.dimension).psi,
                  {},
                  {},
                  {},
                  {},
                  {},
                  {},
                  {},
                  options.image_samples,
                  options.seed};
  const bool exact = domain.to_unit_ball && domain.to_unit_ball->invertible();
  for (std::size_t k = 0; k < orbit.size(); ++k) {
    const int j = orbit.indices[k];
    const bool shifted = k < orbit.shifted.size();
    const HoloMap& phi = shifted ? orbit.shifted[k] : orbit.maps[k];
    const HoloMap& G = shifted ? st.normalized.G_shift : st.normalized.G;
    StageOptions so = options.stage;
    so.seed = options.seed;
    ScalingStage stage = build_stage(st.normalized, G(phi(orbit.q)), j, so);
    PipelineMaps maps = compose_pipeline(st.normalized, stage, phi, st.psi, shifted);
    Calibration cal = calibrate(maps.tau, orbit.q);
    double R = std::numeric_limits<double>::quiet_NaN(), eps = std::numeric_limits<double>::quiet_NaN();
    if (exact) {
      R = localization_radius(domain, st.normalized, phi, orbit.q, options.radius_cap, options.image_samples,
                              options.seed, shifted);
      const std::vector<CVector> pts =
          kobayashi_ball_points(domain, orbit.q, R * (1.0 - 1e-6), options.image_samples, options.seed);
      std::vector<double> over(pts.size(), 0.0);
      parallel_for(pts.size(), options.jobs, [&](std::size_t i) {
        try {
          over[i] = maps.tau(pts[i]).norm() - 1.0;
        } catch (const Error&) {
          over[i] = std::numeric_limits<double>::infinity();
        }
      });
      eps = std::max(0.0, *std::max_element(over.begin(), over.end()));
    }
    st.stages.push_back(std::move(stage));
    st.phi.push_back(orbit.maps[k]);
    st.omega.push_back(maps.omega);
    st.tau.push_back(maps.tau);
    st.calibrations.push_back(std::move(cal));
    st.R.push_back(R);
    st.eps.push_back(eps);
  }
  return st;
}

std::vector<ScalingStage> build_synthetic_stages(const NormalizedDomain& normalized, const SyntheticOrbit& orbit,
                                                 const StageOptions& options) {
  std::vector<ScalingStage> out;
  for (std::size_t k = 0; k < orbit.points.size(); ++k)
    out.push_back(build_stage(normalized, normalized.G(orbit.points[k]), orbit.indices[k], options));
  return out;
}

Report scaling_diagnostics(const ScalingState& state, const DiagnosticsOptions& options,
                           std::vector<StageMetrics>* metrics) {
  Report report("scaling_diagnostics");
  if (state.size() < 3) throw Error(ErrorKind::DegenerateInput, "diagnostics need at least 3 stages");
  const DomainSpec& domain = state.domain;
  const int n = domain.dimension;
  const CVector& q = state.q;
  const bool exact = domain.to_unit_ball && domain.to_unit_ball->invertible();

  // Directions: the coordinate axes followed by random unit vectors.
  std::vector<CVector> dirs;
  for (int m = 1; m <= n; ++m) dirs.push_back(basis_vector(n, m));
  for (int i = 0; i < options.directions; ++i) {
    Stream rng(options.seed, streams::kScaling, (1ull << 48) + static_cast<std::uint64_t>(i));
    dirs.push_back(random_unit_vector(rng, n));
  }
  std::vector<double> k_lo(dirs.size()), k_hi(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (auto e = metric_exact(domain, q, dirs[i])) {
      k_lo[i] = k_hi[i] = *e;
    } else {
      const MetricEstimate est = metric_estimate(domain, q, dirs[i]);
      k_lo[i] = est.lower;
      k_hi[i] = est.upper;
    }
  }

  std::vector<double> residuals;
  double norm_max = 0.0, inv_norm_max = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const int j = state.stages[k].j;
    const std::string tag = "_" + std::to_string(j);
    const Calibration& cal = state.calibrations[k];
    const COperator& ds = cal.dsigma;

    const double sq = cal.sigma(q).norm();
    report.add("sigma_q" + tag, sq, 1e-10 - sq);
    const double lower = lower_triangle_max(ds);
    report.add("flag" + tag, lower, 1e-9 - lower);
    double diag_min = std::numeric_limits<double>::infinity();
    for (int m = 0; m < n; ++m) diag_min = std::min(diag_min, ds(m, m).real() - std::abs(ds(m, m).imag()) * 1e9);
    report.add("positive_diagonal" + tag, diag_min, diag_min);

    StageMetrics sm{j, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0.0};
    const double jd = static_cast<double>(j);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const double len = (ds * dirs[i]).norm();
      sm.est_lo_margin = std::min(sm.est_lo_margin, (len - (1.0 - 1.0 / jd) * k_hi[i]) / k_hi[i]);
      sm.est_hi_margin =
          std::min(sm.est_hi_margin, ((1.0 + 1.0 / jd) / (1.0 - 1.0 / jd) * k_lo[i] - len) / k_lo[i]);
      sm.est0_residual = std::max(sm.est0_residual, std::abs(len - k_hi[i]) / k_hi[i]);
    }
    report.add("est_lo" + tag, sm.est_lo_margin, sm.est_lo_margin, 1e-3);
    report.add("est_hi" + tag, sm.est_hi_margin, sm.est_hi_margin, 1e-3);
    residuals.push_back(sm.est0_residual);
    if (metrics) metrics->push_back(sm);
    norm_max = std::max(norm_max, operator_norm(ds));
    inv_norm_max = std::max(inv_norm_max, 1.0 / smallest_singular_value(ds));

    if (exact) {
      const double R = state.R[k];
      const double bj = poincare_u(1.0 - 1.0 / jd);
      report.add("omega_j_contains_bj_ball" + tag, R, R - bj);
      // (e) upper: sigma_j(Omega_j) inside (1 + 1/j)B with Omega_j = B^K(q, R_j).
      double far = 0.0;
      for (const CVector& x : kobayashi_ball_points(domain, q, R * (1.0 - 1e-6), state.image_samples, state.seed)) {
        try {
          far = std::max(far, cal.sigma(x).norm());
        } catch (const Error&) {
          far = kInf;
        }
      }
      report.add("sandwich_upper" + tag, far, 1.0 + 1.0 / jd - far);
      // (e) lower: sigma_j^{-1}((1 - 1/j)B) inside Omega_j.
      const HoloMap inv = cal.sigma.inverse();
      double slack = std::numeric_limits<double>::infinity();
      for (int i = 0; i < options.containment_samples; ++i) {
        Stream rng(options.seed, streams::kScaling, (2ull << 48) + static_cast<std::uint64_t>(i));
        const double rad = (1.0 - 1.0 / jd) * (1.0 - 1e-9);
        const CVector y = (i % 2 == 0) ? random_in_ball(rng, n, rad) : CVector(random_unit_vector(rng, n) * rad);
        try {
          const CVector x = inv(y);
          slack = std::min(slack, domain.contains(x) ? R - *distance_exact(domain, x, q) : -1.0);
        } catch (const Error&) {
          slack = -1.0;
        }
      }
      report.add("sandwich_lower" + tag, slack, slack);
    }
  }
  for (std::size_t k = 1; k < residuals.size(); ++k)
    report.add("est0_decreasing_" + std::to_string(state.stages[k].j), residuals[k],
               residuals[k - 1] - residuals[k], 1e-12);
  report.add("est0_final", residuals.back(), 1e-2 - residuals.back());

  // Coordinatewise convergence of dsigma_j(q) on each flag subspace.
  std::vector<double> cauchy;
  for (std::size_t k = 1; k < state.size(); ++k) {
    const COperator diff = state.calibrations[k].dsigma - state.calibrations[k - 1].dsigma;
    double worst = 0.0;
    for (int m = 1; m <= n; ++m) worst = std::max(worst, operator_norm(diff.leftCols(m)));
    cauchy.push_back(worst);
  }
  report.add("cauchy_shrinks", cauchy.back(), cauchy.front() - cauchy.back(), 1e-12);
  report.note("cauchy_differences", cauchy);

  if (exact) {
    for (std::size_t k = 1; k < state.size(); ++k) {
      const std::string tag = "_" + std::to_string(state.stages[k].j);
      report.add("eps_monotone" + tag, state.eps[k], state.eps[k - 1] - state.eps[k], 1e-9);
      report.add("R_monotone" + tag, state.R[k], state.R[k] - state.R[k - 1], 1e-9);
    }
  }

  std::vector<double> c0s, stage_min;
  for (std::size_t k = 0; k < state.size(); ++k) {
    c0s.push_back(state.c0(k));
    stage_min.push_back(*std::min_element(state.calibrations[k].norms.begin(), state.calibrations[k].norms.end()));
  }
  const double c0 = c0s.back();
  double drift = 0.0;
  for (double c : c0s) drift = std::max(drift, std::abs(c - c0) / c0);
  report.add("c0", c0, c0);
  report.add("c0_stability", drift, 0.1 - drift);
  report.note("c0_running", c0s);
  report.note("gram_schmidt_min_norms", stage_min);
  report.note("dsigma_norm_max", norm_max);
  report.note("dsigma_inverse_norm_max", inv_norm_max);
  report.note("est0_residuals", residuals);
  return report;
}

double fit_decay_exponent(const std::vector<double>& r, const std::vector<double>& dev) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < r.size() && i < dev.size(); ++i) {
    if (!(dev[i] > 0) || !(r[i] > 0)) continue;
    const double x = std::log(r[i]), y = std::log(dev[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

Report hausdorff_to_siegel(const NormalizedDomain& normalized, const std::vector<ScalingStage>& stages, int samples,
                           std::uint64_t seed, std::vector<CloudRow>* cloud, std::vector<double>* deviations) {
  Report report("hausdorff_to_siegel");
  const int n = normalized.local.dimension;
  // Fixed sample set in the scaled coordinates.
  std::vector<std::pair<double, CVector>> pts;
  for (int i = 0; i < samples; ++i) {
    Stream rng(seed, streams::kHausdorff, static_cast<std::uint64_t>(i));
    const double t = rng.uniform(-1.0, 1.0);
    CVector w = CVector::Zero(n);
    if (n > 1) w.tail(n - 1) = random_in_ball(rng, n - 1, 1.0);
    pts.emplace_back(t, w);
  }
  std::vector<double> devs, radii;
  std::vector<int> skips;
  for (const ScalingStage& s : stages) {
    const HoloMap back = compose(s.H, s.L).inverse();
    double worst = 0.0;
    int skipped = 0;
    for (const auto& [t, w] : pts) {
      const double target = prime_norm_sq(w);
      CVector z = w;
      auto g = [&](double S) {
        z(0) = Complex(S, t);
        return normalized.local.rho(back(z));
      };
      // rho decreases along +Re W1; bracket the crossing around the paraboloid.
      // Samples whose crossing leaves the chart at this stage are skipped.
      double S = target;
      try {
        double width = 1e-6 + 1e-3 * target, lo = target - width, hi = target + width;
        double glo = g(lo), ghi = g(hi);
        for (int k = 0; k < 60 && glo <= 0; ++k) glo = g(lo -= (width *= 2.0));
        width = 1e-6 + 1e-3 * target;
        for (int k = 0; k < 60 && ghi >= 0; ++k) ghi = g(hi += (width *= 2.0));
        if (!(glo > 0 && ghi < 0)) {
          ++skipped;
          continue;
        }
        std::uintmax_t iters = 200;
        const auto root = boost::math::tools::toms748_solve(
            g, lo, hi, glo, ghi,
            [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max({1.0, std::abs(a), std::abs(b)}); },
            iters);
        S = 0.5 * (root.first + root.second);
      } catch (const Error&) {
        ++skipped;
        continue;
      }
      const double dev = std::abs(S - target);
      worst = std::max(worst, dev);
      if (cloud) cloud->push_back({s.j, S, target, dev});
    }
    devs.push_back(worst);
    radii.push_back(s.r_j);
    skips.push_back(skipped);
  }
  for (std::size_t k = 0; k < devs.size(); ++k) {
    const std::string tag = "_" + std::to_string(stages[k].j);
    report.add_check("resolved" + tag, skips[k] == 0);
    if (k > 0)
      report.add("deviation_monotone" + tag, devs[k], devs[k - 1] - devs[k], 1e-9);
    else
      report.add("deviation" + tag, devs[k], 0.0);
  }
  const double exponent = fit_decay_exponent(radii, devs);
  report.note("deviations", devs);
  report.note("r", radii);
  report.note("skipped_samples", skips);
  report.note("exponent", std::isfinite(exponent) ? nlohmann::json(exponent) : nlohmann::json(nullptr));
  if (deviations) *deviations = devs;
  return report;
}

}  // namespace kobalab
