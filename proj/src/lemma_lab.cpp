#include "kobalab/lemma_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include "kobalab/kobayashi.hpp"
#include "kobalab/rng.hpp"

namespace kobalab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Richardson-extrapolated central difference of f at 0.
Complex disc_derivative_at_zero(const DiscMap& f) {
  const double h = 1e-4;
  const Complex d1 = (f(h) - f(-h)) / (2.0 * h);
  const Complex d2 = (f(h / 2) - f(-h / 2)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

double disc_sup_deviation(const DiscMap& f, double eps, int radial, int angular) {
  double sup = 0.0;
  for (int i = 1; i <= radial; ++i) {
    const double rho = (1.0 - eps) * i / radial;
    for (int k = 0; k < angular; ++k) {
      const Complex z = std::polar(rho, 2.0 * std::numbers::pi * k / angular);
      sup = std::max(sup, std::abs(f(z) - z));
    }
  }
  return sup;
}

}  // namespace

Report disc_lemma_check(const DiscMap& f, double delta, double eps, const DiscLemmaOptions& options) {
  if (!(eps > 0 && eps < 1)) throw Error(ErrorKind::PreconditionViolated, "eps must lie in (0, 1)");
  for (int k = 0; k < options.boundary_samples; ++k) {
    const Complex z = std::polar(1.0 - 1e-9, 2.0 * std::numbers::pi * k / options.boundary_samples);
    if (!(std::abs(f(z)) <= 1.0 + 1e-9)) throw Error(ErrorKind::PreconditionViolated, "f leaves the unit disc");
  }
  if (std::abs(f(0.0)) > 1e-12) throw Error(ErrorKind::PreconditionViolated, "f(0) != 0");
  const Complex fp = disc_derivative_at_zero(f);
  if (std::abs(fp.imag()) > 1e-8) throw Error(ErrorKind::PreconditionViolated, "f'(0) is not real");
  if (!(fp.real() > 1.0 - delta)) throw Error(ErrorKind::PreconditionViolated, "f'(0) <= 1 - delta");

  Report report("disc");
  const double sup = disc_sup_deviation(f, eps, options.radial, options.angular);
  report.add("sup_deviation", sup, eps - sup);
  report.note("f_prime_0", fp.real());
  report.note("delta", delta);
  report.note("eps", eps);
  return report;
}

std::vector<DiscMap> blaschke_family(int budget, std::uint64_t seed) {
  std::vector<DiscMap> out;
  out.emplace_back([](Complex z) { return z; });
  for (int i = 1; i < budget; ++i) {
    Stream rng(seed, streams::kLemmaDisc, static_cast<std::uint64_t>(i));
    const int zeros = rng.integer(1, 2);
    std::vector<Complex> a;
    Complex lambda = 1.0;
    for (int k = 0; k < zeros; ++k) {
      const double modulus = 1.0 - std::pow(10.0, -rng.uniform(1.0, 7.0));
      a.push_back(std::polar(modulus, rng.uniform(0.0, 2.0 * std::numbers::pi)));
      lambda *= std::conj(-a.back()) / modulus;
    }
    out.emplace_back([a, lambda](Complex z) {
      Complex w = lambda * z;
      for (Complex ak : a) w *= (z - ak) / (1.0 - std::conj(ak) * z);
      return w;
    });
  }
  return out;
}

double empirical_delta(double eps, const std::vector<DiscMap>& family) {
  std::vector<double> fp, sup;
  for (const DiscMap& f : family) {
    fp.push_back(disc_derivative_at_zero(f).real());
    sup.push_back(disc_sup_deviation(f, eps, 32, 128));
  }
  for (double delta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    bool ok = true;
    for (std::size_t i = 0; i < family.size() && ok; ++i)
      if (fp[i] > 1.0 - delta && !(sup[i] < eps)) ok = false;
    if (ok) return delta;
  }
  return 0.0;
}

double empirical_delta(double eps, int budget, std::uint64_t seed) {
  return empirical_delta(eps, blaschke_family(budget, seed));
}

SelfMapFamily linear_family(int dim) {
  return {[dim](int j) {
            return HoloMap::affine(COperator::Identity(dim, dim) * (1.0 - 1.0 / j), CVector::Zero(dim),
                                   MapKind::Dilation, "linear_contraction");
          },
          [](int j) { return 1.0 / j; }, "linear", dim};
}

SelfMapFamily mobius_family(int dim) {
  auto b_of = [dim](int j) { return CVector(CVector::Ones(dim) / (std::sqrt(static_cast<double>(dim)) * j * j)); };
  auto generator = [dim, b_of](int j) {
    const double a = 1.0 / j;
    const CVector b = b_of(j);
    const HoloMap scale = HoloMap::affine(COperator::Identity(dim, dim) * (1.0 - a), CVector::Zero(dim),
                                          MapKind::Dilation, "scale");
    const HoloMap h = compose_chain({ball_mobius(b), scale, ball_mobius((1.0 - a) * b)});
    // Unitary correction so that dg(0) is positive.
    const PolarDecomposition pd = polar_decompose(h.jacobian(CVector::Zero(dim)));
    return compose(h, HoloMap::affine(pd.unitary.adjoint(), CVector::Zero(dim), MapKind::Affine, "unitary"));
  };
  auto floor = [b_of](int j) {
    const double a = 1.0 / j, b2 = b_of(j).squaredNorm();
    return 1.0 - (1.0 - a) * (1.0 - b2) / (1.0 - (1.0 - a) * (1.0 - a) * b2) + 1e-12;
  };
  return {generator, floor, "mobius", dim};
}

SelfMapFamily perturbed_family(int dim) {
  auto generator = [dim](int j) {
    const double a = 1.0 / j;
    auto eval = [a](const CVector& x) -> CVector {
      CVector y = (1.0 - a) * x;
      y.tail(y.size() - 1) += (a / 10.0) * x(0) * x.tail(x.size() - 1);
      return y;
    };
    auto jac = [a, dim](const CVector& x) -> COperator {
      COperator m = COperator::Identity(dim, dim) * (1.0 - a);
      m.bottomRightCorner(dim - 1, dim - 1) += COperator::Identity(dim - 1, dim - 1) * ((a / 10.0) * x(0));
      m.col(0).tail(dim - 1) += (a / 10.0) * x.tail(dim - 1);
      return m;
    };
    return HoloMap(MapKind::Custom, "perturbed_contraction", eval, jac);
  };
  return {generator, [](int j) { return 1.0 / j; }, "perturbed", dim};
}

Report ball_convergence_check(const SelfMapFamily& family, double r, int j_max, const BallConvergenceOptions& options,
                              std::vector<double>* sups) {
  if (!(r > 0 && r < 1)) throw Error(ErrorKind::PreconditionViolated, "r must lie in (0, 1)");
  Report report("ball");
  const int n = family.dim;
  std::vector<CVector> pts, closure, dirs;
  std::vector<Complex> zs;
  for (int i = 0; i < options.samples; ++i) {
    Stream rng(options.seed, streams::kLemmaBall, static_cast<std::uint64_t>(i));
    pts.push_back(i % 2 == 0 ? random_in_ball(rng, n, r) : CVector(random_unit_vector(rng, n) * r));
    if (i % 10 == 0) closure.push_back(random_in_ball(rng, n, 1.0 - 1e-9));
  }
  for (int i = 0; i < options.directions; ++i) {
    Stream rng(options.seed, streams::kLemmaBall, (1ull << 40) + static_cast<std::uint64_t>(i));
    dirs.push_back(random_unit_vector(rng, n));
  }
  for (int i = 0; i < options.disc_points; ++i) {
    Stream rng(options.seed, streams::kLemmaBall, (2ull << 40) + static_cast<std::uint64_t>(i));
    const double rho = i == 0 ? r : r * std::sqrt(rng.uniform());
    zs.push_back(std::polar(rho, rng.uniform(0.0, 2.0 * std::numbers::pi)));
  }

  std::vector<double> sup_list;
  for (int j = options.j_min; j <= j_max; ++j) {
    const HoloMap g = family.generator(j);
    const double a = family.floor(j);
    const std::string tag = "_" + std::to_string(j);
    const COperator dg0 = g.jacobian(CVector::Zero(n));
    bool geq = false;
    try {
      geq = operator_geq(dg0, COperator::Identity(n, n) * (1.0 - a));
    } catch (const Error&) {
      geq = false;
    }
    if (!geq) throw Error(ErrorKind::PreconditionViolated, "dg_j(0) >= (1 - a_j) I fails at j = " + std::to_string(j));

    std::vector<double> dev(pts.size());
    parallel_for(pts.size(), options.jobs, [&](std::size_t i) { dev[i] = (g(pts[i]) - pts[i]).norm(); });
    const double sup = *std::max_element(dev.begin(), dev.end());
    report.add("sup" + tag, sup, sup);
    if (!sup_list.empty()) report.add("sup_nonincreasing" + tag, sup, sup_list.back() - sup, 1e-12);
    sup_list.push_back(sup);

    double image = 0.0;
    for (const CVector& y : closure) image = std::max(image, g(y).norm());
    report.add("image_in_ball" + tag, image, 1.0 - image, 1e-12);

    // Intermediate bounds along the slices z -> <g(z zeta), zeta>.
    std::vector<std::vector<Complex>> f(dirs.size(), std::vector<Complex>(zs.size()));
    std::vector<std::vector<CVector>> gz(dirs.size(), std::vector<CVector>(zs.size()));
    parallel_for(dirs.size(), options.jobs, [&](std::size_t d) {
      for (std::size_t k = 0; k < zs.size(); ++k) {
        gz[d][k] = g(CVector(zs[k] * dirs[d]));
        f[d][k] = inner(gz[d][k], dirs[d]);
      }
    });
    double eps = 0.0;
    for (std::size_t d = 0; d < dirs.size(); ++d)
      for (std::size_t k = 0; k < zs.size(); ++k) eps = std::max(eps, std::abs(f[d][k] - zs[k]));
    double h_margin = kInf, g_margin = kInf;
    for (std::size_t d = 0; d < dirs.size(); ++d)
      for (std::size_t k = 0; k < zs.size(); ++k) {
        const double h2 = (gz[d][k] - f[d][k] * dirs[d]).squaredNorm();
        const double g2 = (gz[d][k] - zs[k] * dirs[d]).squaredNorm();
        h_margin = std::min(h_margin, 2 * eps - eps * eps - h2);
        g_margin = std::min(g_margin, 2 * eps - g2);
      }
    report.add("h_bound" + tag, h_margin, h_margin, 1e-9);
    report.add("g_bound" + tag, g_margin, g_margin, 1e-9);
  }
  report.note("family", family.label);
  report.note("r", r);
  report.note("sups", sup_list);
  if (sups) *sups = sup_list;
  return report;
}

namespace {

// Points radius * u e_m for u in {1, -1, i, -i}; the extremes of maps built from
// coordinate monomials sit on these axes, which random samples miss in high N.
std::vector<CVector> axis_points(int n, double radius) {
  std::vector<CVector> pts;
  for (int m = 1; m <= n; ++m)
    for (Complex u : {Complex(1, 0), Complex(-1, 0), kI, -kI}) pts.push_back(basis_vector(n, m) * (radius * u));
  return pts;
}

}  // namespace

double derivative_deviation(const HoloMap& psi, int n, double radius, int samples, std::uint64_t seed) {
  const COperator id = COperator::Identity(n, n);
  double worst = operator_norm(psi.jacobian(CVector::Zero(n)) - id);
  for (int i = 0; i < samples; ++i) {
    Stream rng(seed, streams::kLemmaFinal, (3ull << 40) + static_cast<std::uint64_t>(i));
    const CVector x = i % 2 == 0 ? random_in_ball(rng, n, radius) : CVector(random_unit_vector(rng, n) * radius);
    worst = std::max(worst, operator_norm(psi.jacobian(x) - id));
  }
  if (samples > 0)
    for (const CVector& x : axis_points(n, radius)) worst = std::max(worst, operator_norm(psi.jacobian(x) - id));
  return worst;
}

IterationTrace invert_by_iteration(const HoloMap& psi, const CVector& x, double r, double eps, double tol,
                                   const IterationOptions& options) {
  if (!(eps > 0 && eps < 1)) throw Error(ErrorKind::PreconditionViolated, "eps must lie in (0, 1)");
  if (!(x.norm() < r)) throw Error(ErrorKind::PreconditionViolated, "target must satisfy ||x|| < r");
  if (!((1 + 2 * eps) * r < 1)) throw Error(ErrorKind::PreconditionViolated, "need (1 + 2 eps) r < 1");
  if (options.derivative_samples > 0) {
    const double dev = derivative_deviation(psi, static_cast<int>(x.size()), (1 + 2 * eps) * r, options.derivative_samples, options.seed);
    if (!(dev < eps))
      throw Error(ErrorKind::ContractionFailure, "sampled ||d psi - I|| = " + std::to_string(dev) + " >= eps");
  }

  IterationTrace trace;
  CVector y = x;
  CVector fy = psi(y);
  trace.iterates.push_back(y);
  trace.residuals.push_back((fy - x).norm());
  const double first = trace.residuals.front();
  trace.iteration_bound = first <= tol ? 1 : static_cast<int>(std::ceil(std::log(tol / first) / std::log(eps))) + 2;
  const double noise = 1e-12 * std::max(1.0, x.norm());
  double prev_step = -1.0;
  for (int k = 1; k <= options.max_iterations; ++k) {
    const CVector next = x + y - fy;
    const double step = (next - y).norm();
    if (step > std::pow(eps, k - 1) * first * (1 + 1e-6) + 1e-15) trace.envelope_ok = false;
    if (prev_step > noise) {
      trace.ratio = std::max(trace.ratio, step / prev_step);
      if (trace.ratio > eps + 0.05)
        throw Error(ErrorKind::ContractionFailure, "measured ratio " + std::to_string(trace.ratio) + " > eps + 0.05");
    }
    prev_step = step;
    y = next;
    fy = psi(y);
    trace.iterates.push_back(y);
    trace.residuals.push_back((fy - x).norm());
    if (trace.residuals.back() <= tol) return trace;
  }
  throw Error(ErrorKind::NonConvergence, "iteration did not reach the tolerance");
}

Report surjectivity_radius(const HoloMap& psi, int dim, double r, double eps, int samples,
                           const SurjectivityOptions& options) {
  Report report("final");
  const double dev = derivative_deviation(psi, dim, (1 + 2 * eps) * r, options.derivative_samples, options.seed);
  if (!(dev < eps))
    throw Error(ErrorKind::ContractionFailure, "sampled ||d psi - I|| = " + std::to_string(dev) + " >= eps");
  IterationOptions io;
  io.derivative_samples = 0;

  struct Outcome {
    bool ok = false;
    bool contraction = false;
    int steps = 0, bound = 0;
    bool envelope = true;
    double ratio = 0.0, residual = 0.0;
  };
  // Random targets first, then the axis extremes of rB.
  const std::vector<CVector> axes = axis_points(dim, r * (1 - 1e-9));
  std::vector<Outcome> out(static_cast<std::size_t>(samples) + axes.size());
  parallel_for(out.size(), options.jobs, [&](std::size_t i) {
    CVector x;
    if (i < static_cast<std::size_t>(samples)) {
      Stream rng(options.seed, streams::kLemmaFinal, static_cast<std::uint64_t>(i));
      x = i % 2 == 0 ? random_in_ball(rng, dim, r) : CVector(random_unit_vector(rng, dim) * r * (1 - 1e-9));
    } else {
      x = axes[i - static_cast<std::size_t>(samples)];
    }
    Outcome& o = out[i];
    try {
      const IterationTrace t = invert_by_iteration(psi, x, r, eps, options.tol, io);
      o.ok = t.solution().norm() < 1.0;
      o.steps = t.steps();
      o.bound = t.iteration_bound;
      o.envelope = t.envelope_ok;
      o.ratio = t.ratio;
      o.residual = t.residuals.back();
    } catch (const Error& e) {
      o.contraction = e.kind() == ErrorKind::ContractionFailure;
    }
  });
  int failures = 0, over_bound = 0, envelope = 0, max_steps = 0;
  double ratio = 0.0, residual = 0.0;
  for (const Outcome& o : out) {
    if (o.contraction) throw Error(ErrorKind::ContractionFailure, "iteration ratio exceeded eps + 0.05");
    if (!o.ok) {
      ++failures;
      continue;
    }
    over_bound += o.steps > o.bound;
    envelope += !o.envelope;
    max_steps = std::max(max_steps, o.steps);
    ratio = std::max(ratio, o.ratio);
    residual = std::max(residual, o.residual);
  }
  report.add("failures", failures, -failures);
  report.add("max_ratio", ratio, eps + 0.05 - ratio);
  report.add("iteration_bound_violations", over_bound, -over_bound);
  report.add("envelope_violations", envelope, -envelope);
  report.add("max_residual", residual, options.tol - residual);

  // Random pairs, then nearby pairs on each axis close to the sphere.
  std::vector<double> inj(static_cast<std::size_t>(options.pairs) + axes.size());
  parallel_for(inj.size(), options.jobs, [&](std::size_t i) {
    CVector u, v;
    if (i < static_cast<std::size_t>(options.pairs)) {
      Stream rng(options.seed, streams::kLemmaFinal, (1ull << 40) + static_cast<std::uint64_t>(i));
      u = random_in_ball(rng, dim, r);
      v = i % 2 == 0 ? random_in_ball(rng, dim, r) : CVector(u + 1e-3 * r * random_unit_vector(rng, dim));
      if (v.norm() >= r) v *= r * (1 - 1e-9) / v.norm();
    } else {
      u = axes[i - static_cast<std::size_t>(options.pairs)];
      v = (1.0 - 1e-3) * u;
    }
    const double d = (u - v).norm();
    inj[i] = d > 0 ? (psi(u) - psi(v)).norm() / d : 1.0;
  });
  const double margin = inj.empty() ? 1.0 : *std::min_element(inj.begin(), inj.end());
  report.add("injectivity", margin, margin - (1.0 - eps));
  report.note("max_steps", max_steps);
  report.note("targets", out.size());
  report.note("derivative_deviation", dev);
  report.note("r", r);
  report.note("eps", eps);
  return report;
}

double theorem_c(int j) {
  const double s = 1.0 - 1.0 / j;
  return s * s / (1.0 + 1.0 / j);
}

double theorem_b(int j) { return 0.5 * std::log(2.0 * j - 1.0); }

double theorem_t(double a, int j) {
  const double b = theorem_b(j);
  if (!(b > a)) throw Error(ErrorKind::PreconditionViolated, "t_j needs b_j > a");
  return std::tanh(a / std::tanh(b - a));
}

Report main_theorem_pipeline(const DomainSpec& domain, const OrbitSchedule& orbit, const TheoremOptions& options,
                             TheoremArtifacts* artifacts) {
  if (!domain.to_unit_ball || !domain.to_unit_ball->invertible())
    throw Error(ErrorKind::UnsupportedDomain, "the theorem replay needs a domain with an exact map to the ball");
  if (orbit.size() < 3 || orbit.indices.front() < 2)
    throw Error(ErrorKind::DegenerateInput, "the replay needs stages j = 2, 3, ... (at least 3)");
  Report report("theorem");
  const int n = domain.dimension;
  const CVector& q = orbit.q;

  ScalingOptions so = options.scaling;
  so.jobs = options.jobs;
  const ScalingState state = run_scaling(domain, orbit, so);
  std::vector<StageMetrics> metrics;
  report.merge(scaling_diagnostics(state, options.diagnostics, &metrics), "scaling.");

  const std::size_t last = state.size() - 1;
  const int j_max = orbit.indices[last];
  const HoloMap& sigma = state.sigma(last);
  const COperator dsigma = state.calibrations[last].dsigma;

  // Closed-form constants.
  report.add("c_2", theorem_c(2), 1e-15 - std::abs(theorem_c(2) - 1.0 / 6.0));
  report.add("b_2", theorem_b(2), 1e-15 - std::abs(theorem_b(2) - 0.5 * std::log(3.0)));
  for (int j = 3; j <= j_max; ++j)
    report.add("c_monotone_" + std::to_string(j), theorem_c(j), theorem_c(j) - theorem_c(j - 1));

  std::vector<CVector> pts;
  for (int i = 0; i < options.samples; ++i) {
    Stream rng(options.seed, streams::kTheorem, static_cast<std::uint64_t>(i));
    pts.push_back(i % 2 == 0 ? random_in_ball(rng, n, options.r) : CVector(random_unit_vector(rng, n) * options.r));
  }

  // tau_j(x) = sigma_j^{-1}((1 - 1/j) U_j^{-1} x) with d(sigma o sigma_j^{-1})(0) = P_j U_j.
  auto tau_hat = [&](std::size_t k, const COperator& dlimit, COperator* positive) {
    const int j = state.stages[k].j;
    const COperator dsj = state.calibrations[k].dsigma;
    const PolarDecomposition pd = polar_decompose(dlimit * dsj.inverse());
    if (positive) *positive = pd.positive;
    const COperator lin = (1.0 - 1.0 / j) * pd.unitary.adjoint();
    return compose(state.sigma(k).inverse(), HoloMap::affine(lin, CVector::Zero(n), MapKind::Affine, "U_j"));
  };
  auto cj_margin = [&](std::size_t k, const COperator& dlimit) {
    const int j = state.stages[k].j;
    COperator p;
    tau_hat(k, dlimit, &p);
    const COperator d = (1.0 - 1.0 / j) * p;
    const COperator c = COperator::Identity(n, n) * theorem_c(j);
    const double m = min_hermitian_eigenvalue(d - c);
    return operator_geq(d, c) ? std::max(m, 0.0) : m;
  };

  std::vector<double> conv;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const int j = state.stages[k].j;
    const std::string tag = "_" + std::to_string(j);
    const double m = cj_margin(k, dsigma);
    report.add("dg_geq_cj" + tag, m, m, 1e-10);
    const HoloMap g = compose(sigma, tau_hat(k, dsigma, nullptr));
    std::vector<double> dev(pts.size());
    parallel_for(pts.size(), options.jobs, [&](std::size_t i) {
      try {
        dev[i] = (g(pts[i]) - pts[i]).norm();
      } catch (const Error&) {
        dev[i] = kInf;
      }
    });
    const double sup = *std::max_element(dev.begin(), dev.end());
    report.add("convergence_sup" + tag, sup, std::isfinite(sup) ? 0.0 : -1.0);
    if (!conv.empty()) report.add("convergence_decreasing" + tag, sup, conv.back() - sup, 1e-9);
    conv.push_back(sup);
  }
  report.add("convergence_final", conv.back(), options.surjectivity_eps - conv.back());

  // Q_a chain: sigma_j(Q_a) inside t_j (1 + 1/j) B.
  const std::vector<CVector> qa = sample_kobayashi_ball(domain, q, options.a, options.samples, options.seed + 11);
  double prev_t = kInf;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const int j = state.stages[k].j;
    if (!(theorem_b(j) > options.a)) continue;
    const std::string tag = "_" + std::to_string(j);
    const double t = theorem_t(options.a, j);
    double far = 0.0;
    for (const CVector& x : qa) far = std::max(far, state.sigma(k)(x).norm());
    report.add("Qa_containment" + tag, far, t * (1.0 + 1.0 / j) - far, 1e-9);
    if (std::isfinite(prev_t)) report.add("t_monotone" + tag, t, prev_t - t);
    prev_t = t;
  }
  const double ra = 0.5 * (1.0 + std::tanh(options.a));
  const double tmax = theorem_t(options.a, j_max) * (1.0 + 1.0 / j_max) / (1.0 - 1.0 / j_max);
  report.add("Qa_radius", tmax, ra - tmax);

  // Injectivity of sigma on Q_a.
  double inj = kInf;
  for (std::size_t i = 0; i + 1 < qa.size(); i += 2) {
    const double d = (qa[i] - qa[i + 1]).norm();
    if (d > 0) inj = std::min(inj, (sigma(qa[i]) - sigma(qa[i + 1])).norm() / d);
  }
  report.add("sigma_injective_Qa", inj, inj);

  SurjectivityOptions surj;
  surj.seed = options.seed;
  surj.jobs = options.jobs;
  surj.pairs = options.surjectivity_samples;
  report.merge(surjectivity_radius(compose(sigma, tau_hat(last, dsigma, nullptr)), n, options.surjectivity_r,
                                   options.surjectivity_eps, options.surjectivity_samples, surj),
               "surjectivity.");

  // Stability of the c_j check when sigma_{j_max / 2} stands in for the limit.
  std::size_t half = 0;
  for (std::size_t k = 0; k < state.size(); ++k)
    if (state.stages[k].j <= j_max / 2) half = k;
  const COperator dhalf = state.calibrations[half].dsigma;
  double half_margin = kInf;
  for (std::size_t k = 0; k <= half; ++k) half_margin = std::min(half_margin, cj_margin(k, dhalf));
  report.add("halving_dg_geq_cj", half_margin, half_margin, 1e-10);
  report.note("halving_dsigma_drift", operator_norm(dsigma - dhalf));
  report.note("j_max", j_max);
  report.note("a", options.a);

  if (artifacts) {
    artifacts->metrics = metrics;
    artifacts->convergence_sup = conv;
    for (std::size_t k = 0; k < state.size(); ++k) {
      artifacts->indices.push_back(state.stages[k].j);
      artifacts->r.push_back(state.stages[k].r_j);
      artifacts->theta.push_back(state.stages[k].theta_j);
      artifacts->eps.push_back(state.eps[k]);
    }
  }
  return report;
}

Report nested_ball_suite(int dim, const NestedBallOptions& options) {
  Report report("esti");
  const DomainSpec ball = make_ball(dim);
  struct Outcome {
    double d_margin = kInf, k_margin = kInf;
    bool error = false;
  };
  std::vector<Outcome> out(static_cast<std::size_t>(options.configurations));
  parallel_for(out.size(), options.jobs, [&](std::size_t i) {
    // Scalars first, from a stream that ignores the dimension.
    Stream scalars(options.seed, streams::kScalarDraws, static_cast<std::uint64_t>(i));
    const double b = scalars.uniform(0.2, 3.0);
    const double a = b * scalars.uniform(0.05, 0.95);
    const double b_outer = i % 4 == 0 ? b : b * (1.0 + scalars.uniform(0.0, 0.5));
    const double q_norm = scalars.uniform(0.0, 0.9);
    Stream vectors(options.seed, streams::kLocalization, (1ull << 40) + i);
    const CVector q = q_norm * random_unit_vector(vectors, dim);
    const HoloMap center = ball_mobius(q);
    const CVector x = center(std::tanh(a) * random_unit_vector(vectors, dim));
    const DomainSpec sub = make_transported(make_ball(dim, std::tanh(b_outer)), center, 1.0, "kobayashi_ball");
    LocalizationOptions lo;
    lo.directions = options.directions;
    lo.inclusion_samples = options.inclusion_samples;
    lo.seed = options.seed + i;
    try {
      const Report r = localization_check(ball, sub, q, x, b, lo);
      out[i].d_margin = r.at("distance_bound").margin;
      out[i].k_margin = r.at("metric_bound").margin;
    } catch (const Error&) {
      out[i].error = true;
    }
  });
  double dmin = kInf, kmin = kInf;
  int violations = 0, errors = 0;
  for (const Outcome& o : out) {
    errors += o.error;
    if (o.error) continue;
    dmin = std::min(dmin, o.d_margin);
    kmin = std::min(kmin, o.k_margin);
    violations += (o.d_margin < -1e-6) + (o.k_margin < -1e-6);
  }
  report.add("distance_margin_min", dmin, dmin, 1e-6);
  report.add("metric_margin_min", kmin, kmin, 1e-6);
  report.add("violations", violations, -violations);
  report.add("errors", errors, -errors);
  report.note("configurations", options.configurations);
  report.note("dimension", dim);
  return report;
}

}  // namespace kobalab
