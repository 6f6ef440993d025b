#include "doctest.h"

#include <cmath>

#include "kobalab/automorphisms.hpp"
#include "kobalab/kobayashi.hpp"
#include "kobalab/rng.hpp"
#include "kobalab/scaling.hpp"

using namespace kobalab;

namespace {

ScalingState ball_state(int dim, int count, std::vector<int>* indices = nullptr) {
  const DomainSpec b = make_ball(dim);
  const OrbitSchedule o = orbit_to_boundary(b, CVector::Zero(dim), basis_vector(dim, 1), 0.5, count, 2);
  if (indices) *indices = o.indices;
  ScalingOptions opt;
  opt.image_samples = 64;
  opt.stage.c1_samples = 200;
  return run_scaling(b, o, opt);
}

}  // namespace

TEST_CASE("build_L") {
  Stream rng(1, 0);
  const CVector z = random_gaussian_vector(rng, 3);
  CHECK((build_L(3, 1.0)(z) - z).norm() == 0.0);
  CVector w = CVector::Zero(4);
  w(0) = 1.0;
  w(1) = 1.0;
  const CVector lw = build_L(4, 0.25)(w);
  CHECK(lw(0) == Complex(4.0));
  CHECK(lw(1) == Complex(2.0));
  CHECK(lw.tail(2).norm() == 0.0);
  CHECK_THROWS_AS(build_L(2, 0.0), Error);
  CHECK_THROWS_AS(build_L(2, -1.0), Error);
}

TEST_CASE("build_L keeps the paraboloid invariant") {
  Stream rng(2, 0);
  for (int k = 0; k < 1000; ++k) {
    const double r = std::pow(2.0, -rng.integer(0, 12));
    CVector w = random_gaussian_vector(rng, 4);
    w(0) = Complex(prime_norm_sq(w), rng.normal());
    const CVector lw = build_L(4, r)(w);
    const double defect = lw(0).real() - prime_norm_sq(lw);
    CHECK(std::abs(defect) <= 1e-14 * std::max(1.0, lw(0).real()));
  }
}

TEST_CASE("build_stage on the Siegel model") {
  const NormalizedDomain n = normalize_at(make_siegel(3), CVector::Zero(3));
  for (double r : {0.5, 0.01}) {
    CVector q = CVector::Zero(3);
    q(0) = r;
    const ScalingStage s = build_stage(n, q, 4);
    CHECK(s.p_j.norm() < 1e-12);
    CHECK(s.r_j == doctest::Approx(r));
    CHECK(s.tilt.norm() < 1e-12);
    CHECK(std::abs(s.phase - 1.0) < 1e-12);
    CHECK(s.c3_error < 1e-12);
    CHECK(s.c2_residual < 1e-12);
    CHECK(s.c1_margin >= -1e-8);
    const CVector z = 0.1 * basis_vector(3, 2);
    CHECK((s.H(z) - z).norm() < 1e-12);
  }
}

TEST_CASE("build_stage on the ball recovers the sphere tangent") {
  const DomainSpec b = make_ball(3);
  const OrbitSchedule o = orbit_to_boundary(b, CVector::Zero(3), basis_vector(3, 1), 0.5, 12, 2);
  const NormalizedDomain n = normalize_at(b, basis_vector(3, 1));
  StageOptions so;
  so.c1_samples = 1000;
  double last_theta = 1e9;
  for (std::size_t k = 0; k < o.size(); ++k) {
    const int j = o.indices[k];
    const ScalingStage s = build_stage(n, n.G_shift(o.shifted[k](CVector::Zero(3))), j, so);
    CHECK(s.r_j == doctest::Approx(std::pow(0.5, j)).epsilon(1e-9));
    CHECK(s.c1_margin >= -1e-8);
    CHECK(s.c2_residual < 1e-12);
    CHECK(s.c3_error < 1e-12);
    CHECK((s.p_j.tail(2) - s.q_j.tail(2)).norm() == 0.0);
    // Along the e1 orbit the normal at p_j is the e1 axis, so the tilt vanishes.
    CHECK(s.tilt.norm() < 1e-10);
    const double dev = std::abs(s.phase - 1.0);
    CHECK(dev < 2.0 * std::sqrt(s.r_j));
    CHECK(dev <= last_theta + 1e-12);
    last_theta = dev;
  }
}

TEST_CASE("build_stage off the normal axis produces a tilt that supports the domain") {
  const DomainSpec b = make_ball(2);
  const NormalizedDomain n = normalize_at(b, basis_vector(2, 1));
  CVector q = CVector::Zero(2);
  q(0) = Complex(0.05, 0.02);
  q(1) = 0.1;
  StageOptions so;
  so.c1_samples = 1000;
  const ScalingStage s = build_stage(n, q, 3, so);
  CHECK(s.tilt.norm() > 1e-3);
  CHECK(s.c1_margin >= -1e-8);
  CHECK(s.c2_residual < 1e-12);
  CHECK(s.H(s.p_j).norm() < 1e-14);
}

TEST_CASE("compose_pipeline on the Siegel model is the identity") {
  const DomainSpec s = make_siegel(3);
  const OrbitSchedule o = orbit_to_boundary(s, basis_vector(3, 1), CVector::Zero(3), 0.5, 6, 1);
  const NormalizedDomain n = normalize_at(s, CVector::Zero(3));
  const auto psi = cayley(3).psi;
  Stream rng(3, 0);
  for (std::size_t k = 0; k < o.size(); ++k) {
    const ScalingStage st = build_stage(n, n.G(o.point(k)), o.indices[k]);
    const PipelineMaps m = compose_pipeline(n, st, o.maps[k], psi);
    for (int i = 0; i < 20; ++i) {
      CVector w = random_in_ball(rng, 3, 0.3);
      w(0) = Complex(prime_norm_sq(w) + 0.5, 0.1);
      CHECK((m.omega(w) - w).norm() < 1e-10);
    }
    CHECK(m.tau(basis_vector(3, 1)).norm() < 1e-10);
  }
}

TEST_CASE("calibrate") {
  // Already triangular with positive diagonal at 0: S = I.
  COperator a(3, 3);
  a << 0.5, 0.1, 0.0, 0.0, 0.4, 0.2, 0.0, 0.0, 0.3;
  const HoloMap tri = HoloMap::affine(a, CVector::Zero(3));
  const Calibration c = calibrate(tri, CVector::Zero(3));
  CHECK((c.S - COperator::Identity(3, 3)).norm() < 1e-12);
  CHECK(flag_preserving(c.dsigma, 1e-12));

  Stream rng(4, 0);
  const HoloMap generic = HoloMap::affine(0.3 * random_operator(rng, 3), CVector::Zero(3));
  const Calibration g = calibrate(generic, CVector::Zero(3));
  CHECK(flag_preserving(g.dsigma, 1e-9));
  for (int m = 0; m < 3; ++m) {
    CHECK(g.dsigma(m, m).real() > 0.0);
    CHECK(std::abs(g.dsigma(m, m).imag()) < 1e-12);
  }
  CHECK((g.S * g.S.adjoint() - COperator::Identity(3, 3)).norm() < 1e-12);
  // Calibrating sigma again is a fixed point.
  const Calibration again = calibrate(g.sigma, CVector::Zero(3));
  CHECK((again.S - COperator::Identity(3, 3)).norm() < 1e-9);

  const HoloMap flat = HoloMap::affine(COperator::Zero(3, 3), CVector::Zero(3));
  CHECK_THROWS_AS(calibrate(flat, CVector::Zero(3)), Error);
}

TEST_CASE("run_scaling on the ball orbit") {
  std::vector<int> idx;
  const ScalingState st = ball_state(3, 14, &idx);
  REQUIRE(st.size() == 14);
  for (std::size_t k = 0; k < st.size(); ++k) {
    CHECK(st.sigma(k)(st.q).norm() < 1e-12);
    CHECK(flag_preserving(st.calibrations[k].dsigma, 1e-9));
    CHECK(st.eps[k] >= 0.0);
    if (k > 0) {
      CHECK(st.eps[k] <= st.eps[k - 1] + 1e-9);
      CHECK(st.R[k] >= st.R[k - 1] - 1e-9);
      CHECK(st.stages[k].r_j < st.stages[k - 1].r_j);
    }
    // Sampled images of B^K(q, R_j) stay in (1 + eps_j) B.
    for (const CVector& x : sample_kobayashi_ball(st.domain, st.q, st.R[k] * 0.999, 64, 5))
      CHECK(st.tau[k](x).norm() < 1.0 + st.eps[k] + 1e-9);
  }
  CHECK(st.c0() > 0.1);
}

TEST_CASE("omega_j escapes its chart on a larger Kobayashi ball") {
  const ScalingState st = ball_state(2, 10);
  REQUIRE(st.R.back() > st.R.front());
  int escapes = 0;
  for (const CVector& x : sample_kobayashi_ball(st.domain, st.q, st.R.back(), 400, 6)) {
    try {
      st.omega.front()(x);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DomainEscape) ++escapes;
    }
  }
  CHECK(escapes > 0);
}

TEST_CASE("scaling_diagnostics on the ball") {
  const ScalingState st = ball_state(3, 12);
  std::vector<StageMetrics> m;
  DiagnosticsOptions o;
  o.directions = 32;
  const Report r = scaling_diagnostics(st, o, &m);
  CHECK(r.pass());
  REQUIRE(m.size() == st.size());
  for (const StageMetrics& s : m) CHECK(s.est_lo_margin >= -1e-3);
  for (std::size_t k = 1; k < m.size(); ++k) CHECK(m[k].est0_residual <= m[k - 1].est0_residual + 1e-9);
  CHECK(m.back().est0_residual < 1e-2);
  CHECK(r.at("c0_stability").pass);
}

TEST_CASE("scaling_diagnostics needs three stages") {
  const ScalingState st = ball_state(2, 2);
  CHECK_THROWS_AS(scaling_diagnostics(st), Error);
}

TEST_CASE("hausdorff_to_siegel on the Siegel model is exact") {
  const DomainSpec s = make_siegel(3);
  const OrbitSchedule o = orbit_to_boundary(s, basis_vector(3, 1), CVector::Zero(3), 0.5, 8, 1);
  const NormalizedDomain n = normalize_at(s, CVector::Zero(3));
  std::vector<ScalingStage> stages;
  for (std::size_t k = 0; k < o.size(); ++k) stages.push_back(build_stage(n, n.G(o.point(k)), o.indices[k]));
  std::vector<double> dev;
  const Report r = hausdorff_to_siegel(n, stages, 100, 1, nullptr, &dev);
  CHECK(r.pass());
  for (double d : dev) CHECK(d < 1e-13);
}

TEST_CASE("hausdorff_to_siegel on the ball decays") {
  const ScalingState st = ball_state(2, 14);
  std::vector<double> dev;
  const Report r = hausdorff_to_siegel(st.normalized, st.stages, 100, 1, nullptr, &dev);
  CHECK(r.pass());
  CHECK(dev.back() < dev.front());
  const double e = r.notes()["exponent"].get<double>();
  CHECK(e > 0.3);
}

TEST_CASE("hausdorff_to_siegel on the ellipsoid decays at the square-root rate") {
  const DomainSpec e = make_ellipsoid(2, {1.0, 4.0});
  CVector p = CVector::Zero(2);
  p(0) = std::sqrt(0.75);
  p(1) = 0.25;
  const NormalizedDomain n = normalize_at(e, p);
  const SyntheticOrbit o = synthetic_orbit(e, p, 0.5, 13, 4);
  const std::vector<ScalingStage> stages = build_synthetic_stages(n, o);
  std::vector<CloudRow> cloud;
  std::vector<double> dev;
  const Report r = hausdorff_to_siegel(n, stages, 200, 0, &cloud, &dev);
  CHECK(r.pass());
  const double exponent = r.notes()["exponent"].get<double>();
  CHECK(exponent >= 0.3);
  CHECK(exponent <= 0.7);
  CHECK(cloud.size() == 200 * stages.size());
}

TEST_CASE("fit_decay_exponent") {
  std::vector<double> r, d;
  for (int k = 1; k < 10; ++k) {
    r.push_back(std::pow(0.5, k));
    d.push_back(3.0 * std::pow(r.back(), 0.5));
  }
  CHECK(fit_decay_exponent(r, d) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::isnan(fit_decay_exponent({1.0}, {1.0})));
}
