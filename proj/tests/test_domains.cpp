#include "doctest.h"

#include <cmath>

#include "kobalab/domains.hpp"
#include "kobalab/rng.hpp"

using namespace kobalab;

namespace {

CVector vec(std::initializer_list<Complex> v) {
  CVector z(static_cast<int>(v.size()));
  int k = 0;
  for (Complex c : v) z(k++) = c;
  return z;
}

// rho = Re z1 + |z2|^2 - 2|z3|^2, Levi form indefinite on the tangent space.
DomainSpec saddle() {
  QuadraticForm f = QuadraticForm::zero(3);
  f.linear(0) = 0.5;
  f.hermitian(1, 1) = 1.0;
  f.hermitian(2, 2) = -2.0;
  return make_quadratic_domain(f, "saddle", vec({-1.0, 0.0, 0.0}));
}

double fd_levi(const DomainSpec& d, const CVector& p, const CVector& v, double h) {
  auto second = [&](const CVector& u) { return (d.rho(p + h * u) - 2.0 * d.rho(p) + d.rho(p - h * u)) / (h * h); };
  return 0.25 * (second(v) + second(CVector(kI * v)));
}

// Ball of radius 2 whose defining function is only trusted on B(0, 0.5).
DomainSpec clipped_ball() {
  QuadraticForm f = QuadraticForm::zero(2);
  f.constant = -4.0;
  f.hermitian = COperator::Identity(2, 2);
  return make_quadratic_domain(f, "clipped", CVector::Zero(2), std::nullopt, Neighborhood{CVector::Zero(2), 0.5});
}

}  // namespace

TEST_CASE("levi_form on the model domains") {
  CHECK(levi_form(make_ball(3), basis_vector(3, 1), basis_vector(3, 2)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(levi_form(make_siegel(3), CVector::Zero(3), basis_vector(3, 2)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("levi_form on the ellipsoid matches finite differences") {
  const DomainSpec e = make_ellipsoid(2, {1.0, 4.0});
  const CVector p = basis_vector(2, 1), v = basis_vector(2, 2);
  const double exact = levi_form(e, p, v);
  CHECK(exact == doctest::Approx(4.0).epsilon(1e-10));
  for (double h : {1e-3, 1e-4}) CHECK(fd_levi(e, p, v, h) == doctest::Approx(exact).epsilon(1e-5));
}

TEST_CASE("levi_form is Hermitian quadratic") {
  const DomainSpec d = make_perturbed_ball(3, 0.3);
  Stream rng(4, 0);
  const CVector p = 0.5 * random_unit_vector(rng, 3);
  for (int k = 0; k < 50; ++k) {
    const CVector v = random_gaussian_vector(rng, 3), w = random_gaussian_vector(rng, 3);
    const double lhs = levi_form(d, p, v + w) + levi_form(d, p, v - w);
    const double rhs = 2.0 * levi_form(d, p, v) + 2.0 * levi_form(d, p, w);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    const double t = 1.0 + rng.uniform();
    CHECK(levi_form(d, p, CVector(t * v)) == doctest::Approx(t * t * levi_form(d, p, v)).epsilon(1e-9));
  }
}

TEST_CASE("levi_form outside U") {
  const DomainSpec local = clipped_ball();
  CHECK_THROWS_AS(levi_form(local, basis_vector(2, 1), basis_vector(2, 2)), Error);
  CHECK_NOTHROW(levi_form(local, CVector(0.1 * basis_vector(2, 1)), basis_vector(2, 2)));
}

TEST_CASE("is_strongly_pseudoconvex") {
  const auto ball = is_strongly_pseudoconvex(make_ball(4), basis_vector(4, 1));
  CHECK(ball.strongly);
  CHECK(ball.c_estimate == doctest::Approx(1.0).epsilon(0.01));

  const auto s = is_strongly_pseudoconvex(saddle(), CVector::Zero(3));
  CHECK_FALSE(s.strongly);
  CHECK(s.c_estimate == doctest::Approx(-2.0).epsilon(0.01));
  CHECK(s.c_exact == doctest::Approx(-2.0).epsilon(1e-9));

  // Tangent space at e1 is span(e2); the restriction of |z1|^2 + 4|z2|^2 is 4.
  const auto e = is_strongly_pseudoconvex(make_ellipsoid(2, {1.0, 4.0}), basis_vector(2, 1));
  CHECK(e.strongly);
  CHECK(e.c_exact == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(e.c_estimate == doctest::Approx(4.0).epsilon(1e-6));

  CHECK_THROWS_AS(is_strongly_pseudoconvex(make_ball(2), CVector::Zero(2)), Error);
}

TEST_CASE("pseudoconvexity constant is dimension independent on the catalog") {
  auto ellipsoid_weights = [](int n) {
    std::vector<double> w(static_cast<std::size_t>(n), 2.0);
    w[0] = 1.0;
    return w;
  };
  for (const char* kind : {"ball", "ellipsoid", "perturbed"}) {
    double first = 0.0;
    for (int n : {2, 4, 8, 16}) {
      DomainSpec d = std::string(kind) == "ball" ? make_ball(n)
                     : std::string(kind) == "ellipsoid" ? make_ellipsoid(n, ellipsoid_weights(n))
                                                         : make_perturbed_ball(n, 0.2);
      const CVector p = ray_boundary_point(d, d.basepoint).boundary;
      const auto r = is_strongly_pseudoconvex(d, p, 512, 3);
      CHECK(r.strongly);
      if (n == 2) first = r.c_exact;
      else CHECK(std::abs(r.c_exact - first) <= 0.1 * first);
    }
  }
}

TEST_CASE("ray_boundary_point") {
  auto hit = ray_boundary_point(make_ball(3), CVector::Zero(3));
  CHECK((hit.boundary - basis_vector(3, 1)).norm() < 1e-12);
  CHECK(hit.r == doctest::Approx(1.0));

  hit = ray_boundary_point(make_siegel(2), basis_vector(2, 1));
  CHECK(hit.boundary.norm() < 1e-12);
  CHECK(hit.r == doctest::Approx(1.0));

  const CVector q = vec({0.5, 0.1});
  hit = ray_boundary_point(make_ellipsoid(2, {1.0, 4.0}), q);
  const double root = std::sqrt(1.0 - 4.0 * 0.01);
  CHECK(std::abs(hit.boundary(0).real() - root) < 1e-10);
  CHECK(std::abs(hit.r - (root - 0.5)) < 1e-10);
  CHECK(hit.boundary(1) == q(1));

  CHECK_THROWS_AS(ray_boundary_point(clipped_ball(), CVector::Zero(2)), Error);
}

TEST_CASE("normalize_at on the Siegel model is the identity") {
  const DomainSpec s = make_siegel(3);
  const NormalizedDomain n = normalize_at(s, CVector::Zero(3));
  Stream rng(6, 0);
  for (int k = 0; k < 20; ++k) {
    const CVector z = random_in_ball(rng, 3, 0.3);
    CHECK((n.G(z) - z).norm() < 1e-12);
    const double t = rng.uniform(-0.2, 0.2);
    CHECK(n.psi(t, z) == doctest::Approx(prime_norm_sq(z)).epsilon(1e-10));
  }
  // Normalizing the normalized model again changes nothing.
  const NormalizedDomain twice = normalize_at(n.local, CVector::Zero(3));
  for (int k = 0; k < 20; ++k) {
    const CVector z = random_in_ball(rng, 3, 0.3);
    const double t = rng.uniform(-0.2, 0.2);
    CHECK(std::abs(twice.psi(t, z) - n.psi(t, z)) < 1e-10);
  }
}

TEST_CASE("normalize_at on the ball matches the Levi form") {
  const DomainSpec b = make_ball(3);
  const CVector p = basis_vector(3, 1);
  const NormalizedDomain n = normalize_at(b, p);
  CHECK(n.G(p).norm() < 1e-14);
  CHECK(n.psi_gradient_at_origin < 1e-8);
  CHECK(std::abs(n.psi(0.0, CVector::Zero(3))) < 1e-14);
  const Eigen::MatrixXd h = n.psi2_hessian();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  // Tangential block: psi2 = ||Z'||^2, so the real Hessian along Re Z2 is 2.
  CHECK(h(1, 1) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(n.taylor_residual < 10.0);
}

TEST_CASE("normalize_at sends p to 0 with invertible differential on the catalog") {
  for (DomainSpec d : {make_ball(3), make_ellipsoid(3, {1.0, 4.0, 2.0}), make_perturbed_ball(3, 0.3), make_siegel(3)}) {
    const CVector p = ray_boundary_point(d, d.basepoint).boundary;
    const NormalizedDomain n = normalize_at(d, p);
    CHECK(n.G(p).norm() < 1e-12);
    CHECK(smallest_singular_value(n.G.jacobian(p)) > 1e-6);
    CHECK(n.psi_gradient_at_origin < 1e-6);
  }
}

TEST_CASE("normalize_at rejects non strongly pseudoconvex points") {
  CHECK_THROWS_AS(normalize_at(saddle(), CVector::Zero(3)), Error);
}

TEST_CASE("peak_verify on the ball") {
  const DomainSpec b = make_ball(3);
  const CVector p = basis_vector(3, 1);
  const PeakFunction h = linear_support_peak(b, p);
  CHECK(h.h(p) == doctest::Approx(0.0));
  PeakOptions o;
  o.samples = 5000;
  const Report r = peak_verify(b, p, h, 8, o);
  CHECK(r.pass());
  // sup over ||z - p|| >= delta of Re z1 - 1 is at most -delta^2 / 2.
  Stream rng(8, 0);
  for (int k = 0; k < 2000; ++k) {
    const CVector z = random_in_ball(rng, 3, 1.0);
    const double d = (z - p).norm();
    if (d >= 0.1) CHECK(h.h(z) <= -d * d / 2.0 + 1e-12);
  }
  // diam(V_m) <= 4 / sqrt(m).
  const auto diameters = r.notes()["diameters"].get<std::vector<double>>();
  REQUIRE(diameters.size() == 8);
  for (int m = 1; m <= 8; ++m) CHECK(diameters[m - 1] <= 4.0 / std::sqrt(double(m)) + 1e-12);
}

TEST_CASE("peak_verify flags a degenerate peak") {
  const DomainSpec b = make_ball(2);
  const PeakFunction zero{[](const CVector&) { return 0.0; }, basis_vector(2, 1), "zero"};
  PeakOptions o;
  o.samples = 500;
  CHECK_FALSE(peak_verify(b, basis_vector(2, 1), zero, 4, o).pass());
}

TEST_CASE("sampled boundary points have nonvanishing gradient") {
  for (DomainSpec d : {make_ball(3), make_ellipsoid(3, {1.0, 3.0}), make_perturbed_ball(3, 0.4)}) {
    for (const CVector& q : sample_boundary(d, 50, 2)) {
      CHECK(std::abs(d.rho(q)) < 1e-9);
      CHECK(d.defining.holomorphic_gradient(q).norm() > 1e-6);
    }
    for (const CVector& z : sample_closure(d, 50, 3)) CHECK(d.rho(z) <= 1e-12);
    CHECK(d.rho(d.basepoint) < 0.0);
  }
}

TEST_CASE("finite-difference defining functions agree with the analytic ones") {
  const DomainSpec b = make_ball(2);
  const DomainSpec c = make_custom(2, [](const CVector& z) { return z.squaredNorm() - 1.0; }, CVector::Zero(2));
  const CVector p = basis_vector(2, 1);
  CHECK(levi_form(c, p, basis_vector(2, 2)) == doctest::Approx(levi_form(b, p, basis_vector(2, 2))).epsilon(1e-5));
  CHECK((outer_normal(c, p) - outer_normal(b, p)).norm() < 1e-6);
}
