#include "doctest.h"

#include <cmath>

#include "kobalab/automorphisms.hpp"
#include "kobalab/lemma_lab.hpp"
#include "kobalab/rng.hpp"

using namespace kobalab;

namespace {

// z -> z + c z1 z, with ||d psi - I|| <= 2 |c| ||z||.
HoloMap quadratic_perturbation(int dim, double c) {
  return HoloMap(
      MapKind::Custom, "quadratic",
      [dim, c](const CVector& z) {
        (void)dim;
        return CVector(z + c * z(0) * z);
      },
      [dim, c](const CVector& z) {
        COperator j = COperator::Identity(dim, dim) * (1.0 + c * z(0));
        j.col(0) += c * z;
        return j;
      });
}

}  // namespace

TEST_CASE("disc lemma on the identity") {
  const Report r = disc_lemma_check([](Complex z) { return z; }, 1e-3, 0.1);
  CHECK(r.at("sup_deviation").value == 0.0);
  CHECK(r.pass());
}

TEST_CASE("disc lemma on a Blaschke product close to the identity") {
  const double c = 1.0 - 1e-4;
  const DiscMap f = [c](Complex z) { return z * (c + z) / (1.0 + c * z); };
  const Report r = disc_lemma_check(f, 1e-3, 0.1);
  CHECK(r.pass());
  CHECK(r.at("sup_deviation").value < 0.1);
}

TEST_CASE("disc lemma preconditions") {
  const DiscMap rotation = [](Complex z) { return std::polar(1.0, 0.5) * z; };
  CHECK_THROWS_AS(disc_lemma_check(rotation, 1e-3, 0.1), Error);
  CHECK_THROWS_AS(disc_lemma_check([](Complex z) { return 0.5 * z; }, 1e-3, 0.1), Error);
  CHECK_THROWS_AS(disc_lemma_check([](Complex z) { return 0.5 * z + 0.1; }, 0.9, 0.1), Error);
  CHECK_THROWS_AS(disc_lemma_check([](Complex z) { return 2.0 * z; }, 0.9, 0.1), Error);
}

TEST_CASE("empirical_delta") {
  CHECK(empirical_delta(0.9, 60) >= 1e-1);
  const double d5 = empirical_delta(0.5, 60), d2 = empirical_delta(0.2, 60), d1 = empirical_delta(0.1, 60);
  CHECK(d5 >= d2);
  CHECK(d2 >= d1);
  const std::vector<DiscMap> identity{[](Complex z) { return z; }};
  CHECK(empirical_delta(0.01, identity) == doctest::Approx(1e-1));
  for (const DiscMap& f : blaschke_family(30)) {
    CHECK(std::abs(f(0.0)) < 1e-12);
    CHECK(std::abs(f(std::polar(1.0, 0.7))) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("ball convergence for the linear family") {
  const SelfMapFamily fam = linear_family(3);
  std::vector<double> sups;
  BallConvergenceOptions o;
  o.samples = 2000;
  const Report r = ball_convergence_check(fam, 0.9, 20, o, &sups);
  CHECK(r.pass());
  REQUIRE(sups.size() == 19);
  for (std::size_t k = 0; k < sups.size(); ++k) {
    const double exact = 0.9 / (k + 2);
    CHECK(sups[k] <= exact * (1.0 + 1e-12));
    CHECK(sups[k] >= 0.95 * exact);
  }
}

TEST_CASE("ball convergence for the Mobius and perturbed families") {
  for (const SelfMapFamily& fam : {mobius_family(3), perturbed_family(3)}) {
    std::vector<double> sups;
    BallConvergenceOptions o;
    o.samples = 2000;
    const Report r = ball_convergence_check(fam, 0.9, 30, o, &sups);
    CHECK(r.pass());
    CHECK(sups.back() < sups.front());
    CHECK(sups.back() < 0.05);
    for (int j = 0; j < 5; ++j) {
      const HoloMap g = fam.generator(5 + j);
      CHECK(g(CVector::Zero(3)).norm() < 1e-14);
      CHECK(hermitian_part_geq(g.jacobian(CVector::Zero(3)), (1.0 - fam.floor(5 + j)) * COperator::Identity(3, 3)));
    }
  }
}

TEST_CASE("ball convergence rejects a family below its derivative floor") {
  SelfMapFamily fam = linear_family(2);
  fam.floor = [](int) { return 0.0; };
  CHECK_THROWS_AS(ball_convergence_check(fam, 0.9, 5), Error);
}

TEST_CASE("invert_by_iteration on the identity") {
  const CVector x = 0.3 * basis_vector(2, 2);
  const IterationTrace t = invert_by_iteration(HoloMap::identity(2), x, 0.5, 0.1, 1e-12);
  CHECK(t.steps() == 1);
  CHECK(t.residuals.back() == 0.0);
  CHECK((t.solution() - x).norm() == 0.0);
}

TEST_CASE("invert_by_iteration matches the quadratic root") {
  const HoloMap psi = quadratic_perturbation(1, 0.05);
  CVector x(1);
  x(0) = 0.1;
  const IterationTrace t = invert_by_iteration(psi, x, 0.5, 0.1, 1e-14);
  const double root = (std::sqrt(1.0 + 4.0 * 0.05 * 0.1) - 1.0) / (2.0 * 0.05);
  CHECK(std::abs(t.solution()(0) - root) < 1e-12);
  CHECK(t.envelope_ok);
  CHECK(t.ratio <= 0.15);
  CHECK(t.steps() <= t.iteration_bound);
  for (std::size_t k = 1; k < t.residuals.size(); ++k) CHECK(t.residuals[k] < t.residuals[k - 1]);
}

TEST_CASE("invert_by_iteration preconditions") {
  const HoloMap psi = quadratic_perturbation(2, 0.05);
  CHECK_THROWS_AS(invert_by_iteration(psi, CVector(0.6 * basis_vector(2, 1)), 0.5, 0.1, 1e-10), Error);
  CHECK_THROWS_AS(invert_by_iteration(psi, CVector(0.1 * basis_vector(2, 1)), 0.9, 0.1, 1e-10), Error);
  try {
    invert_by_iteration(quadratic_perturbation(2, 0.6), CVector(0.1 * basis_vector(2, 1)), 0.5, 0.1, 1e-10);
    FAIL("expected ContractionFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ContractionFailure);
  }
}

TEST_CASE("surjectivity_radius") {
  const Report id = surjectivity_radius(HoloMap::identity(3), 3, 0.8, 0.05, 200);
  CHECK(id.pass());
  CHECK(id.at("injectivity").value == doctest::Approx(1.0));

  const HoloMap psi = quadratic_perturbation(3, 0.025);
  CHECK(derivative_deviation(psi, 3, 0.88, 1000) < 0.05);
  SurjectivityOptions o;
  o.pairs = 1000;
  const Report r = surjectivity_radius(psi, 3, 0.8, 0.05, 1000, o);
  CHECK(r.pass());
  CHECK(r.at("failures").value == 0.0);
  CHECK(r.at("injectivity").value >= 0.95);

  try {
    surjectivity_radius(quadratic_perturbation(3, 0.35), 3, 0.8, 0.05, 100);
    FAIL("expected ContractionFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ContractionFailure);
  }
}

TEST_CASE("theorem constants") {
  CHECK(theorem_c(2) == 1.0 / 6.0);
  CHECK(theorem_b(2) == 0.5 * std::log(3.0));
  for (int j = 3; j < 100; ++j) {
    CHECK(theorem_c(j) > theorem_c(j - 1));
    CHECK(theorem_c(j) < 1.0);
    CHECK(theorem_b(j) == doctest::Approx(std::atanh(1.0 - 1.0 / j)).epsilon(1e-12));
  }
  CHECK(theorem_t(0.5, 2) == doctest::Approx(std::tanh(0.5 / std::tanh(0.5 * std::log(3.0) - 0.5))));
  CHECK_THROWS_AS(theorem_t(1.0, 2), Error);
}

TEST_CASE("nested ball suite") {
  NestedBallOptions o;
  o.configurations = 200;
  const Report r = nested_ball_suite(3, o);
  CHECK(r.pass());
  CHECK(r.at("violations").value == 0.0);
  CHECK(r.at("distance_margin_min").value >= -1e-6);
}

TEST_CASE("main theorem replay on a small ball") {
  const int dim = 4, j_max = 32;
  const DomainSpec b = make_ball(dim);
  const OrbitSchedule o = orbit_to_boundary(b, CVector::Zero(dim), basis_vector(dim, 1), 0.5, j_max - 1, 2);
  TheoremOptions opt;
  opt.samples = 500;
  opt.surjectivity_samples = 200;
  opt.scaling.image_samples = 64;
  opt.diagnostics.directions = 16;
  TheoremArtifacts art;
  const Report r = main_theorem_pipeline(b, o, opt, &art);
  CHECK(r.at("c_2").pass);
  CHECK(r.at("b_2").pass);
  CHECK(r.at("convergence_final").value < 0.05);
  for (std::size_t k = 1; k < art.convergence_sup.size(); ++k)
    CHECK(art.convergence_sup[k] <= art.convergence_sup[k - 1] + 1e-9);
  for (const StageMetrics& m : art.metrics) CHECK(m.est_lo_margin >= -1e-3);
  CHECK(r.pass());
}

TEST_CASE("main theorem replay needs an exact ball map") {
  const DomainSpec s = make_siegel(2);
  const OrbitSchedule o = orbit_to_boundary(s, basis_vector(2, 1), CVector::Zero(2), 0.5, 5, 2);
  CHECK_THROWS_AS(main_theorem_pipeline(s, o), Error);
}
