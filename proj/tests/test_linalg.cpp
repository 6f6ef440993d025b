#include "doctest.h"

#include <vector>

#include "kobalab/linalg.hpp"
#include "kobalab/rng.hpp"

using namespace kobalab;

namespace {

COperator diag(std::initializer_list<double> d) {
  COperator m = COperator::Zero(static_cast<int>(d.size()), static_cast<int>(d.size()));
  int k = 0;
  for (double x : d) m(k, k) = x, ++k;
  return m;
}

}  // namespace

TEST_CASE("gram_schmidt leaves an orthonormal basis unchanged") {
  std::vector<CVector> in{basis_vector(3, 1), basis_vector(3, 2), basis_vector(3, 3)};
  const auto out = gram_schmidt(in);
  for (int m = 0; m < 3; ++m) {
    CHECK((out.orthonormal[m] - in[m]).norm() < 1e-15);
    CHECK(out.norms[m] == doctest::Approx(1.0));
  }
}

TEST_CASE("gram_schmidt performs one projection step") {
  std::vector<CVector> in{basis_vector(2, 1), CVector(basis_vector(2, 1) + basis_vector(2, 2))};
  const auto out = gram_schmidt(in);
  CHECK((out.orthonormal[0] - basis_vector(2, 1)).norm() < 1e-15);
  CHECK((out.orthonormal[1] - basis_vector(2, 2)).norm() < 1e-15);
  CHECK(out.norms[0] == doctest::Approx(1.0));
  CHECK(out.norms[1] == doctest::Approx(1.0));
}

TEST_CASE("gram_schmidt on random vectors agrees with a second pass") {
  Stream rng(11, 0);
  std::vector<CVector> in;
  for (int m = 0; m < 5; ++m) in.push_back(random_gaussian_vector(rng, 5));
  const auto once = gram_schmidt(in);
  COperator q(5, 5);
  for (int m = 0; m < 5; ++m) q.col(m) = once.orthonormal[m];
  CHECK((q.adjoint() * q - COperator::Identity(5, 5)).norm() < 1e-10);

  const auto twice = gram_schmidt(once.orthonormal);
  for (int m = 0; m < 5; ++m) {
    CHECK((twice.orthonormal[m] - once.orthonormal[m]).norm() < 1e-10);
    CHECK(twice.norms[m] == doctest::Approx(1.0).epsilon(1e-10));
  }
  // Prefix spans: projection onto earlier outputs plus the residual rebuilds each input.
  for (int m = 0; m < 5; ++m) {
    CVector rebuilt = CVector::Zero(5);
    for (int k = 0; k <= m; ++k) rebuilt += inner(in[m], once.orthonormal[k]) * once.orthonormal[k];
    CHECK((rebuilt - in[m]).norm() < 1e-10);
  }
}

TEST_CASE("gram_schmidt rejects dependent input") {
  std::vector<CVector> in{basis_vector(3, 1), CVector(2.0 * basis_vector(3, 1))};
  CHECK_THROWS_AS(gram_schmidt(in), Error);
}

TEST_CASE("polar_decompose scalar cases") {
  const COperator id = COperator::Identity(3, 3);
  auto pd = polar_decompose(id);
  CHECK((pd.positive - id).norm() < 1e-12);
  CHECK((pd.unitary - id).norm() < 1e-12);
  pd = polar_decompose(2.0 * id);
  CHECK((pd.positive - 2.0 * id).norm() < 1e-12);
  CHECK((pd.unitary - id).norm() < 1e-12);
}

TEST_CASE("polar_decompose reconstructs random operators") {
  Stream rng(3, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const COperator a = random_operator(rng, 4);
    const auto pd = polar_decompose(a);
    CHECK(operator_norm(pd.positive * pd.unitary - a) < 1e-10);
    CHECK(operator_norm(pd.unitary.adjoint() * pd.unitary - COperator::Identity(4, 4)) < 1e-10);
    CHECK(operator_norm(pd.positive - pd.positive.adjoint()) < 1e-12);
    CHECK(min_hermitian_eigenvalue(pd.positive) > 0.0);
    // P is the positive square root of A A*.
    CHECK(operator_norm(pd.positive - hermitian_sqrt(a * a.adjoint())) < 1e-8);
  }
}

TEST_CASE("polar_decompose rejects singular operators") {
  COperator a = COperator::Identity(3, 3);
  a(2, 2) = 0.0;
  CHECK_THROWS_AS(polar_decompose(a), Error);
}

TEST_CASE("operator_geq scalar and diagonal cases") {
  const COperator id = COperator::Identity(3, 3);
  CHECK(operator_geq(id, 0.7 * id));
  CHECK_FALSE(operator_geq(diag({1, 1}), diag({1, 2})));
}

TEST_CASE("operator_geq rejects non-Hermitian differences") {
  COperator t = COperator::Identity(2, 2);
  t(0, 1) = 0.5;
  CHECK_THROWS_AS(operator_geq(t, COperator::Zero(2, 2)), Error);
  // The Hermitian-part reading never throws.
  CHECK(hermitian_part_geq(t, COperator::Zero(2, 2)));
}

TEST_CASE("operator_geq agrees with sampled quadratic forms") {
  Stream rng(5, 2);
  for (int trial = 0; trial < 40; ++trial) {
    const COperator t = random_hermitian(rng, 3);
    COperator s = random_hermitian(rng, 3);
    // Shift half the pairs so both outcomes occur.
    if (trial % 2 == 0) s = t - (0.05 + rng.uniform()) * COperator::Identity(3, 3) - 0.0 * s;
    bool sampled = true;
    for (int k = 0; k < 10000 && sampled; ++k) {
      const CVector x = random_unit_vector(rng, 3);
      sampled = inner((t - s) * x, x).real() >= -1e-10;
    }
    const bool exact = operator_geq(t, s);
    // Sampling can miss a thin negative cone but never finds one the exact test misses.
    if (exact) CHECK(sampled);
    if (!sampled) CHECK_FALSE(exact);
    if (trial % 2 == 0) CHECK(exact);
  }
}

TEST_CASE("operator_geq is a partial order on sampled Hermitian triples") {
  Stream rng(9, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const COperator a = random_hermitian(rng, 3);
    const COperator pos = random_operator(rng, 3);
    const COperator b = a + pos * pos.adjoint();
    const COperator c = b + 0.1 * COperator::Identity(3, 3);
    CHECK(operator_geq(a, a));
    CHECK(operator_geq(b, a));
    CHECK(operator_geq(c, b));
    CHECK(operator_geq(c, a));
    if (operator_geq(a, b)) CHECK(operator_norm(a - b) < 1e-8);
  }
}

TEST_CASE("flag_preserving") {
  COperator a(3, 3);
  a << 1, 2, 3, 0, 4, 5, 0, 0, 6;
  CHECK(flag_preserving(a, 1e-12));
  for (int n = 1; n <= 3; ++n) CHECK(maps_flag_into(a, FlagIndex(n), 1e-12));
  a(1, 0) = 0.1;
  CHECK_FALSE(flag_preserving(a, 1e-8));
  CHECK_FALSE(maps_flag_into(a, FlagIndex(1), 1e-8));
  CHECK(lower_triangle_max(a) == doctest::Approx(0.1));
}

TEST_CASE("vector split and unitary completion") {
  Stream rng(1, 4);
  const CVector z = random_gaussian_vector(rng, 6);
  CHECK(z.squaredNorm() == doctest::Approx(std::norm(z(0)) + prime_norm_sq(z)).epsilon(1e-15));
  CHECK(prime_part(z)(0) == Complex(0.0));
  const CVector u = random_unit_vector(rng, 6);
  const COperator w = unitary_with_first_column(u);
  CHECK((w.col(0) - u).norm() < 1e-12);
  for (int k = 0; k < 10; ++k) {
    const CVector x = random_gaussian_vector(rng, 6);
    CHECK((w * x).norm() == doctest::Approx(x.norm()).epsilon(1e-12));
  }
  CHECK(operator_norm(w) >= std::abs(w.eigenvalues().cwiseAbs().maxCoeff()) - 1e-12);
}

TEST_CASE("FlagIndex rejects nonpositive n") { CHECK_THROWS(FlagIndex(0)); }
