#include "kobalab/rng.hpp"

#include <cmath>

namespace kobalab {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(root) ^ stream) + index);
}

Stream::Stream(std::uint64_t root, std::uint64_t stream, std::uint64_t index)
    : engine_(derive_seed(root, stream, index)) {}

double Stream::uniform() { return uniform_(engine_); }

double Stream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Stream::normal() { return normal_(engine_); }

Complex Stream::complex_normal() {
  const double re = normal();
  const double im = normal();
  return Complex(re, im) / std::sqrt(2.0);
}

int Stream::integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

CVector random_gaussian_vector(Stream& rng, int dim) {
  CVector v(dim);
  for (int m = 0; m < dim; ++m) v(m) = rng.complex_normal();
  return v;
}

CVector random_unit_vector(Stream& rng, int dim) {
  CVector v = random_gaussian_vector(rng, dim);
  while (v.norm() < 1e-12) v = random_gaussian_vector(rng, dim);
  return v / v.norm();
}

CVector random_in_ball(Stream& rng, int dim, double radius) {
  const double r = radius * std::pow(rng.uniform(), 1.0 / (2.0 * dim));
  return r * random_unit_vector(rng, dim);
}

CVector random_radial(Stream& rng, int dim, double radius) {
  const double r = radius * rng.uniform();
  return r * random_unit_vector(rng, dim);
}

COperator random_operator(Stream& rng, int dim) {
  COperator a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = rng.complex_normal();
  return a;
}

COperator random_hermitian(Stream& rng, int dim) {
  const COperator a = random_operator(rng, dim);
  return 0.5 * (a + a.adjoint());
}

}  // namespace kobalab
