#include "kobalab/automorphisms.hpp"

#include <cmath>

#include "kobalab/kobayashi.hpp"
#include "kobalab/rng.hpp"

namespace kobalab {

HoloMap ball_mobius(const CVector& a) {
  const double a2 = a.squaredNorm();
  if (!(a2 < 1.0)) throw Error(ErrorKind::OutOfBall, "Mobius parameter must satisfy |a| < 1");
  const int n = static_cast<int>(a.size());
  // a = 0 gives -z in the general formula; the identity is used instead so the
  // family starts at the identity.
  if (a2 == 0.0) return HoloMap::identity(n);
  const double s = std::sqrt(1.0 - a2);
  const COperator P = a * a.adjoint() / a2;
  const COperator L = P + s * (COperator::Identity(n, n) - P);  // P_a + s_a Q_a
  auto eval = [a, L](const CVector& z) -> CVector {
    const Complex den = 1.0 - a.dot(z);
    return (a - L * z) / den;
  };
  auto jac = [a, L](const CVector& z) -> COperator {
    const Complex den = 1.0 - a.dot(z);
    const CVector num = a - L * z;
    return (-L * den + num * a.adjoint()) / (den * den);
  };
  HoloMap m(MapKind::Mobius, "phi_a", eval, jac);
  return m.with_inverse(m);
}

HoloMap ball_mobius_toward(const CVector& p, double s) {
  if (std::abs(p.norm() - 1.0) > 1e-12) throw Error(ErrorKind::NotBoundaryPoint, "p must be a unit vector");
  if (!(s > 0 && s < 1)) throw Error(ErrorKind::OutOfBall, "need 0 < s < 1");
  const int n = static_cast<int>(p.size());
  const double c = std::sqrt(s * (2.0 - s));  // sqrt(1 - |a|^2)
  const COperator pp = p * p.adjoint();
  const COperator Q = COperator::Identity(n, n) - pp;
  const COperator L = pp + c * Q;
  auto num = [p, s, c](const CVector& z) -> CVector {
    const Complex zp = p.dot(z);
    return -s * (1.0 + zp) * p - c * (z - zp * p);
  };
  auto eval = [p, s, num](const CVector& z) -> CVector { return num(z) / (1.0 - (1.0 - s) * p.dot(z)); };
  auto jac = [p, s, c, pp, Q, num](const CVector& z) -> COperator {
    const Complex den = 1.0 - (1.0 - s) * p.dot(z);
    return (-s * pp - c * Q) / den + num(z) * p.adjoint() * ((1.0 - s) / (den * den));
  };
  auto inv = [p, s, L](const CVector& d) -> CVector {
    return (-s * p - L * d) / (s - (1.0 - s) * p.dot(d));
  };
  auto inv_jac = [p, s, L](const CVector& d) -> COperator {
    const Complex den = s - (1.0 - s) * p.dot(d);
    const CVector nn = -s * p - L * d;
    return -L / den + nn * p.adjoint() * ((1.0 - s) / (den * den));
  };
  return HoloMap(MapKind::Mobius, "phi_a - p", eval, jac)
      .with_inverse(HoloMap(MapKind::Mobius, "phi_a(p + .)", inv, inv_jac));
}

CayleyPair cayley(int dim) {
  if (dim < 1) throw Error(ErrorKind::DegenerateInput, "cayley needs N >= 1");
  auto check = [](Complex c) {
    if (std::abs(c) < 1e-300) throw Error(ErrorKind::PoleHit, "Cayley transform evaluated at its pole");
  };
  auto psi = [dim, check](const CVector& w) -> CVector {
    const Complex den = 1.0 + w(0);
    check(den);
    CVector z(dim);
    z(0) = (1.0 - w(0)) / den;
    if (dim > 1) z.tail(dim - 1) = 2.0 * w.tail(dim - 1) / den;
    return z;
  };
  auto psi_jac = [dim, check](const CVector& w) -> COperator {
    const Complex den = 1.0 + w(0);
    check(den);
    COperator j = COperator::Zero(dim, dim);
    j(0, 0) = -2.0 / (den * den);
    if (dim > 1) {
      j.col(0).tail(dim - 1) = -2.0 * w.tail(dim - 1) / (den * den);
      j.bottomRightCorner(dim - 1, dim - 1) = COperator::Identity(dim - 1, dim - 1) * (2.0 / den);
    }
    return j;
  };
  auto inv = [dim, check](const CVector& z) -> CVector {
    const Complex den = 1.0 + z(0);
    check(den);
    CVector w(dim);
    w(0) = (1.0 - z(0)) / den;
    if (dim > 1) w.tail(dim - 1) = z.tail(dim - 1) / den;
    return w;
  };
  auto inv_jac = [dim, check](const CVector& z) -> COperator {
    const Complex den = 1.0 + z(0);
    check(den);
    COperator j = COperator::Zero(dim, dim);
    j(0, 0) = -2.0 / (den * den);
    if (dim > 1) {
      j.col(0).tail(dim - 1) = -z.tail(dim - 1) / (den * den);
      j.bottomRightCorner(dim - 1, dim - 1) = COperator::Identity(dim - 1, dim - 1) / den;
    }
    return j;
  };
  HoloMap forward(MapKind::Cayley, "Psi", psi, psi_jac);
  HoloMap backward(MapKind::Cayley, "Psi^-1", inv, inv_jac);
  return {forward.with_inverse(backward), backward.with_inverse(forward)};
}

HoloMap siegel_dilation(int dim, double lambda) {
  if (!(lambda > 0)) throw Error(ErrorKind::DegenerateInput, "dilation factor must be positive");
  COperator d = COperator::Identity(dim, dim) * lambda;
  d(0, 0) = lambda * lambda;
  return HoloMap::affine(d, CVector::Zero(dim), MapKind::Dilation, "dilation");
}

OrbitSchedule orbit_to_boundary(const DomainSpec& domain, const CVector& q, const CVector& p, double rate, int count,
                                int first) {
  if (!(rate > 0 && rate < 1)) throw Error(ErrorKind::DegenerateInput, "orbit rate must lie in (0, 1)");
  if (count < 1) throw Error(ErrorKind::DegenerateInput, "orbit needs count >= 1");
  if (!domain.contains(q)) throw Error(ErrorKind::DegenerateInput, "orbit base point must be interior");
  OrbitSchedule out{{}, {}, q, p, rate};
  if (domain.kind == DomainKind::Siegel) {
    if (p.norm() > 1e-12) throw Error(ErrorKind::UnsupportedDomain, "Siegel orbits are built toward p = 0 only");
    for (int j = first; j < first + count; ++j) {
      out.maps.push_back(siegel_dilation(domain.dimension, std::pow(rate, 0.5 * j)));
      out.indices.push_back(j);
    }
    return out;
  }
  if (!domain.to_unit_ball || !domain.to_unit_ball->invertible())
    throw Error(ErrorKind::UnsupportedDomain, "no automorphism group known for domain '" + domain.tag + "'");
  const HoloMap& T = *domain.to_unit_ball;
  const bool trivial = T.label() == "identity";
  const CVector pt = T(p);
  if (std::abs(pt.norm() - 1.0) > 1e-9) throw Error(ErrorKind::NotBoundaryPoint, "orbit target is not on the boundary");
  const CVector qt = T(q);
  const HoloMap center = ball_mobius(qt);
  for (int j = first; j < first + count; ++j) {
    const CVector a = (1.0 - std::pow(rate, j)) * pt;
    HoloMap phi = compose(ball_mobius(a), center);
    if (!trivial) phi = compose(T.inverse(), compose(phi, T));
    else out.shifted.push_back(compose(ball_mobius_toward(pt, std::pow(rate, j)), center));
    out.maps.push_back(phi);
    out.indices.push_back(j);
  }
  return out;
}

SyntheticOrbit synthetic_orbit(const DomainSpec& domain, const CVector& p, double rate, int count, int first,
                               double tilt) {
  if (!(rate > 0 && rate < 1)) throw Error(ErrorKind::DegenerateInput, "orbit rate must lie in (0, 1)");
  const CVector n = outer_normal(domain, p);
  SyntheticOrbit out{{}, {}, p, rate};
  for (int j = first; j < first + count; ++j) {
    const double s = std::pow(rate, j);
    double c = tilt;
    CVector qj = p - s * n + c * std::pow(s, 0.75) * (kI * n);
    for (int k = 0; k < 60 && !domain.contains(qj); ++k) {
      c *= 0.5;
      qj = p - s * n + c * std::pow(s, 0.75) * (kI * n);
    }
    if (!domain.contains(qj)) throw Error(ErrorKind::DegenerateInput, "synthetic orbit point is not interior");
    out.points.push_back(qj);
    out.indices.push_back(j);
  }
  return out;
}

OrbitLocalization orbit_localization(const DomainSpec& domain, const OrbitSchedule& orbit, double kobayashi_radius,
                                     double euclidean_radius, int samples, std::uint64_t seed) {
  const std::vector<CVector> pts = sample_kobayashi_ball(domain, orbit.q, kobayashi_radius, samples, seed);
  OrbitLocalization out;
  for (const HoloMap& phi : orbit.maps) {
    double far = 0.0;
    for (const CVector& x : pts) far = std::max(far, (phi(x) - orbit.p).norm());
    out.max_distance.push_back(far);
  }
  for (int k = static_cast<int>(out.max_distance.size()) - 1; k >= 0; --k) {
    if (out.max_distance[static_cast<std::size_t>(k)] >= euclidean_radius) break;
    out.J = orbit.indices[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace kobalab
