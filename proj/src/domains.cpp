#include "kobalab/domains.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "kobalab/automorphisms.hpp"
#include "kobalab/rng.hpp"

namespace kobalab {

namespace {

double real_bilinear_trans(const CVector& v, const COperator& b, const CVector& w) {
  return (v.transpose() * b * w).value().real();
}

CVector zero_if_empty(const CVector& c, int dim) { return c.size() == 0 ? CVector::Zero(dim) : c; }

// Smallest s in (0, s_max] with rho(origin + s dir) >= 0, to full precision.
// Returns a negative value when no crossing occurs before leaving the domain
// of validity.
double first_crossing(const DomainSpec& domain, const CVector& origin, const CVector& dir, double s_max) {
  auto f = [&](double s) { return domain.rho(origin + s * dir); };
  auto valid = [&](double s) {
    const CVector z = origin + s * dir;
    if (!domain.defining.neighborhood().contains(z)) return false;
    try {
      (void)domain.rho(z);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  const double f0 = f(0.0);
  if (f0 >= 0) return f0 == 0.0 ? 0.0 : -1.0;
  const double slope = 2.0 * domain.defining.holomorphic_gradient(origin).norm() * dir.norm();
  double s = std::clamp(slope > 0 ? 0.5 * -f0 / slope : 1e-3, 1e-300, s_max);
  double lo = 0.0;
  while (true) {
    if (!valid(s)) return -1.0;
    if (f(s) >= 0) break;
    lo = s;
    if (s >= s_max) return -1.0;
    s = std::min(2.0 * s, s_max);
  }
  double hi = s;
  if (f(hi) == 0.0) return hi;
  std::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      f, lo, hi, [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(std::abs(a), std::abs(b)); },
      iters);
  // Prefer the endpoint with smaller |rho|.
  return std::abs(f(bracket.first)) <= std::abs(f(bracket.second)) ? bracket.first : bracket.second;
}

}  // namespace

bool Neighborhood::contains(const CVector& z) const {
  if (!std::isfinite(radius)) return true;
  return (z - center).norm() < radius;
}

QuadraticForm QuadraticForm::zero(int dim) {
  return QuadraticForm{0.0, CVector::Zero(dim), COperator::Zero(dim, dim), COperator::Zero(dim, dim),
                       CVector::Zero(dim)};
}

double QuadraticForm::value(const CVector& z) const {
  const CVector y = z - center;
  return constant + 2.0 * (linear.transpose() * y).value().real() + y.dot(hermitian * y).real() +
         real_bilinear_trans(y, symmetric, y);
}

CVector QuadraticForm::holomorphic_gradient(const CVector& z) const {
  const CVector y = z - center;
  return linear + hermitian.transpose() * y.conjugate() + symmetric * y;
}

double QuadraticForm::hessian(const CVector& v, const CVector& w) const {
  return 2.0 * v.dot(hermitian * w).real() + 2.0 * real_bilinear_trans(v, symmetric, w);
}

DefiningFunction::DefiningFunction(int dim, Value value, Gradient gradient, Hessian hessian, Neighborhood U,
                                   bool finite_difference)
    : dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      U_(std::move(U)),
      finite_difference_(finite_difference) {
  if (U_.center.size() == 0) U_.center = CVector::Zero(dim_);
}

DefiningFunction DefiningFunction::quadratic(const QuadraticForm& form, Neighborhood U) {
  const int dim = static_cast<int>(form.linear.size());
  QuadraticForm q = form;
  q.center = zero_if_empty(q.center, dim);
  q.hermitian = (0.5 * (q.hermitian + q.hermitian.adjoint())).eval();
  q.symmetric = (0.5 * (q.symmetric + q.symmetric.transpose())).eval();
  DefiningFunction f(
      dim, [q](const CVector& z) { return q.value(z); },
      [q](const CVector& z) { return q.holomorphic_gradient(z); },
      [q](const CVector&, const CVector& v, const CVector& w) { return q.hessian(v, w); }, std::move(U));
  f.quadratic_ = q;
  return f;
}

DefiningFunction DefiningFunction::from_value(int dim, Value value, Neighborhood U, double step) {
  // Richardson-extrapolated central difference along direction e.
  auto directional = [value, step](const CVector& z, const CVector& e) {
    auto central = [&](double h) { return (value(z + h * e) - value(z - h * e)) / (2.0 * h); };
    return (4.0 * central(0.5 * step) - central(step)) / 3.0;
  };
  Gradient gradient = [dim, directional](const CVector& z) {
    CVector d(dim);
    for (int m = 0; m < dim; ++m) {
      CVector e = CVector::Zero(dim);
      e(m) = 1.0;
      const double dx = directional(z, e);
      e(m) = kI;
      const double dy = directional(z, e);
      d(m) = 0.5 * Complex(dx, -dy);
    }
    return d;
  };
  // Second differences lose two digits per decade of step, so use a coarser one.
  const double h2 = 10.0 * step;
  Hessian hessian = [value, h2](const CVector& z, const CVector& v, const CVector& w) {
    auto second = [&](double h) {
      return (value(z + h * v + h * w) - value(z + h * v - h * w) - value(z - h * v + h * w) +
              value(z - h * v - h * w)) /
             (4.0 * h * h);
    };
    return (4.0 * second(0.5 * h2) - second(h2)) / 3.0;
  };
  return DefiningFunction(dim, std::move(value), std::move(gradient), std::move(hessian), std::move(U), true);
}

DefiningFunction DefiningFunction::with_gradient(int dim, Value value, Gradient gradient, Neighborhood U,
                                                 double step) {
  Hessian hessian = [gradient, step](const CVector& z, const CVector& v, const CVector& w) {
    auto dr = [&](const CVector& x) { return 2.0 * (gradient(x).transpose() * v).value().real(); };
    return (dr(z + step * w) - dr(z - step * w)) / (2.0 * step);
  };
  return DefiningFunction(dim, std::move(value), std::move(gradient), std::move(hessian), std::move(U), true);
}

double DefiningFunction::differential(const CVector& z, const CVector& v) const {
  return 2.0 * (gradient_(z).transpose() * v).value().real();
}

const char* to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Ball: return "ball";
    case DomainKind::Ellipsoid: return "ellipsoid";
    case DomainKind::Siegel: return "siegel";
    case DomainKind::PerturbedBall: return "perturbed-ball";
    case DomainKind::Quadratic: return "quadratic";
    case DomainKind::Transported: return "transported";
    case DomainKind::Custom: return "custom";
  }
  return "unknown";
}

bool DomainSpec::contains(const CVector& z) const {
  if (!defining.neighborhood().contains(z)) return false;
  try {
    return defining.value(z) < 0.0;
  } catch (const Error&) {
    return false;
  }
}

DomainSpec make_ball(int dim, double radius, std::optional<CVector> center) {
  if (dim < 1 || !(radius > 0)) throw Error(ErrorKind::DegenerateInput, "ball needs dim >= 1 and radius > 0");
  const CVector c = center ? *center : CVector::Zero(dim);
  QuadraticForm q = QuadraticForm::zero(dim);
  q.constant = -radius * radius;
  q.hermitian = COperator::Identity(dim, dim);
  q.center = c;
  const bool unit = radius == 1.0 && c.isZero(0.0);
  HoloMap to_ball = HoloMap::affine(COperator::Identity(dim, dim) / radius, -c / radius, MapKind::Affine,
                                    unit ? "identity" : "ball-normalize");
  return DomainSpec{DomainKind::Ball,
                    "ball",
                    dim,
                    DefiningFunction::quadratic(q),
                    c,
                    EuclideanBall{c, radius},
                    to_ball,
                    RayOrientation::PlusE1};
}

DomainSpec make_ellipsoid(int dim, std::vector<double> weights) {
  if (dim < 1) throw Error(ErrorKind::DegenerateInput, "ellipsoid needs dim >= 1");
  weights.resize(static_cast<std::size_t>(dim), 1.0);
  QuadraticForm q = QuadraticForm::zero(dim);
  q.constant = -1.0;
  double wmin = weights.front();
  for (int m = 0; m < dim; ++m) {
    if (!(weights[m] > 0)) throw Error(ErrorKind::DegenerateInput, "ellipsoid weights must be positive");
    q.hermitian(m, m) = weights[m];
    wmin = std::min(wmin, weights[m]);
  }
  return DomainSpec{DomainKind::Ellipsoid,
                    "ellipsoid",
                    dim,
                    DefiningFunction::quadratic(q),
                    CVector::Zero(dim),
                    EuclideanBall{CVector::Zero(dim), 1.0 / std::sqrt(wmin)},
                    std::nullopt,
                    RayOrientation::PlusE1};
}

DomainSpec make_siegel(int dim) {
  if (dim < 1) throw Error(ErrorKind::DegenerateInput, "siegel needs dim >= 1");
  QuadraticForm q = QuadraticForm::zero(dim);
  q.linear(0) = -0.5;
  q.hermitian = COperator::Identity(dim, dim);
  q.hermitian(0, 0) = 0.0;
  return DomainSpec{DomainKind::Siegel,
                    "siegel",
                    dim,
                    DefiningFunction::quadratic(q),
                    basis_vector(dim, 1),
                    std::nullopt,
                    cayley(dim).psi,
                    RayOrientation::MinusE1};
}

DomainSpec make_perturbed_ball(int dim, double kappa) {
  if (dim < 1 || !(std::abs(kappa) < 1.0))
    throw Error(ErrorKind::DegenerateInput, "perturbed ball needs |kappa| < 1");
  QuadraticForm q = QuadraticForm::zero(dim);
  q.constant = -1.0;
  q.hermitian = COperator::Identity(dim, dim);
  q.symmetric = kappa * COperator::Identity(dim, dim);
  return DomainSpec{DomainKind::PerturbedBall,
                    "perturbed-ball",
                    dim,
                    DefiningFunction::quadratic(q),
                    CVector::Zero(dim),
                    EuclideanBall{CVector::Zero(dim), 1.0 / std::sqrt(1.0 - std::abs(kappa))},
                    std::nullopt,
                    RayOrientation::PlusE1};
}

DomainSpec make_quadratic_domain(const QuadraticForm& form, std::string tag, CVector basepoint,
                                 std::optional<EuclideanBall> enclosing, Neighborhood U) {
  const int dim = static_cast<int>(form.linear.size());
  DomainSpec d{DomainKind::Quadratic,
               std::move(tag),
               dim,
               DefiningFunction::quadratic(form, std::move(U)),
               std::move(basepoint),
               std::move(enclosing),
               std::nullopt,
               RayOrientation::PlusE1};
  if (!(d.rho(d.basepoint) < 0)) throw Error(ErrorKind::DegenerateInput, "basepoint must be interior");
  return d;
}

DomainSpec make_transported(const DomainSpec& base, const HoloMap& map, double scale, std::string tag,
                            std::optional<EuclideanBall> enclosing, std::optional<RayOrientation> orientation,
                            Neighborhood U) {
  if (!map.invertible()) throw Error(ErrorKind::DegenerateInput, "transport map needs an inverse");
  if (!(scale > 0)) throw Error(ErrorKind::DegenerateInput, "transport scale must be positive");
  const HoloMap inv = map.inverse();
  const DefiningFunction rho = base.defining;
  DefiningFunction::Value value = [rho, inv, scale](const CVector& z) { return scale * rho(inv(z)); };
  DefiningFunction::Gradient gradient = [rho, inv, scale](const CVector& z) -> CVector {
    const CVector y = inv(z);
    return scale * (inv.jacobian(z).transpose() * rho.holomorphic_gradient(y));
  };
  DefiningFunction f = [&] {
    if (map.kind() == MapKind::Affine || map.kind() == MapKind::Dilation) {
      DefiningFunction::Hessian hessian = [rho, inv, scale](const CVector& z, const CVector& v, const CVector& w) {
        const COperator j = inv.jacobian(z);
        return scale * rho.hessian(inv(z), j * v, j * w);
      };
      return DefiningFunction(base.dimension, value, gradient, hessian, U);
    }
    return DefiningFunction::with_gradient(base.dimension, value, gradient, U);
  }();
  std::optional<HoloMap> to_ball;
  if (base.to_unit_ball) to_ball = compose(*base.to_unit_ball, inv);
  return DomainSpec{DomainKind::Transported,
                    std::move(tag),
                    base.dimension,
                    std::move(f),
                    map(base.basepoint),
                    std::move(enclosing),
                    std::move(to_ball),
                    orientation.value_or(base.orientation)};
}

DomainSpec make_custom(int dim, DefiningFunction::Value rho, CVector basepoint, Neighborhood U, std::string tag) {
  DomainSpec d{DomainKind::Custom,
               std::move(tag),
               dim,
               DefiningFunction::from_value(dim, std::move(rho), std::move(U)),
               std::move(basepoint),
               std::nullopt,
               std::nullopt,
               RayOrientation::PlusE1};
  if (!(d.rho(d.basepoint) < 0)) throw Error(ErrorKind::DegenerateInput, "basepoint must be interior");
  return d;
}

double levi_form(const DomainSpec& domain, const CVector& p, const CVector& v) {
  if (!domain.defining.neighborhood().contains(p))
    throw Error(ErrorKind::OutsideNeighborhood, "levi_form point outside U");
  const CVector iv = kI * v;
  return 0.25 * (domain.defining.hessian(p, v, v) + domain.defining.hessian(p, iv, iv));
}

ComplexHessian complex_hessian(const DefiningFunction& rho, const CVector& p) {
  if (rho.quadratic_form()) return {rho.quadratic_form()->hermitian, rho.quadratic_form()->symmetric};
  const int n = rho.dimension();
  COperator a(n, n), b(n, n);
  for (int m = 0; m < n; ++m) {
    const CVector em = CVector::Unit(n, m);
    const CVector iem = kI * em;
    for (int k = 0; k < n; ++k) {
      const CVector ek = CVector::Unit(n, k);
      const CVector iek = kI * ek;
      const double h11 = rho.hessian(p, em, ek);
      const double h22 = rho.hessian(p, iem, iek);
      const double h12 = rho.hessian(p, em, iek);
      const double h21 = rho.hessian(p, iem, ek);
      a(m, k) = Complex((h11 + h22) / 4.0, (h21 - h12) / 4.0);
      b(m, k) = Complex((h11 - h22) / 4.0, -(h12 + h21) / 4.0);
    }
  }
  return {0.5 * (a + a.adjoint()), 0.5 * (b + b.transpose())};
}

CVector outer_normal(const DomainSpec& domain, const CVector& p) {
  const CVector d = domain.defining.holomorphic_gradient(p);
  const double nd = d.norm();
  if (!(nd > 1e-6)) throw Error(ErrorKind::NotBoundaryPoint, "vanishing differential at boundary point");
  return d.conjugate() / nd;
}

PseudoconvexityResult is_strongly_pseudoconvex(const DomainSpec& domain, const CVector& p, int samples,
                                               std::uint64_t seed) {
  if (!(std::abs(domain.rho(p)) < 1e-9)) throw Error(ErrorKind::NotBoundaryPoint, "|rho(p)| >= 1e-9");
  const CVector d = domain.defining.holomorphic_gradient(p);
  const double nd2 = d.squaredNorm();
  if (!(nd2 > 1e-12)) throw Error(ErrorKind::NotBoundaryPoint, "vanishing differential");
  const int n = domain.dimension;
  PseudoconvexityResult out;
  if (n == 1) {
    // Trivial complex tangent space.
    out.strongly = true;
    out.c_estimate = out.c_exact = std::numeric_limits<double>::infinity();
    return out;
  }
  const CVector dbar = d.conjugate();
  auto project = [&](const CVector& g) -> CVector {
    return g - dbar * ((d.transpose() * g).value() / nd2);
  };
  std::vector<double> values(static_cast<std::size_t>(samples));
  parallel_for(values.size(), 1, [&](std::size_t i) {
    Stream rng(seed, streams::kLevi, i);
    CVector v = project(random_gaussian_vector(rng, n));
    v /= v.norm();
    values[i] = levi_form(domain, p, v);
  });
  out.c_estimate = values.empty() ? std::numeric_limits<double>::infinity()
                                  : *std::min_element(values.begin(), values.end());
  // Exact restriction to the tangent space through an orthonormal basis.
  const COperator q = unitary_with_first_column(dbar / std::sqrt(nd2));
  const COperator a = complex_hessian(domain.defining, p).hermitian;
  const COperator t = q.rightCols(n - 1);
  out.c_exact = min_hermitian_eigenvalue(t.adjoint() * a * t);
  out.strongly = out.c_estimate > 1e-6;
  return out;
}

RayHit ray_boundary_point(const DomainSpec& domain, const CVector& q, std::optional<RayOrientation> orientation) {
  if (!(domain.rho(q) < 0)) throw Error(ErrorKind::DegenerateInput, "ray origin must be interior");
  const RayOrientation o = orientation.value_or(domain.orientation);
  const CVector dir = basis_vector(domain.dimension, 1) * (o == RayOrientation::PlusE1 ? 1.0 : -1.0);
  const double s = first_crossing(domain, q, dir, 1e8);
  if (!(s > 0)) throw Error(ErrorKind::NoBoundaryHit, "ray leaves U before crossing the boundary");
  CVector pb = q;
  pb(0) += dir(0) * s;
  if (!(std::abs(domain.rho(pb)) < 1e-12))
    throw Error(ErrorKind::NoBoundaryHit, "boundary crossing could not be resolved to 1e-12");
  return {pb, s};
}

// ---------------------------------------------------------------------------
// Normalization

double NormalizedDomain::psi2(double t, const CVector& zprime) const {
  const int n = static_cast<int>(levi_block.rows());
  CVector u = CVector::Zero(n);
  u(0) = Complex(0.0, t);
  if (n > 1) {
    const COperator mp = tangent_scaling.bottomRightCorner(n - 1, n - 1);
    u.tail(n - 1) = mp.llt().solve(zprime.tail(n - 1));
  }
  return u.dot(levi_block * u).real();
}

Eigen::MatrixXd NormalizedDomain::psi2_hessian() const {
  const int n = static_cast<int>(levi_block.rows());
  const int dim = 2 * n - 1;
  // Real coordinates: t, then (Re, Im) of each tangential entry.
  auto embed = [n](const Eigen::VectorXd& x, double& t, CVector& zp) {
    t = x(0);
    zp = CVector::Zero(n);
    for (int k = 1; k < n; ++k) zp(k) = Complex(x(2 * k - 1), x(2 * k));
  };
  auto q = [&](const Eigen::VectorXd& x) {
    double t;
    CVector zp;
    embed(x, t, zp);
    return psi2(t, zp);
  };
  Eigen::MatrixXd h(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      const Eigen::VectorXd ea = Eigen::VectorXd::Unit(dim, a), eb = Eigen::VectorXd::Unit(dim, b);
      h(a, b) = q(ea + eb) - q(ea) - q(eb);
    }
  return 0.5 * (h + h.transpose());
}

double NormalizedDomain::psi(double t, const CVector& zprime) const {
  const int n = static_cast<int>(levi_block.rows());
  CVector z = zprime;
  auto f = [&](double s) {
    z(0) = Complex(s, t);
    return local.rho(z);
  };
  const double s0 = psi2(t, zprime);
  double width = 1e-3 * (std::abs(s0) + t * t + prime_norm_sq(zprime)) + 1e-15;
  double lo = s0 - width, hi = s0 + width;
  // rho_U decreases in Re Z1 near the origin: f(lo) > 0 > f(hi).
  for (int k = 0; k < 80 && f(lo) <= 0; ++k) lo -= (width *= 2.0);
  width = 1e-3 * (std::abs(s0) + t * t + prime_norm_sq(zprime)) + 1e-15;
  for (int k = 0; k < 80 && f(hi) >= 0; ++k) hi += (width *= 2.0);
  const double flo = f(lo), fhi = f(hi);
  if (!(flo > 0 && fhi < 0)) {
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    throw Error(ErrorKind::NonConvergence, "could not bracket the boundary graph");
  }
  (void)n;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi,
      [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max({std::abs(a), std::abs(b), 1e-300}); },
      iters);
  return 0.5 * (r.first + r.second);
}

NormalizedDomain normalize_at(const DomainSpec& domain, const CVector& p, const NormalizeOptions& options) {
  const int n = domain.dimension;
  const PseudoconvexityResult psc = is_strongly_pseudoconvex(domain, p, options.samples, options.seed);
  if (!(psc.c_exact > 1e-6))
    throw Error(ErrorKind::NotStronglyPseudoconvex, "Levi form not positive on the complex tangent space");

  const CVector d = domain.defining.holomorphic_gradient(p);
  const double nd = d.norm();
  const CVector normal = d.conjugate() / nd;
  const COperator q = unitary_with_first_column(-normal);
  const ComplexHessian ch = complex_hessian(domain.defining, p);
  COperator ahat = q.adjoint() * ch.hermitian * q / (2.0 * nd);
  ahat = (0.5 * (ahat + ahat.adjoint())).eval();
  COperator bhat = q.transpose() * ch.symmetric * q / (2.0 * nd);
  bhat = (0.5 * (bhat + bhat.transpose())).eval();

  COperator mhat = COperator::Identity(n, n);
  if (n > 1) mhat.bottomRightCorner(n - 1, n - 1) = hermitian_sqrt(ahat.bottomRightCorner(n - 1, n - 1));
  const COperator mhat_inv = mhat.inverse();

  double chart = options.chart_radius;
  const double bnorm = operator_norm(bhat);
  if (bnorm > 0) chart = std::min(chart, 0.25 / bnorm);
  const Neighborhood& U = domain.defining.neighborhood();
  if (std::isfinite(U.radius)) chart = std::min(chart, U.radius - (p - U.center).norm());
  if (!(chart > 0)) throw Error(ErrorKind::OutsideNeighborhood, "p is not inside U");

  // Maps on displacements delta = z - p, so points near p keep full relative precision.
  const COperator qs = q.adjoint();
  auto shift_forward = [qs, bhat, mhat, chart](const CVector& delta) -> CVector {
    if (!(delta.norm() < chart)) throw Error(ErrorKind::DomainEscape, "point outside dom(G)");
    CVector w = qs * delta;
    w(0) -= (w.transpose() * bhat * w).value();
    return mhat * w;
  };
  auto shift_jac = [qs, bhat, mhat, chart, n](const CVector& delta) -> COperator {
    if (!(delta.norm() < chart)) throw Error(ErrorKind::DomainEscape, "point outside dom(G)");
    const CVector w = qs * delta;
    COperator shear = COperator::Identity(n, n);
    shear.row(0) -= 2.0 * (bhat * w).transpose();
    return mhat * shear * qs;
  };
  auto shift_backward = [q, bhat, mhat_inv, n](const CVector& zz) -> CVector {
    CVector w = mhat_inv * zz;  // w' is final; w(0) still holds Z1
    const Complex z1 = zz(0);
    Complex c = 0.0, e = 0.0;
    if (n > 1) {
      c = (bhat.row(0).tail(n - 1) * w.tail(n - 1)).value();
      e = (w.tail(n - 1).transpose() * bhat.bottomRightCorner(n - 1, n - 1) * w.tail(n - 1)).value();
    }
    const Complex beta = 1.0 - 2.0 * c, gamma = z1 + e, b11 = bhat(0, 0);
    if (std::abs(beta) < 0.25 || std::abs(4.0 * b11 * gamma) > 0.75 * std::norm(beta))
      throw Error(ErrorKind::DomainEscape, "outside the inverse chart of G");
    w(0) = 2.0 * gamma / (beta + std::sqrt(beta * beta - 4.0 * b11 * gamma));
    return q * w;
  };
  const bool affine = bhat.isZero(0.0);
  const HoloMap shift_inv(MapKind::Custom, "G^-1", shift_backward,
                          [shift_backward, shift_jac](const CVector& zz) -> COperator {
                            return shift_jac(shift_backward(zz)).inverse();
                          });
  const HoloMap G_shift =
      HoloMap(affine ? MapKind::Affine : MapKind::Custom, "G", shift_forward, shift_jac).with_inverse(shift_inv);
  const HoloMap translate = HoloMap::affine(COperator::Identity(n, n), -p, MapKind::Affine, "shift");
  const HoloMap G = compose(G_shift, translate);

  // rho_U(Z) = rho(p + delta) / (2 ||d||) with delta = G^{-1}(Z); quadratic
  // defining functions are expanded at p so the constant term cancels exactly.
  const DefiningFunction rho = domain.defining;
  const double scale = 1.0 / (2.0 * nd);
  std::function<double(const CVector&)> rho_shift = [rho, p](const CVector& delta) { return rho(p + delta); };
  if (const auto& form = rho.quadratic_form()) {
    QuadraticForm at_p = *form;
    at_p.constant = 0.0;
    at_p.linear = form->holomorphic_gradient(p);
    at_p.center = CVector::Zero(n);
    rho_shift = [at_p](const CVector& delta) { return at_p.value(delta); };
  }
  DefiningFunction::Value value = [rho_shift, shift_backward, scale](const CVector& zz) {
    return scale * rho_shift(shift_backward(zz));
  };
  DefiningFunction::Gradient gradient = [rho, p, shift_inv, scale](const CVector& zz) -> CVector {
    const CVector z = p + shift_inv(zz);
    return scale * (shift_inv.jacobian(zz).transpose() * rho.holomorphic_gradient(z));
  };
  DefiningFunction local_rho = DefiningFunction::with_gradient(n, value, gradient);

  // Interior basepoint on the inner normal.
  CVector base = CVector::Zero(n);
  double s = 0.25 * chart;
  for (int k = 0; k < 60; ++k, s *= 0.5) {
    base(0) = s;
    try {
      if (local_rho(base) < 0) break;
    } catch (const Error&) {
    }
  }
  DomainSpec local{DomainKind::Custom, "normalized-" + domain.tag, n, local_rho, base, std::nullopt, std::nullopt,
                   RayOrientation::MinusE1};

  NormalizedDomain out{p, G, G_shift, std::move(local), q, ahat, bhat, mhat, nd, chart, 0.0, 0.0};

  // Taylor residual of the boundary graph on a sphere of tangent data.
  const double radius = std::min(options.sample_radius, 0.5 * chart);
  double residual = 0.0;
  for (int i = 0; i < options.samples; ++i) {
    Stream rng(options.seed, streams::kNormalize, static_cast<std::uint64_t>(i));
    CVector x = random_unit_vector(rng, n) * radius;
    const double t = x(0).imag();
    x(0) = 0.0;
    try {
      const double ps = out.psi(t, x);
      const double denom = t * t + x.squaredNorm();
      if (denom > 0) residual = std::max(residual, std::abs(ps - out.psi2(t, x)) / denom);
    } catch (const Error&) {
      // samples leaving the chart carry no information about the graph
    }
  }
  out.taylor_residual = residual;

  const double h = 1e-5;
  double grad = 0.0;
  const CVector zero = CVector::Zero(n);
  grad = std::max(grad, std::abs(out.psi(h, zero) - out.psi(-h, zero)) / (2 * h));
  for (int k = 1; k < n; ++k)
    for (Complex dir : {Complex(1.0, 0.0), kI}) {
      CVector e = CVector::Zero(n);
      e(k) = dir * h;
      grad = std::max(grad, std::abs(out.psi(0.0, e) - out.psi(0.0, -e)) / (2 * h));
    }
  out.psi_gradient_at_origin = grad;
  return out;
}

// ---------------------------------------------------------------------------
// Sampling and peak functions

std::vector<CVector> sample_closure(const DomainSpec& domain, int count, std::uint64_t seed) {
  if (!domain.enclosing) throw Error(ErrorKind::NoEnclosingBall, "closure sampling needs an enclosing ball");
  const EuclideanBall& eb = *domain.enclosing;
  std::vector<CVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; out.size() < static_cast<std::size_t>(count) && i < 100ull * count + 100; ++i) {
    Stream rng(seed, streams::kPeak, i);
    const CVector z = eb.center + random_in_ball(rng, domain.dimension, eb.radius);
    if (domain.rho(z) <= 0) out.push_back(z);
  }
  return out;
}

std::vector<CVector> sample_boundary(const DomainSpec& domain, int count, std::uint64_t seed) {
  std::vector<CVector> out;
  const double s_max = domain.enclosing ? 4.0 * domain.enclosing->radius + 1.0 : 1e4;
  for (std::uint64_t i = 0; out.size() < static_cast<std::size_t>(count) && i < 20ull * count + 20; ++i) {
    Stream rng(seed, streams::kPeak, (1ull << 40) + i);
    const CVector dir = random_unit_vector(rng, domain.dimension);
    const double s = first_crossing(domain, domain.basepoint, dir, s_max);
    if (s > 0) out.push_back(domain.basepoint + s * dir);
  }
  return out;
}

PeakFunction linear_support_peak(const DomainSpec& domain, const CVector& p) {
  const CVector n = outer_normal(domain, p);
  return {[p, n](const CVector& z) { return inner(z - p, n).real(); }, p, "linear-support"};
}

Report peak_verify(const DomainSpec& domain, const CVector& p, const PeakFunction& h, int m_max,
                   const PeakOptions& options) {
  Report report("peak_verify");
  const int n = domain.dimension;
  std::vector<CVector> pts = sample_closure(domain, options.samples / 2, options.seed);
  for (const CVector& b : sample_boundary(domain, options.samples / 8, options.seed)) pts.push_back(b);
  // Concentrate samples near p so that small super-level sets are resolved.
  for (int i = 0; i < options.samples / 2; ++i) {
    Stream rng(options.seed, streams::kPeak, (2ull << 40) + static_cast<std::uint64_t>(i));
    const double radius = std::pow(10.0, rng.uniform(-4.0, 0.5));
    const CVector z = p + random_in_ball(rng, n, radius);
    if (domain.rho(z) <= 0) pts.push_back(z);
  }

  const double hp = h.h(p);
  report.add("h_at_peak", hp, 1e-12 - std::abs(hp));

  double sup_off = -std::numeric_limits<double>::infinity();
  for (const CVector& z : pts)
    if ((z - p).norm() >= options.delta) sup_off = std::max(sup_off, h.h(z));
  // Strict negativity is required away from p.
  report.add("sup_h_off_delta", sup_off, -sup_off - 1e-12);

  std::vector<double> diam(static_cast<std::size_t>(m_max) + 1, 0.0);
  for (int m = 1; m <= m_max; ++m) {
    double far = 0.0;
    for (const CVector& z : pts)
      if (h.h(z) > -1.0 / m) far = std::max(far, (z - p).norm());
    diam[static_cast<std::size_t>(m)] = 2.0 * far;
  }
  for (int m = 2; m <= m_max; ++m)
    report.add("diam_V_" + std::to_string(m), diam[m], diam[m - 1] - diam[m] + 1e-12);
  if (m_max >= 2) report.add("diam_shrinks", diam[m_max], diam[1] - diam[m_max] - 1e-12);
  report.note("diameters", std::vector<double>(diam.begin() + 1, diam.end()));
  report.note("samples", pts.size());
  return report;
}

}  // namespace kobalab
