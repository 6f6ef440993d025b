#pragma once

// Kobayashi metric and distance: closed forms on the ball, analytic-disc upper
// bounds, enclosing-ball lower bounds and the localization inequalities.

#include <cstdint>
#include <optional>
#include <vector>

#include "kobalab/domains.hpp"
#include "kobalab/report.hpp"

namespace kobalab {

/// u(t) = (1/2) ln((1+t)/(1-t)), the disc distance from 0 to t. Domain [0, 1).
double poincare_u(double t);
/// tanh, the inverse of u on [0, inf).
double poincare_u_inv(double s);

/// Kobayashi metric of the unit ball.
double ball_metric(const CVector& x, const CVector& v);
/// Kobayashi distance of the unit ball, atanh ||phi_q(x)||.
double ball_distance(const CVector& x, const CVector& q);
/// Same data for the Euclidean ball B(c, R).
double ball_metric(const EuclideanBall& ball, const CVector& x, const CVector& v);
double ball_distance(const EuclideanBall& ball, const CVector& x, const CVector& q);

/// f(zeta) = sum_k c_k eta^k with eta = (zeta + a)/(1 + conj(a) zeta).
/// Admissible discs map the closed disc of radius `radius` into the domain.
struct AnalyticDisc {
  std::vector<CVector> coefficients;
  Complex mobius_center = 0.0;
  double radius = 1.0 - 1e-9;
  bool admissible = false;

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  CVector operator()(Complex zeta) const;
  /// f'(0) with respect to zeta.
  CVector derivative_at_zero() const;
  /// rho < 0 on `samples` points of the circle |zeta| = radius.
  bool check_admissible(const DomainSpec& domain, int samples = 64) const;
};

struct MetricEstimate {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<AnalyticDisc> witness;
  int evaluations = 0;
};

struct DiscSearchOptions {
  int degree = 4;
  /// Maximum number of disc evaluations.
  int budget = 2000;
  int boundary_samples = 64;
  /// Local minima of the crossing profile refined by Brent's method.
  int refine = 3;
};

/// Upper bound ||v|| / max f'(0) over admissible discs through x tangent to v.
MetricEstimate metric_upper(const DomainSpec& domain, const CVector& x, const CVector& v,
                            const DiscSearchOptions& options = {});
inline MetricEstimate metric_upper(const DomainSpec& domain, const CVector& x, const CVector& v, int degree,
                                   int budget) {
  DiscSearchOptions o;
  o.degree = degree;
  o.budget = budget;
  return metric_upper(domain, x, v, o);
}

/// Exact metric of a ball containing the domain; never exceeds k_domain.
double metric_lower(const DomainSpec& domain, const CVector& x, const CVector& v);
double metric_lower(const EuclideanBall& enclosing, const CVector& x, const CVector& v);

/// Closed forms for domains that carry a biholomorphism onto the unit ball.
std::optional<double> metric_exact(const DomainSpec& domain, const CVector& x, const CVector& v);
std::optional<double> distance_exact(const DomainSpec& domain, const CVector& x, const CVector& q);

/// Lower bound from metric_lower (or the exact value), upper from metric_upper.
MetricEstimate metric_estimate(const DomainSpec& domain, const CVector& x, const CVector& v,
                               const DiscSearchOptions& options = {});

struct DistanceOptions {
  int segments = 4;
  /// Disc search used for the integrand when no closed form is known.
  DiscSearchOptions integrand{1, 200, 64, 1};
  int sweeps = 3;
};

/// Path-integral upper bound over piecewise-linear paths (32-point
/// Gauss-Legendre per segment) and an enclosing-ball or exact lower bound.
MetricEstimate distance(const DomainSpec& domain, const CVector& x, const CVector& q,
                        const DistanceOptions& options = {});
inline MetricEstimate distance(const DomainSpec& domain, const CVector& x, const CVector& q, int segments) {
  DistanceOptions o;
  o.segments = segments;
  return distance(domain, x, q, o);
}

/// distance(x, q).upper < r.
bool kobayashi_ball_membership(const DomainSpec& domain, const CVector& q, double r, const CVector& x);

/// Points of B^K(q, r), exact through the map to the unit ball. Even indices
/// are uniform in the ball, odd indices lie just inside its boundary sphere.
std::vector<CVector> sample_kobayashi_ball(const DomainSpec& domain, const CVector& q, double r, int count,
                                           std::uint64_t seed);

struct LocalizationOptions {
  int directions = 16;
  int inclusion_samples = 256;
  std::uint64_t seed = 0;
};

/// Checks d_sub(x, q) <= a / tanh(b - a) and k_sub(x, v) <= k(x, v) / tanh(b - a)
/// for a = d(x, q), given that `subdomain` contains B^K(q, b).
Report localization_check(const DomainSpec& domain, const DomainSpec& subdomain, const CVector& q, const CVector& x,
                          double b, const LocalizationOptions& options = {});

}  // namespace kobalab
