#include "kobalab/kobayashi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "kobalab/automorphisms.hpp"
#include "kobalab/rng.hpp"

namespace kobalab {

double poincare_u(double t) {
  if (!(t >= 0.0 && t < 1.0)) throw Error(ErrorKind::OutOfRange, "u(t) needs t in [0, 1)");
  return std::atanh(t);
}

double poincare_u_inv(double s) {
  if (!(s >= 0.0)) throw Error(ErrorKind::OutOfRange, "u^{-1}(s) needs s >= 0");
  return std::tanh(s);
}

double ball_metric(const CVector& x, const CVector& v) {
  const double gap = 1.0 - x.squaredNorm();
  if (!(gap > 0)) throw Error(ErrorKind::OutOfRange, "point outside the unit ball");
  return std::sqrt(v.squaredNorm() / gap + std::norm(inner(x, v)) / (gap * gap));
}

double ball_distance(const CVector& x, const CVector& q) {
  const double gx = 1.0 - x.squaredNorm(), gq = 1.0 - q.squaredNorm();
  if (!(gx > 0 && gq > 0)) throw Error(ErrorKind::OutOfRange, "point outside the unit ball");
  // 1 - |phi_q(x)|^2 = (1 - |q|^2)(1 - |x|^2) / |1 - <x, q>|^2
  const double ratio = std::min(1.0, gq * gx / std::norm(1.0 - inner(x, q)));
  const double t = std::sqrt(std::max(0.0, 1.0 - ratio));
  return std::log1p(t) - 0.5 * std::log(ratio);
}

double ball_metric(const EuclideanBall& ball, const CVector& x, const CVector& v) {
  return ball_metric((x - ball.center) / ball.radius, v / ball.radius);
}

double ball_distance(const EuclideanBall& ball, const CVector& x, const CVector& q) {
  return ball_distance((x - ball.center) / ball.radius, (q - ball.center) / ball.radius);
}

// ---------------------------------------------------------------------------
// Analytic discs

CVector AnalyticDisc::operator()(Complex zeta) const {
  const Complex eta = (zeta + mobius_center) / (1.0 + std::conj(mobius_center) * zeta);
  CVector f = coefficients.back();
  for (int k = degree() - 1; k >= 0; --k) f = (f * eta + coefficients[static_cast<std::size_t>(k)]).eval();
  return f;
}

CVector AnalyticDisc::derivative_at_zero() const {
  const Complex a = mobius_center;
  CVector d = CVector::Zero(coefficients.front().size());
  Complex apow = 1.0;
  for (int k = 1; k <= degree(); ++k) {
    d += static_cast<double>(k) * apow * coefficients[static_cast<std::size_t>(k)];
    apow *= a;
  }
  return d * (1.0 - std::norm(a));
}

bool AnalyticDisc::check_admissible(const DomainSpec& domain, int samples) const {
  for (int i = 0; i < samples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / samples;
    if (!domain.contains((*this)(std::polar(radius, th)))) return false;
  }
  return true;
}

namespace {

constexpr double kDiscRadius = 1.0 - 1e-9;

// Discs through x tangent to v: f = F0 + lambda F1 in the Mobius variable eta.
class DiscProblem {
 public:
  DiscProblem(const DomainSpec& domain, const CVector& x, const CVector& v, const DiscSearchOptions& o)
      : domain_(domain), x_(x), vhat_(v / v.norm()), n_(static_cast<int>(x.size())), degree_(std::max(1, o.degree)),
        samples_(std::max(8, o.boundary_samples)) {
    const auto& q = domain.defining.quadratic_form();
    if (q) {
      quad_ = *q;
      diagonal_ = q->hermitian.isDiagonal(0.0) && q->symmetric.isDiagonal(0.0);
    }
  }

  int size() const { return 2 + 2 * n_ * (degree_ - 1); }

  static Complex center(const std::vector<double>& p) {
    const Complex s(p[0], p[1]);
    const double m = std::abs(s);
    return m == 0.0 ? Complex(0.0) : s * (std::tanh(m) / m);
  }

  Complex coeff(const std::vector<double>& p, int k, int m) const {
    const std::size_t idx = 2 + 2 * (static_cast<std::size_t>(k - 2) * n_ + m);
    return {p[idx], p[idx + 1]};
  }

  void pieces(const std::vector<double>& p, Complex a, Complex zeta, CVector& f0, CVector& f1) const {
    const Complex eta = (zeta + a) / (1.0 + std::conj(a) * zeta);
    f1 = vhat_ * ((eta - a) / (1.0 - std::norm(a)));
    f0 = x_;
    if (degree_ < 2) return;
    Complex ek = eta, ak = a, akm1 = 1.0;
    for (int k = 2; k <= degree_; ++k) {
      akm1 = ak;
      ek *= eta;
      ak *= a;
      const Complex w = ek - ak - static_cast<double>(k) * akm1 * (eta - a);
      for (int m = 0; m < n_; ++m) f0(m) += coeff(p, k, m) * w;
    }
  }

  // Largest lambda with f0 + s f1 inside for s in [0, lambda).
  double crossing(const CVector& f0, const CVector& f1) const {
    if (quad_) {
      double alpha, beta, gamma;
      quadratic_pieces(f0, f1, alpha, beta, gamma);
      if (!(alpha < 0)) return 0.0;
      if (gamma == 0.0) return beta > 0 ? -alpha / beta : kInf;
      const double disc = beta * beta - 4.0 * alpha * gamma;
      if (disc < 0) return kInf;
      const double den = beta + std::sqrt(disc);
      return den > 0 ? -2.0 * alpha / den : kInf;
    }
    return generic_crossing(f0, f1);
  }

  double lambda_at(const std::vector<double>& p, Complex a, double theta) const {
    CVector f0, f1;
    pieces(p, a, std::polar(kDiscRadius, theta), f0, f1);
    return crossing(f0, f1);
  }

  // min over the boundary circle of the crossing parameter.
  double objective(const std::vector<double>& p, int refine, int bits, int* evals) const {
    if (evals) ++*evals;
    const Complex a = center(p);
    std::vector<double> lam(static_cast<std::size_t>(samples_));
    const double h = 2.0 * std::numbers::pi / samples_;
    for (int i = 0; i < samples_; ++i) {
      lam[static_cast<std::size_t>(i)] = lambda_at(p, a, i * h);
      if (lam[static_cast<std::size_t>(i)] <= 0.0) return 0.0;
    }
    double best = *std::min_element(lam.begin(), lam.end());
    if (refine <= 0 || !std::isfinite(best)) return best;
    std::vector<std::pair<double, int>> minima;
    for (int i = 0; i < samples_; ++i) {
      const double l = lam[static_cast<std::size_t>(i)];
      if (l <= lam[static_cast<std::size_t>((i + samples_ - 1) % samples_)] &&
          l <= lam[static_cast<std::size_t>((i + 1) % samples_)])
        minima.emplace_back(l, i);
    }
    std::sort(minima.begin(), minima.end());
    for (int r = 0; r < std::min<int>(refine, static_cast<int>(minima.size())); ++r) {
      const double mid = minima[static_cast<std::size_t>(r)].second * h;
      std::uintmax_t iters = 100;
      const auto res = boost::math::tools::brent_find_minima(
          [&](double th) { return lambda_at(p, a, th); }, mid - h, mid + h, bits, iters);
      best = std::min(best, res.second);
    }
    return best;
  }

  AnalyticDisc witness(const std::vector<double>& p, double lambda) const {
    const Complex a = center(p);
    AnalyticDisc disc;
    disc.mobius_center = a;
    disc.radius = kDiscRadius;
    disc.coefficients.assign(static_cast<std::size_t>(degree_) + 1, CVector::Zero(n_));
    for (int k = 2; k <= degree_; ++k)
      for (int m = 0; m < n_; ++m) disc.coefficients[static_cast<std::size_t>(k)](m) = coeff(p, k, m);
    CVector c1 = vhat_ * (lambda / (1.0 - std::norm(a)));
    Complex apow = 1.0;  // a^{k-1}
    for (int k = 2; k <= degree_; ++k) {
      apow *= a;
      c1 -= static_cast<double>(k) * apow * disc.coefficients[static_cast<std::size_t>(k)];
    }
    disc.coefficients[1] = c1;
    CVector c0 = x_;
    apow = 1.0;
    for (int k = 1; k <= degree_; ++k) {
      apow *= a;
      c0 -= apow * disc.coefficients[static_cast<std::size_t>(k)];
    }
    disc.coefficients[0] = c0;
    return disc;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void quadratic_pieces(const CVector& f0, const CVector& f1, double& alpha, double& beta, double& gamma) const {
    const QuadraticForm& q = *quad_;
    if (diagonal_) {
      alpha = q.constant;
      beta = 0.0;
      gamma = 0.0;
      for (int m = 0; m < n_; ++m) {
        const Complex y = f0(m) - q.center(m), w = f1(m);
        const double am = q.hermitian(m, m).real();
        const Complex bm = q.symmetric(m, m), lm = q.linear(m);
        alpha += 2.0 * (lm * y).real() + am * std::norm(y) + (bm * y * y).real();
        beta += 2.0 * ((lm + am * std::conj(y) + bm * y) * w).real();
        gamma += am * std::norm(w) + (bm * w * w).real();
      }
      return;
    }
    alpha = q.value(f0);
    beta = 2.0 * (q.holomorphic_gradient(f0).transpose() * f1).value().real();
    gamma = f1.dot(q.hermitian * f1).real() + (f1.transpose() * q.symmetric * f1).value().real();
  }

  double generic_crossing(const CVector& f0, const CVector& f1) const {
    auto inside = [&](double s, double& value) {
      const CVector z = f0 + s * f1;
      if (!domain_.defining.neighborhood().contains(z)) return false;
      try {
        value = domain_.rho(z);
      } catch (const Error&) {
        return false;
      }
      return true;
    };
    double v0;
    if (!inside(0.0, v0) || !(v0 < 0)) return 0.0;
    double lo = 0.0, hi = std::max(1e-12, 1e-3 * f0.norm() / std::max(f1.norm(), 1e-300));
    double vh = 0.0;
    for (int k = 0;; ++k) {
      if (k > 200) return kInf;
      if (!inside(hi, vh)) break;  // treat invalid points as outside and bisect
      if (vh >= 0) break;
      lo = hi;
      hi *= 2.0;
    }
    // Bisection is robust to oracle failures inside the bracket.
    for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      double vm;
      if (inside(mid, vm) && vm < 0)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  const DomainSpec& domain_;
  CVector x_, vhat_;
  int n_, degree_, samples_;
  std::optional<QuadraticForm> quad_;
  bool diagonal_ = false;
};

// Coordinate pattern search maximizing `objective`, with per-coordinate steps
// that expand on success and shrink on failure.
template <class Objective>
double pattern_search(std::vector<double>& p, double best, const std::vector<std::size_t>& coords,
                      std::vector<double>& step, const std::vector<double>& min_step, int budget, int& evals,
                      Objective&& objective, bool diagonals) {
  while (evals < budget) {
    bool any_active = false;
    for (std::size_t c : coords) {
      if (step[c] < min_step[c]) continue;
      any_active = true;
      bool moved = false;
      for (double sign : {1.0, -1.0}) {
        std::vector<double> trial = p;
        trial[c] += sign * step[c];
        const double val = objective(trial);
        if (val > best) {
          p = std::move(trial);
          best = val;
          moved = true;
          break;
        }
        if (evals >= budget) return best;
      }
      step[c] = moved ? std::min(2.0 * step[c], 1.0) : 0.5 * step[c];
    }
    if (diagonals && coords.size() == 2 && evals < budget) {
      const std::size_t c0 = coords[0], c1 = coords[1];
      for (double s0 : {1.0, -1.0})
        for (double s1 : {1.0, -1.0}) {
          std::vector<double> trial = p;
          trial[c0] += s0 * step[c0];
          trial[c1] += s1 * step[c1];
          const double val = objective(trial);
          if (val > best) {
            p = std::move(trial);
            best = val;
          }
        }
    }
    if (!any_active) break;
  }
  return best;
}

}  // namespace

MetricEstimate metric_upper(const DomainSpec& domain, const CVector& x, const CVector& v,
                            const DiscSearchOptions& options) {
  if (!(v.norm() > 0)) throw Error(ErrorKind::DegenerateInput, "metric needs v != 0");
  if (!domain.contains(x)) throw Error(ErrorKind::NoAdmissibleDisc, "base point is not interior");
  DiscProblem prob(domain, x, v, options);
  int evals = 0;
  auto fast = [&](const std::vector<double>& p) { return prob.objective(p, 1, 30, &evals); };
  // Unrefined sampling for the coefficient sweep; the final value is always recomputed with refinement.
  auto coarse = [&](const std::vector<double>& p) { return prob.objective(p, 0, 30, &evals); };

  std::vector<double> p(static_cast<std::size_t>(prob.size()), 0.0);
  double best = fast(p);
  if (!(best > 0)) throw Error(ErrorKind::NoAdmissibleDisc, "the affine disc through x already leaves the domain");
  if (std::isfinite(best)) {
    const double lam0 = best;
    // Higher coefficients only matter at the percent level, so their search stops early.
    std::vector<double> step(p.size(), 0.1 * lam0), min_step(p.size(), 1e-3 * lam0);
    step[0] = step[1] = 0.25;
    min_step[0] = min_step[1] = 1e-10;
    best = pattern_search(p, best, {0, 1}, step, min_step, options.budget, evals, fast, true);
    if (options.degree >= 2 && evals < options.budget) {
      std::vector<std::size_t> all(p.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      best = pattern_search(p, coarse(p), all, step, min_step, options.budget, evals, coarse, false);
      best = fast(p);
      // Re-polish the Mobius center after the coefficients moved.
      step[0] = step[1] = std::max(step[0], 1e-4);
      best = pattern_search(p, best, {0, 1}, step, min_step, options.budget + 200, evals, fast, true);
    }
  }
  const double lambda = prob.objective(p, options.refine, 52, &evals);
  MetricEstimate out;
  out.evaluations = evals;
  if (!std::isfinite(lambda)) {
    out.upper = 0.0;
    return out;
  }
  const double safe = lambda * (1.0 - 1e-12);
  out.upper = v.norm() / (safe * kDiscRadius);
  AnalyticDisc disc = prob.witness(p, safe);
  disc.admissible = disc.check_admissible(domain, options.boundary_samples);
  out.witness = std::move(disc);
  return out;
}

double metric_lower(const EuclideanBall& enclosing, const CVector& x, const CVector& v) {
  return ball_metric(enclosing, x, v);
}

double metric_lower(const DomainSpec& domain, const CVector& x, const CVector& v) {
  if (domain.enclosing) return metric_lower(*domain.enclosing, x, v);
  if (auto exact = metric_exact(domain, x, v)) return *exact;
  throw Error(ErrorKind::NoEnclosingBall, "no enclosing ball known for '" + domain.tag + "'");
}

std::optional<double> metric_exact(const DomainSpec& domain, const CVector& x, const CVector& v) {
  if (!domain.to_unit_ball) return std::nullopt;
  const HoloMap& T = *domain.to_unit_ball;
  return ball_metric(T(x), T.jacobian(x) * v);
}

std::optional<double> distance_exact(const DomainSpec& domain, const CVector& x, const CVector& q) {
  if (!domain.to_unit_ball) return std::nullopt;
  const HoloMap& T = *domain.to_unit_ball;
  return ball_distance(T(x), T(q));
}

MetricEstimate metric_estimate(const DomainSpec& domain, const CVector& x, const CVector& v,
                               const DiscSearchOptions& options) {
  MetricEstimate est = metric_upper(domain, x, v, options);
  try {
    est.lower = metric_lower(domain, x, v);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoEnclosingBall) throw;
    est.lower = 0.0;
  }
  return est;
}

namespace {

double polyline_length(const DomainSpec& domain, const std::vector<CVector>& vertices,
                       const DiscSearchOptions& integrand, bool coarse) {
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < vertices.size(); ++s) {
    const CVector& a = vertices[s];
    const CVector d = vertices[s + 1] - a;
    if (d.norm() == 0.0) continue;
    auto k = [&](double t) { return metric_upper(domain, a + t * d, d, integrand).upper; };
    total += coarse ? boost::math::quadrature::gauss<double, 7>::integrate(k, 0.0, 1.0)
                    : boost::math::quadrature::gauss<double, 32>::integrate(k, 0.0, 1.0);
  }
  return total;
}

}  // namespace

MetricEstimate distance(const DomainSpec& domain, const CVector& x, const CVector& q,
                        const DistanceOptions& options) {
  MetricEstimate out;
  if ((x - q).norm() == 0.0) return out;
  const int segments = std::max(1, options.segments);
  if (domain.to_unit_ball) {
    // The geodesic from a to b is phi_a applied to the radial segment [0, phi_a(b)].
    const HoloMap& T = *domain.to_unit_ball;
    const CVector a = T(q), b = T(x);
    const HoloMap phi = ball_mobius(a);
    const CVector c = phi(b);
    out.lower = ball_distance(b, a);
    auto integrand = [&](double t) {
      const CVector tc = t * c;
      return ball_metric(phi(tc), phi.jacobian(tc) * c);
    };
    // Segments graded toward t = 1, where the integrand nearly blows up.
    const double gap = std::max(1.0 - c.norm(), 1e-300);
    std::vector<double> cuts;
    for (int s = 0; s < segments; ++s) cuts.push_back(0.5 * s / segments);
    for (double h = 0.5; h > 0.25 * gap; h *= 0.5) cuts.push_back(1.0 - h);
    cuts.push_back(1.0);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      total += boost::math::quadrature::gauss<double, 32>::integrate(integrand, cuts[k], cuts[k + 1]);
    out.upper = std::max(out.lower, total);
    return out;
  }
  out.lower = domain.enclosing ? ball_distance(*domain.enclosing, x, q) : 0.0;
  std::vector<CVector> vertices(static_cast<std::size_t>(segments) + 1);
  for (int s = 0; s <= segments; ++s) vertices[static_cast<std::size_t>(s)] = q + (x - q) * (double(s) / segments);
  double best = polyline_length(domain, vertices, options.integrand, true);
  double step = 0.1 * (x - q).norm();
  const int n = domain.dimension;
  for (int sweep = 0; sweep < options.sweeps; ++sweep, step *= 0.5) {
    for (int s = 1; s < segments; ++s)
      for (int m = 0; m < n; ++m)
        for (Complex dir : {Complex(1, 0), Complex(-1, 0), kI, -kI}) {
          std::vector<CVector> trial = vertices;
          trial[static_cast<std::size_t>(s)](m) += step * dir;
          if (!domain.contains(trial[static_cast<std::size_t>(s)])) continue;
          const double len = polyline_length(domain, trial, options.integrand, true);
          if (len < best) {
            best = len;
            vertices = std::move(trial);
          }
        }
  }
  out.upper = std::max(out.lower, polyline_length(domain, vertices, options.integrand, false));
  return out;
}

bool kobayashi_ball_membership(const DomainSpec& domain, const CVector& q, double r, const CVector& x) {
  if (!domain.contains(x)) return false;
  return distance(domain, x, q).upper < r;
}

std::vector<CVector> sample_kobayashi_ball(const DomainSpec& domain, const CVector& q, double r, int count,
                                           std::uint64_t seed) {
  if (!domain.to_unit_ball || !domain.to_unit_ball->invertible())
    throw Error(ErrorKind::UnsupportedDomain, "Kobayashi balls are sampled through a map to the unit ball");
  if (!(r > 0)) throw Error(ErrorKind::DegenerateInput, "Kobayashi radius must be positive");
  const HoloMap& T = *domain.to_unit_ball;
  const HoloMap Tinv = T.inverse();
  const HoloMap center = ball_mobius(T(q));
  const double t = std::tanh(r);
  std::vector<CVector> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Stream rng(seed, streams::kKobayashiBall, static_cast<std::uint64_t>(i));
    const CVector u = (i % 2 == 0) ? random_in_ball(rng, domain.dimension, t)
                                   : CVector(random_unit_vector(rng, domain.dimension) * (t * (1.0 - 1e-9)));
    out[static_cast<std::size_t>(i)] = Tinv(center(u));
  }
  return out;
}

Report localization_check(const DomainSpec& domain, const DomainSpec& subdomain, const CVector& q, const CVector& x,
                          double b, const LocalizationOptions& options) {
  Report report("localization");
  for (const CVector& y : sample_kobayashi_ball(domain, q, b, options.inclusion_samples, options.seed))
    if (!subdomain.contains(y))
      throw Error(ErrorKind::PreconditionViolated, "subdomain does not contain the Kobayashi ball B(q, b)");

  const auto exact_a = distance_exact(domain, x, q);
  const double a = exact_a ? *exact_a : distance(domain, x, q).lower;
  if (!(a < b)) throw Error(ErrorKind::PreconditionViolated, "need d(x, q) < b");
  const double th = std::tanh(b - a);

  const auto exact_d = distance_exact(subdomain, x, q);
  const double dsub = exact_d ? *exact_d : distance(subdomain, x, q).upper;
  const double bound = a / th;
  report.add("distance_bound", dsub, bound - dsub, 1e-6);

  double worst = std::numeric_limits<double>::infinity(), worst_ratio = 0.0;
  for (int i = 0; i < options.directions; ++i) {
    Stream rng(options.seed, streams::kLocalization, static_cast<std::uint64_t>(i));
    const CVector v = random_unit_vector(rng, domain.dimension);
    const auto ke = metric_exact(domain, x, v);
    const double k = ke ? *ke : metric_lower(domain, x, v);
    const auto kse = metric_exact(subdomain, x, v);
    const double ks = kse ? *kse : metric_upper(subdomain, x, v).upper;
    worst = std::min(worst, (k / th - ks) / k);
    worst_ratio = std::max(worst_ratio, ks / k);
  }
  report.add("metric_bound", worst_ratio, worst, 1e-6);
  report.note("a", a);
  report.note("b", b);
  report.note("distance_bound", bound);
  report.note("metric_factor", 1.0 / th);
  return report;
}

}  // namespace kobalab
