#pragma once

// Numerical verification of the disc, ball-convergence and inversion lemmas,
// the nested Kobayashi ball localization suite and the end-to-end replay of
// the main theorem on the unit ball.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kobalab/automorphisms.hpp"
#include "kobalab/domains.hpp"
#include "kobalab/holomap.hpp"
#include "kobalab/report.hpp"
#include "kobalab/scaling.hpp"

namespace kobalab {

using DiscMap = std::function<Complex(Complex)>;

struct DiscLemmaOptions {
  int radial = 64;
  int angular = 256;
  int boundary_samples = 512;
};

/// sup |f(z) - z| over |z| <= 1 - eps for a disc self-map with f(0) = 0 and
/// real f'(0) > 1 - delta. Throws PreconditionViolated otherwise.
Report disc_lemma_check(const DiscMap& f, double delta, double eps, const DiscLemmaOptions& options = {});

/// Blaschke products of degree <= 3 with f(0) = 0 and real positive f'(0);
/// zero moduli on a log-spaced grid toward the unit circle.
std::vector<DiscMap> blaschke_family(int budget, std::uint64_t seed = 0);

/// Largest delta in {1e-1, ..., 1e-6} such that every family member with
/// f'(0) > 1 - delta satisfies the disc lemma conclusion; 0 if none does.
double empirical_delta(double eps, const std::vector<DiscMap>& family);
double empirical_delta(double eps, int budget, std::uint64_t seed = 0);

struct SelfMapFamily {
  std::function<HoloMap(int)> generator;
  /// a_j with dg_j(0) >= (1 - a_j) I.
  std::function<double(int)> floor;
  std::string label;
  int dim = 2;
};

/// g_j = (1 - 1/j) I.
SelfMapFamily linear_family(int dim);
/// g_j = phi_c o (1 - a_j) phi_b with |b| = 1/j^2, c = (1 - a_j) b; fixes 0.
SelfMapFamily mobius_family(int dim);
/// g_j(x) = (1 - a_j) x + (a_j / 10) x_1 (0, x'), a_j = 1/j.
SelfMapFamily perturbed_family(int dim);

struct BallConvergenceOptions {
  int samples = 10000;
  /// Unit directions zeta and disc points z for the intermediate bounds.
  int directions = 64;
  int disc_points = 64;
  int j_min = 2;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Per j: sup over rB of ||g_j(x) - x||, the image check on the closed ball and
/// the chain ||h_j(z)||^2 <= 2 eps - eps^2, ||g_j(z zeta) - z zeta||^2 <= 2 eps.
Report ball_convergence_check(const SelfMapFamily& family, double r, int j_max,
                              const BallConvergenceOptions& options = {}, std::vector<double>* sups = nullptr);

struct IterationTrace {
  std::vector<CVector> iterates;
  std::vector<double> residuals;
  double ratio = 0.0;
  /// Every step obeys ||y_{k+1} - y_k|| <= eps^k ||y_1 - y_0|| (1 + 1e-6).
  bool envelope_ok = true;
  /// ceil(log(tol / ||y_1 - y_0||) / log(eps)) + 2.
  int iteration_bound = 0;

  const CVector& solution() const { return iterates.back(); }
  int steps() const { return static_cast<int>(iterates.size()) - 1; }
};

struct IterationOptions {
  int max_iterations = 200;
  /// Sampled points for the ||d psi - I|| < eps precondition; 0 skips it.
  int derivative_samples = 1000;
  std::uint64_t seed = 0;
};

/// max over sampled x in radius B of ||d psi(x) - I||.
double derivative_deviation(const HoloMap& psi, int dim, double radius, int samples, std::uint64_t seed = 0);

/// y_k = x + y_{k-1} - psi(y_{k-1}) until ||psi(y_k) - x|| <= tol.
IterationTrace invert_by_iteration(const HoloMap& psi, const CVector& x, double r, double eps, double tol,
                                   const IterationOptions& options = {});

struct SurjectivityOptions {
  double tol = 1e-10;
  int pairs = 1000;
  int derivative_samples = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Inverts psi at `samples` targets of rB and measures the injectivity ratio.
Report surjectivity_radius(const HoloMap& psi, int dim, double r, double eps, int samples,
                           const SurjectivityOptions& options = {});

/// c_j = (1 - 1/j)^2 / (1 + 1/j).
double theorem_c(int j);
/// b_j = u(1 - 1/j) = ln(2j - 1) / 2.
double theorem_b(int j);
/// t_j = tanh(a / tanh(b_j - a)); requires b_j > a.
double theorem_t(double a, int j);

struct TheoremOptions {
  /// Q_a = B^K(q, a).
  double a = 0.5;
  /// Radius of the convergence sweep sup_{rB} ||sigma o tau_j - I||.
  double r = 0.9;
  double surjectivity_r = 0.8;
  double surjectivity_eps = 0.05;
  int samples = 2000;
  int surjectivity_samples = 1000;
  ScalingOptions scaling;
  DiagnosticsOptions diagnostics;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct TheoremArtifacts {
  std::vector<StageMetrics> metrics;
  std::vector<double> convergence_sup;
  std::vector<int> indices;
  std::vector<double> r, theta, eps;
};

/// Replays the main theorem along a ball orbit with stages j = 2..j_max.
Report main_theorem_pipeline(const DomainSpec& domain, const OrbitSchedule& orbit,
                             const TheoremOptions& options = {}, TheoremArtifacts* artifacts = nullptr);

struct NestedBallOptions {
  int configurations = 1000;
  int directions = 8;
  int inclusion_samples = 64;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Localization inequalities on random nested Kobayashi balls of the unit
/// ball. Scalars are drawn from a stream that does not depend on `dim`.
Report nested_ball_suite(int dim, const NestedBallOptions& options = {});

}  // namespace kobalab
