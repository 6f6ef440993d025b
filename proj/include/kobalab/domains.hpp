#pragma once

// Defining functions, Levi forms, boundary geometry and the local
// normalization of a strongly pseudoconvex boundary point.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kobalab/holomap.hpp"
#include "kobalab/linalg.hpp"
#include "kobalab/report.hpp"

namespace kobalab {

/// Euclidean ball of validity U. An infinite radius means all of C^N.
struct Neighborhood {
  CVector center;
  double radius = std::numeric_limits<double>::infinity();

  bool contains(const CVector& z) const;
};

/// rho(z) = constant + 2 Re(linear^T y) + y* A y + Re(y^T B y), y = z - center,
/// with A Hermitian and B complex symmetric.
struct QuadraticForm {
  double constant = 0.0;
  CVector linear;
  COperator hermitian;
  COperator symmetric;
  CVector center;

  static QuadraticForm zero(int dim);
  double value(const CVector& z) const;
  CVector holomorphic_gradient(const CVector& z) const;
  double hessian(const CVector& v, const CVector& w) const;
};

/// Real C^2 function with derivative oracles.
///
/// The holomorphic gradient d(z) satisfies drho(z; v) = 2 Re(sum_m d_m v_m);
/// the Hessian oracle returns the real bilinear form d^2 rho(z; v, w).
class DefiningFunction {
 public:
  using Value = std::function<double(const CVector&)>;
  using Gradient = std::function<CVector(const CVector&)>;
  using Hessian = std::function<double(const CVector&, const CVector&, const CVector&)>;

  DefiningFunction(int dim, Value value, Gradient gradient, Hessian hessian, Neighborhood U,
                   bool finite_difference = false);

  static DefiningFunction quadratic(const QuadraticForm& form, Neighborhood U = {});
  /// Value-only oracle; derivatives by central differences with a Richardson step.
  static DefiningFunction from_value(int dim, Value value, Neighborhood U = {}, double step = 1e-5);
  /// Analytic gradient; Hessian by central differences of the gradient.
  static DefiningFunction with_gradient(int dim, Value value, Gradient gradient, Neighborhood U = {},
                                        double step = 1e-6);

  int dimension() const { return dim_; }
  double operator()(const CVector& z) const { return value_(z); }
  double value(const CVector& z) const { return value_(z); }
  CVector holomorphic_gradient(const CVector& z) const { return gradient_(z); }
  /// drho(z; v), real.
  double differential(const CVector& z, const CVector& v) const;
  double hessian(const CVector& z, const CVector& v, const CVector& w) const { return hessian_(z, v, w); }

  const Neighborhood& neighborhood() const { return U_; }
  const std::optional<QuadraticForm>& quadratic_form() const { return quadratic_; }
  bool finite_difference() const { return finite_difference_; }

 private:
  int dim_;
  Value value_;
  Gradient gradient_;
  Hessian hessian_;
  Neighborhood U_;
  bool finite_difference_ = false;
  std::optional<QuadraticForm> quadratic_;
};

enum class DomainKind { Ball, Ellipsoid, Siegel, PerturbedBall, Quadratic, Transported, Custom };

const char* to_string(DomainKind kind);

/// Direction in which `ray_boundary_point` walks along the e1 line.
enum class RayOrientation { PlusE1, MinusE1 };

struct EuclideanBall {
  CVector center;
  double radius = 1.0;
};

struct DomainSpec {
  DomainKind kind = DomainKind::Custom;
  std::string tag;
  int dimension = 0;
  DefiningFunction defining;
  CVector basepoint;
  /// Ball containing the domain, if known.
  std::optional<EuclideanBall> enclosing;
  /// Biholomorphism onto the unit ball, if known. Gives exact Kobayashi data.
  std::optional<HoloMap> to_unit_ball;
  RayOrientation orientation = RayOrientation::PlusE1;

  double rho(const CVector& z) const { return defining.value(z); }
  /// z in U and rho(z) < 0. Never throws.
  bool contains(const CVector& z) const;
};

/// Unit ball scaled by `radius` around `center` (origin by default).
DomainSpec make_ball(int dim, double radius = 1.0, std::optional<CVector> center = std::nullopt);
/// sum_m weights_m |z_m|^2 < 1; missing weights default to 1.
DomainSpec make_ellipsoid(int dim, std::vector<double> weights);
/// Re z_1 > ||z'||^2.
DomainSpec make_siegel(int dim);
/// ||z||^2 + kappa Re(sum z_m^2) < 1 with |kappa| < 1.
DomainSpec make_perturbed_ball(int dim, double kappa);
DomainSpec make_quadratic_domain(const QuadraticForm& form, std::string tag, CVector basepoint,
                                 std::optional<EuclideanBall> enclosing = std::nullopt,
                                 Neighborhood U = {});
/// Image map(base) with defining function scale * rho_base o map^{-1}.
/// `map` must carry its inverse.
DomainSpec make_transported(const DomainSpec& base, const HoloMap& map, double scale, std::string tag,
                            std::optional<EuclideanBall> enclosing = std::nullopt,
                            std::optional<RayOrientation> orientation = std::nullopt, Neighborhood U = {});
/// Domain from a value-only defining function (finite-difference derivatives).
DomainSpec make_custom(int dim, DefiningFunction::Value rho, CVector basepoint, Neighborhood U = {},
                       std::string tag = "custom");

/// Levi form (1/4)(d^2 rho(p; v, v) + d^2 rho(p; iv, iv)).
double levi_form(const DomainSpec& domain, const CVector& p, const CVector& v);

struct ComplexHessian {
  COperator hermitian;  // Levi matrix: v* A v is the Levi form
  COperator symmetric;  // holomorphic second-order part
};

/// Recovers A and B with d^2 rho(p; v, w) = 2 Re(v* A w) + 2 Re(v^T B w).
ComplexHessian complex_hessian(const DefiningFunction& rho, const CVector& p);

/// Unit outer normal conj(d)/||d||, d the holomorphic gradient at p.
CVector outer_normal(const DomainSpec& domain, const CVector& p);

struct PseudoconvexityResult {
  bool strongly = false;
  /// Minimum of the Levi form over sampled unit complex-tangent vectors.
  double c_estimate = 0.0;
  /// Smallest eigenvalue of the Levi matrix on the complex tangent space.
  double c_exact = 0.0;
};

PseudoconvexityResult is_strongly_pseudoconvex(const DomainSpec& domain, const CVector& p, int samples = 512,
                                               std::uint64_t seed = 0);

struct RayHit {
  CVector boundary;
  double r = 0.0;
};

/// First boundary crossing on the line q + s e1 (s > 0 for PlusE1, s < 0 for
/// MinusE1), located to |rho| < 1e-12.
RayHit ray_boundary_point(const DomainSpec& domain, const CVector& q,
                          std::optional<RayOrientation> orientation = std::nullopt);

struct NormalizeOptions {
  /// Radius of dom(G) around p; evaluating G outside raises DomainEscape.
  double chart_radius = 1.0;
  double sample_radius = 0.1;
  int samples = 256;
  std::uint64_t seed = 0;
};

/// Local model of a strongly pseudoconvex boundary point.
///
/// G(z) = Mhat (w - (w^T Bhat w) e1), w = Q*(z - p), sends p to 0, the outer
/// normal to -e1 and removes the holomorphic quadratic terms. Mhat is
/// diag(1, sqrt(Ahat')), so that the tangential Levi block becomes the identity.
/// In these coordinates Omega_U = {Re Z1 > psi(Im Z1, Z')}.
struct NormalizedDomain {
  CVector p;
  HoloMap G;
  /// delta -> G(p + delta); exact for points very close to p.
  HoloMap G_shift;
  DomainSpec local;
  COperator rotation;         // Q
  COperator levi_block;       // Ahat = Q* A Q / (2 ||d||)
  COperator holomorphic_block;  // Bhat = Q^T B Q / (2 ||d||)
  COperator tangent_scaling;  // Mhat
  double gradient_norm = 0.0;
  double chart_radius = 0.0;
  /// max |psi - psi2| / (t^2 + ||Z'||^2) over boundary samples of radius sample_radius.
  double taylor_residual = 0.0;
  /// max |grad psi(0)| by central differences.
  double psi_gradient_at_origin = 0.0;

  /// Boundary graph: rho_U(psi + i t, Z') = 0. Z' is a full-length vector whose
  /// first entry is ignored.
  double psi(double t, const CVector& zprime) const;
  /// Quadratic part of psi.
  double psi2(double t, const CVector& zprime) const;
  /// Real Hessian of psi2 in the tangent coordinates (t, Re Z', Im Z').
  Eigen::MatrixXd psi2_hessian() const;
};

NormalizedDomain normalize_at(const DomainSpec& domain, const CVector& p, const NormalizeOptions& options = {});

struct PeakFunction {
  std::function<double(const CVector&)> h;
  CVector peak;
  std::string label;
};

/// h(z) = Re <z - p, n_p> for the outer unit normal n_p.
PeakFunction linear_support_peak(const DomainSpec& domain, const CVector& p);

struct PeakOptions {
  int samples = 20000;
  double delta = 0.1;
  std::uint64_t seed = 0;
};

Report peak_verify(const DomainSpec& domain, const CVector& p, const PeakFunction& h, int m_max,
                   const PeakOptions& options = {});

/// Uniform-ish samples of the closure of the domain, from its enclosing ball.
std::vector<CVector> sample_closure(const DomainSpec& domain, int count, std::uint64_t seed);
/// Boundary points hit by rays from the basepoint in random directions.
std::vector<CVector> sample_boundary(const DomainSpec& domain, int count, std::uint64_t seed);

}  // namespace kobalab
