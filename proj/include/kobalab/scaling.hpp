#pragma once

// Scaling pipeline: stage maps H_j and L_j, the compositions omega_j and
// tau_j = Psi o omega_j, Gram-Schmidt calibration sigma_j = S_j o tau_j and the
// diagnostics attached to them.

#include <cstdint>
#include <optional>
#include <vector>

#include "kobalab/automorphisms.hpp"
#include "kobalab/domains.hpp"
#include "kobalab/holomap.hpp"
#include "kobalab/report.hpp"

namespace kobalab {

struct ScalingStage {
  int j = 0;
  CVector q_j;  // point in normalized coordinates
  CVector p_j;  // boundary foot on the e1 line through q_j
  double r_j = 0.0;
  double theta_j = 0.0;
  Complex phase = 1.0;  // e^{i theta_j}
  /// Coefficients of T_j(v') = sum_{m >= 2} tilt_m v_m (tilt_1 = 0).
  CVector tilt;
  HoloMap H;
  HoloMap L;
  /// min Re (H_j b)_1 over sampled boundary points b near p_j.
  double c1_margin = 0.0;
  /// |rho_U(p_j)|.
  double c2_residual = 0.0;
  /// ||H_j(q_j) - e^{i theta_j} r_j e1||.
  double c3_error = 0.0;
};

struct StageOptions {
  int c1_samples = 1000;
  double c1_radius = 0.1;
  std::uint64_t seed = 0;
};

/// Builds H_j (rotation of the normal at p_j onto the Re w1 axis plus the
/// tangent tilt T_j) and L_j for the normalized-coordinate point q_j.
ScalingStage build_stage(const NormalizedDomain& normalized, const CVector& q_j, int j,
                         const StageOptions& options = {});

/// L(w) = (w1 / r) e1 + w' / sqrt(r).
HoloMap build_L(int dim, double r);

struct PipelineMaps {
  HoloMap omega;  // L_j o H_j o G o phi_j
  HoloMap tau;    // Psi o omega_j
};

/// With `shifted`, phi_j is given as x -> phi_j(x) - p and G_shift is used.
PipelineMaps compose_pipeline(const NormalizedDomain& normalized, const ScalingStage& stage, const HoloMap& phi_j,
                              const HoloMap& psi, bool shifted = false);

struct Calibration {
  COperator S;
  HoloMap recentered;  // phi_{tau(q)} o tau, which sends q to 0
  HoloMap sigma;       // S o recentered
  std::vector<double> norms;  // ||f_m|| from Gram-Schmidt on the columns of d(recentered)(q)
  COperator dsigma;
};

/// Throws SingularDifferential when cond(d tau(q)) >= 1e8.
Calibration calibrate(const HoloMap& tau, const CVector& q);

struct ScalingOptions {
  NormalizeOptions normalize;
  StageOptions stage;
  /// Samples of B^K(q, R_j) used for eps_j and for the radius search.
  int image_samples = 256;
  double radius_cap = 30.0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct ScalingState {
  DomainSpec domain;
  CVector q;
  CVector p;
  NormalizedDomain normalized;
  HoloMap psi;
  std::vector<ScalingStage> stages;
  std::vector<HoloMap> phi;
  std::vector<HoloMap> omega;
  std::vector<HoloMap> tau;
  std::vector<Calibration> calibrations;
  std::vector<double> eps;  // sampled overshoot of tau_j beyond the unit sphere
  std::vector<double> R;    // Kobayashi radii with phi_j(B^K(q, R_j)) inside dom(G)
  /// Sample set behind R_j, reused by the containment diagnostics.
  int image_samples = 256;
  std::uint64_t seed = 0;

  std::size_t size() const { return stages.size(); }
  const HoloMap& sigma(std::size_t k) const { return calibrations.at(k).sigma; }
  /// min over stages <= k and m of ||f_jm||.
  double c0(std::size_t k) const;
  double c0() const { return c0(size() - 1); }
};

/// Runs every stage of the pipeline along an automorphism orbit.
ScalingState run_scaling(const DomainSpec& domain, const OrbitSchedule& orbit, const ScalingOptions& options = {});

/// Largest R (up to the cap) with sampled phi(B^K(q, R)) inside dom(G).
double localization_radius(const DomainSpec& domain, const NormalizedDomain& normalized, const HoloMap& phi,
                           const CVector& q, double cap, int samples, std::uint64_t seed, bool shifted = false);

/// Stages only, driven by a synthetic sequence of points in the original coordinates.
std::vector<ScalingStage> build_synthetic_stages(const NormalizedDomain& normalized, const SyntheticOrbit& orbit,
                                                 const StageOptions& options = {});

struct StageMetrics {
  int j = 0;
  double est_lo_margin = 0.0;  // min_v (||dsigma v|| - (1 - 1/j) k) / k
  double est_hi_margin = 0.0;  // min_v ((1 + 1/j)(1 - 1/j)^{-1} k - ||dsigma v||) / k
  double est0_residual = 0.0;  // max_v | ||dsigma v|| - k | / k
};

struct DiagnosticsOptions {
  int directions = 64;
  int containment_samples = 256;
  std::uint64_t seed = 0;
};

Report scaling_diagnostics(const ScalingState& state, const DiagnosticsOptions& options = {},
                           std::vector<StageMetrics>* metrics = nullptr);

struct CloudRow {
  int j;
  double re_w1;
  double norm_wprime_sq;
  double deviation;
};

/// Deviation of the scaled boundary L_j H_j(bdry Omega_U) from the paraboloid
/// Re W1 = ||W'||^2 over a fixed sample set with |Im W1| <= 1, ||W'|| <= 1.
Report hausdorff_to_siegel(const NormalizedDomain& normalized, const std::vector<ScalingStage>& stages, int samples,
                           std::uint64_t seed = 0, std::vector<CloudRow>* cloud = nullptr,
                           std::vector<double>* deviations = nullptr);

/// Least-squares slope of log(dev) against log(r), ignoring zero deviations.
double fit_decay_exponent(const std::vector<double>& r, const std::vector<double>& dev);

}  // namespace kobalab
