#pragma once

// Automorphisms of the model domains and orbit schedules accumulating at a
// boundary point.

#include <cstdint>
#include <vector>

#include "kobalab/domains.hpp"
#include "kobalab/holomap.hpp"

namespace kobalab {

/// Involutive ball automorphism with phi_a(a) = 0 and phi_a(0) = a:
/// phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>), s_a = sqrt(1 - |a|^2).
HoloMap ball_mobius(const CVector& a);

/// z -> phi_a(z) - p for a = (1 - s) p with ||p|| = 1, evaluated without
/// cancellation when s is tiny; the inverse is delta -> phi_a(p + delta).
HoloMap ball_mobius_toward(const CVector& p, double s);

struct CayleyPair {
  HoloMap psi;      // Siegel domain -> unit ball, carries its inverse
  HoloMap psi_inv;  // unit ball -> Siegel domain
};

/// Psi(w) = ((1 - w1)/(1 + w1), 2 w'/(1 + w1)).
CayleyPair cayley(int dim);

/// w -> (lambda^2 w1, lambda w'), an automorphism of the Siegel domain.
HoloMap siegel_dilation(int dim, double lambda);

struct OrbitSchedule {
  std::vector<HoloMap> maps;
  std::vector<int> indices;  // the j of each map
  CVector q;
  CVector p;
  double rate = 0.5;
  /// x -> phi_j(x) - p, filled when it can be formed without cancellation.
  std::vector<HoloMap> shifted;

  CVector point(std::size_t k) const { return maps.at(k).evaluate(q); }
  std::size_t size() const { return maps.size(); }
};

/// phi_j for j = first, ..., first + count - 1 with ||phi_j(q) - p|| decreasing
/// geometrically. Ball-like domains (with a map to the unit ball) use Mobius
/// maps phi_{a_j} o phi_q, a_j = (1 - rate^j) p; the Siegel domain uses
/// dilations toward p = 0.
OrbitSchedule orbit_to_boundary(const DomainSpec& domain, const CVector& q, const CVector& p, double rate, int count,
                                int first = 1);

/// Synthetic interior sequence q_j -> p for domains without automorphisms:
/// q_j = p - s_j n + c s_j^{3/4} (i n), s_j = rate^j, moved inside if needed.
struct SyntheticOrbit {
  std::vector<CVector> points;
  std::vector<int> indices;
  CVector p;
  double rate = 0.5;
};

SyntheticOrbit synthetic_orbit(const DomainSpec& domain, const CVector& p, double rate, int count, int first = 1,
                               double tilt = 0.5);

struct OrbitLocalization {
  /// First schedule index from which every later image lies in the
  /// Euclidean neighborhood; -1 if never.
  int J = -1;
  std::vector<double> max_distance;  // per schedule entry
};

/// Samples B^K(q, kobayashi_radius) and measures sup ||phi_j(x) - p||.
OrbitLocalization orbit_localization(const DomainSpec& domain, const OrbitSchedule& orbit, double kobayashi_radius,
                                     double euclidean_radius, int samples, std::uint64_t seed);

}  // namespace kobalab
