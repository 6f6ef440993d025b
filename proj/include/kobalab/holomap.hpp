#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kobalab/linalg.hpp"

namespace kobalab {

enum class MapKind { Mobius, Cayley, Affine, Dilation, Composition, Calibration, Custom };

const char* to_string(MapKind kind);

/// Immutable handle to a holomorphic map with an evaluation oracle, a
/// complex Jacobian oracle and (optionally) an explicit inverse. Copies share
/// the underlying state.
class HoloMap {
 public:
  using Evaluate = std::function<CVector(const CVector&)>;
  using Jacobian = std::function<COperator(const CVector&)>;

  HoloMap(MapKind kind, std::string label, Evaluate evaluate, Jacobian jacobian);

  /// Copy of this map that knows its inverse.
  HoloMap with_inverse(const HoloMap& inverse) const;

  CVector operator()(const CVector& z) const { return evaluate(z); }
  CVector evaluate(const CVector& z) const;
  COperator jacobian(const CVector& z) const;
  /// dF(z; v).
  CVector differential(const CVector& z, const CVector& v) const { return jacobian(z) * v; }

  bool invertible() const;
  HoloMap inverse() const;

  MapKind kind() const;
  const std::string& label() const;
  /// Constituent maps in application order (innermost first). An atomic map
  /// is its own one-element chain.
  std::vector<HoloMap> chain() const;

  static HoloMap identity(int dim);
  /// z -> M z + b; carries its inverse when M is invertible.
  static HoloMap affine(const COperator& m, const CVector& b, MapKind kind = MapKind::Affine,
                        std::string label = "affine");

 private:
  struct Funcs {
    Evaluate evaluate;
    Jacobian jacobian;
    MapKind kind;
    std::string label;
  };
  struct Impl {
    Funcs forward;
    std::optional<Funcs> backward;
    std::vector<HoloMap> chain;  // non-empty only for compositions
  };
  explicit HoloMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  friend HoloMap compose(const HoloMap& outer, const HoloMap& inner);
  friend HoloMap compose_chain(std::vector<HoloMap> maps);

  std::shared_ptr<const Impl> impl_;
};

/// outer o inner.
HoloMap compose(const HoloMap& outer, const HoloMap& inner);
/// Composition of `maps` listed in application order (innermost first).
HoloMap compose_chain(std::vector<HoloMap> maps);

/// Central-difference Jacobian along the complex coordinate directions.
COperator finite_difference_jacobian(const HoloMap& map, const CVector& z, double h = 1e-6);

}  // namespace kobalab
