#include "kobalab/holomap.hpp"

namespace kobalab {

const char* to_string(MapKind kind) {
  switch (kind) {
    case MapKind::Mobius: return "mobius";
    case MapKind::Cayley: return "cayley";
    case MapKind::Affine: return "affine";
    case MapKind::Dilation: return "dilation";
    case MapKind::Composition: return "composition";
    case MapKind::Calibration: return "calibration";
    case MapKind::Custom: return "custom";
  }
  return "unknown";
}

HoloMap::HoloMap(MapKind kind, std::string label, Evaluate evaluate, Jacobian jacobian)
    : impl_(std::make_shared<const Impl>(
          Impl{Funcs{std::move(evaluate), std::move(jacobian), kind, std::move(label)}, std::nullopt, {}})) {}

HoloMap HoloMap::with_inverse(const HoloMap& inverse) const {
  Impl copy = *impl_;
  if (!inverse.impl_->chain.empty()) {
    const HoloMap& inv = inverse;
    copy.backward = Funcs{[inv](const CVector& z) { return inv.evaluate(z); },
                          [inv](const CVector& z) { return inv.jacobian(z); }, inv.kind(), inv.label()};
  } else {
    copy.backward = inverse.impl_->forward;
  }
  return HoloMap(std::make_shared<const Impl>(std::move(copy)));
}

CVector HoloMap::evaluate(const CVector& z) const {
  if (impl_->chain.empty()) return impl_->forward.evaluate(z);
  CVector w = z;
  for (const HoloMap& m : impl_->chain) w = m.evaluate(w);
  return w;
}

COperator HoloMap::jacobian(const CVector& z) const {
  if (impl_->chain.empty()) return impl_->forward.jacobian(z);
  CVector w = z;
  COperator j;
  bool first = true;
  for (const HoloMap& m : impl_->chain) {
    const COperator jm = m.jacobian(w);
    j = first ? jm : (jm * j).eval();
    first = false;
    w = m.evaluate(w);
  }
  return j;
}

bool HoloMap::invertible() const {
  if (impl_->chain.empty()) return impl_->backward.has_value();
  for (const HoloMap& m : impl_->chain)
    if (!m.invertible()) return false;
  return true;
}

HoloMap HoloMap::inverse() const {
  if (!impl_->chain.empty()) {
    std::vector<HoloMap> reversed;
    for (auto it = impl_->chain.rbegin(); it != impl_->chain.rend(); ++it) reversed.push_back(it->inverse());
    return compose_chain(std::move(reversed));
  }
  if (!impl_->backward) throw Error(ErrorKind::SingularOperator, "map '" + label() + "' has no inverse");
  return HoloMap(std::make_shared<const Impl>(Impl{*impl_->backward, impl_->forward, {}}));
}

MapKind HoloMap::kind() const { return impl_->chain.empty() ? impl_->forward.kind : MapKind::Composition; }

const std::string& HoloMap::label() const { return impl_->forward.label; }

std::vector<HoloMap> HoloMap::chain() const {
  if (impl_->chain.empty()) return {*this};
  return impl_->chain;
}

HoloMap HoloMap::identity(int dim) {
  return affine(COperator::Identity(dim, dim), CVector::Zero(dim), MapKind::Affine, "identity");
}

HoloMap HoloMap::affine(const COperator& m, const CVector& b, MapKind kind, std::string label) {
  HoloMap forward(
      kind, label, [m, b](const CVector& z) -> CVector { return m * z + b; },
      [m](const CVector&) -> COperator { return m; });
  if (m.rows() != m.cols()) return forward;
  Eigen::FullPivLU<COperator> lu(m);
  if (!lu.isInvertible()) return forward;
  const COperator minv = lu.inverse();
  HoloMap backward(
      kind, label + "^-1", [minv, b](const CVector& w) -> CVector { return minv * (w - b); },
      [minv](const CVector&) -> COperator { return minv; });
  return forward.with_inverse(backward);
}

HoloMap compose(const HoloMap& outer, const HoloMap& inner) {
  std::vector<HoloMap> maps = inner.chain();
  for (const HoloMap& m : outer.chain()) maps.push_back(m);
  return compose_chain(std::move(maps));
}

HoloMap compose_chain(std::vector<HoloMap> maps) {
  if (maps.empty()) throw Error(ErrorKind::DegenerateInput, "empty composition");
  std::vector<HoloMap> flat;
  for (const HoloMap& m : maps)
    for (const HoloMap& atom : m.chain()) flat.push_back(atom);
  if (flat.size() == 1) return flat.front();
  std::string label;
  for (auto it = flat.rbegin(); it != flat.rend(); ++it) label += (label.empty() ? "" : " o ") + it->label();
  auto impl = std::make_shared<const HoloMap::Impl>(
      HoloMap::Impl{HoloMap::Funcs{nullptr, nullptr, MapKind::Composition, label}, std::nullopt, std::move(flat)});
  return HoloMap(std::move(impl));
}

COperator finite_difference_jacobian(const HoloMap& map, const CVector& z, double h) {
  const Eigen::Index dim = z.size();
  const CVector f0 = map.evaluate(z);
  COperator j(f0.size(), dim);
  for (Eigen::Index m = 0; m < dim; ++m) {
    CVector step = CVector::Zero(dim);
    step(m) = h;
    j.col(m) = (map.evaluate(z + step) - map.evaluate(z - step)) / (2.0 * h);
  }
  return j;
}

}  // namespace kobalab
