#include "kobalab/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace kobalab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::SingularOperator: return "SingularOperator";
    case ErrorKind::NotComparable: return "NotComparable";
    case ErrorKind::OutsideNeighborhood: return "OutsideNeighborhood";
    case ErrorKind::NotBoundaryPoint: return "NotBoundaryPoint";
    case ErrorKind::NoBoundaryHit: return "NoBoundaryHit";
    case ErrorKind::NotStronglyPseudoconvex: return "NotStronglyPseudoconvex";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NoAdmissibleDisc: return "NoAdmissibleDisc";
    case ErrorKind::NoEnclosingBall: return "NoEnclosingBall";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::OutOfBall: return "OutOfBall";
    case ErrorKind::PoleHit: return "PoleHit";
    case ErrorKind::UnsupportedDomain: return "UnsupportedDomain";
    case ErrorKind::DegenerateTangent: return "DegenerateTangent";
    case ErrorKind::NonpositiveRadius: return "NonpositiveRadius";
    case ErrorKind::DomainEscape: return "DomainEscape";
    case ErrorKind::SingularDifferential: return "SingularDifferential";
    case ErrorKind::ContractionFailure: return "ContractionFailure";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

CVector basis_vector(int dim, int m) {
  if (m < 1 || m > dim) throw Error(ErrorKind::OutOfRange, "basis index out of range");
  CVector e = CVector::Zero(dim);
  e(m - 1) = 1.0;
  return e;
}

CVector prime_part(const CVector& z) {
  CVector out = z;
  out(0) = 0.0;
  return out;
}

double prime_norm_sq(const CVector& z) { return z.tail(z.size() - 1).squaredNorm(); }

FlagIndex::FlagIndex(int n) : n_(n) {
  if (n < 1) throw Error(ErrorKind::OutOfRange, "flag index must be positive");
}

bool maps_flag_into(const COperator& a, FlagIndex n, double tol) {
  const int dim = static_cast<int>(a.rows());
  if (n.value() > dim) throw Error(ErrorKind::OutOfRange, "flag index exceeds dimension");
  for (int col = 0; col < n.value(); ++col)
    for (int row = n.value(); row < dim; ++row)
      if (std::abs(a(row, col)) > tol) return false;
  return true;
}

GramSchmidtResult gram_schmidt(std::span<const CVector> vectors) {
  GramSchmidtResult out;
  if (vectors.empty()) return out;
  const Eigen::Index dim = vectors.front().size();
  COperator stacked(dim, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].size() != dim) throw Error(ErrorKind::DegenerateInput, "length mismatch");
    stacked.col(static_cast<Eigen::Index>(k)) = vectors[k];
  }
  if (static_cast<Eigen::Index>(vectors.size()) > dim || smallest_singular_value(stacked) <= 1e-10)
    throw Error(ErrorKind::DegenerateInput, "vectors are not linearly independent");

  // f_m = v_m - sum_k <v_m, f_k>/<f_k, f_k> f_k, evaluated on the running
  // residual (modified form) which is algebraically identical.
  std::vector<CVector> f;
  f.reserve(vectors.size());
  for (const CVector& v : vectors) {
    CVector residual = v;
    for (const CVector& fk : f) residual -= (inner(residual, fk) / fk.squaredNorm()) * fk;
    f.push_back(residual);
  }
  for (const CVector& fm : f) {
    const double norm = fm.norm();
    out.norms.push_back(norm);
    out.orthonormal.push_back(fm / norm);
  }
  return out;
}

namespace {

Eigen::JacobiSVD<COperator> full_svd(const COperator& a) {
  return Eigen::JacobiSVD<COperator>(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

}  // namespace

double operator_norm(const COperator& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<COperator>(a).singularValues()(0);
}

double smallest_singular_value(const COperator& a) {
  const auto sv = Eigen::JacobiSVD<COperator>(a).singularValues();
  return sv(sv.size() - 1);
}

double condition_number(const COperator& a) {
  const auto sv = Eigen::JacobiSVD<COperator>(a).singularValues();
  const double smallest = sv(sv.size() - 1);
  if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smallest;
}

PolarDecomposition polar_decompose(const COperator& a) {
  if (a.rows() != a.cols() || a.size() == 0)
    throw Error(ErrorKind::SingularOperator, "polar decomposition needs a square operator");
  const auto svd = full_svd(a);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) >= 1e8)
    throw Error(ErrorKind::SingularOperator, "operator is not invertible (cond >= 1e8)");
  const COperator& w = svd.matrixU();
  const COperator& v = svd.matrixV();
  PolarDecomposition out;
  out.positive = w * sv.cast<Complex>().asDiagonal() * w.adjoint();
  out.positive = 0.5 * (out.positive + out.positive.adjoint()).eval();
  out.unitary = w * v.adjoint();
  return out;
}

double min_hermitian_eigenvalue(const COperator& a) {
  const COperator h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<COperator> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

COperator hermitian_sqrt(const COperator& a) {
  const COperator h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<COperator> eig(h);
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lambda.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
}

bool operator_geq(const COperator& t, const COperator& s, double tol, double hermitian_tol) {
  const COperator d = t - s;
  const double scale = std::max(1.0, operator_norm(d));
  if (operator_norm(d - d.adjoint()) > hermitian_tol * scale)
    throw Error(ErrorKind::NotComparable, "T - S is not Hermitian");
  return min_hermitian_eigenvalue(d) >= -tol;
}

bool hermitian_part_geq(const COperator& t, const COperator& s, double tol) {
  return min_hermitian_eigenvalue(t - s) >= -tol;
}

double lower_triangle_max(const COperator& a) {
  double worst = 0.0;
  for (Eigen::Index col = 0; col < a.cols(); ++col)
    for (Eigen::Index row = col + 1; row < a.rows(); ++row) worst = std::max(worst, std::abs(a(row, col)));
  return worst;
}

bool flag_preserving(const COperator& a, double tol) { return lower_triangle_max(a) <= tol; }

COperator unitary_with_first_column(const CVector& first) {
  const int dim = static_cast<int>(first.size());
  std::vector<CVector> columns{first / first.norm()};
  for (int m = 1; m <= dim && static_cast<int>(columns.size()) < dim; ++m) {
    CVector candidate = basis_vector(dim, m);
    for (const CVector& c : columns) candidate -= inner(candidate, c) * c;
    // Second pass keeps the completion orthonormal to machine precision.
    for (const CVector& c : columns) candidate -= inner(candidate, c) * c;
    const double norm = candidate.norm();
    if (norm > 1e-8) columns.push_back(candidate / norm);
  }
  COperator q(dim, dim);
  for (int k = 0; k < dim; ++k) q.col(k) = columns[static_cast<std::size_t>(k)];
  return q;
}

}  // namespace kobalab
