#pragma once

// Complex vectors and operators of truncation dimension N, together with the
// operator-theoretic primitives used by the scaling construction.

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kobalab {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using COperator = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};

enum class ErrorKind {
  DegenerateInput,
  SingularOperator,
  NotComparable,
  OutsideNeighborhood,
  NotBoundaryPoint,
  NoBoundaryHit,
  NotStronglyPseudoconvex,
  OutOfRange,
  NoAdmissibleDisc,
  NoEnclosingBall,
  PreconditionViolated,
  OutOfBall,
  PoleHit,
  UnsupportedDomain,
  DegenerateTangent,
  NonpositiveRadius,
  DomainEscape,
  SingularDifferential,
  ContractionFailure,
  NonConvergence,
  ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Hermitian inner product <a, b> = sum a_m conj(b_m), linear in `a`.
inline Complex inner(const CVector& a, const CVector& b) { return b.dot(a); }

/// Standard basis vector e_m (1-based index, matching the flag Sigma_n).
CVector basis_vector(int dim, int m);

/// z' = z - z_1 e_1 as a full-length vector.
CVector prime_part(const CVector& z);
double prime_norm_sq(const CVector& z);

/// Index n of the flag subspace Sigma_n = span(e_1, ..., e_n).
class FlagIndex {
 public:
  explicit FlagIndex(int n);
  int value() const noexcept { return n_; }

 private:
  int n_;
};

/// True when `a` maps Sigma_n into itself up to `tol` on the strictly lower block.
bool maps_flag_into(const COperator& a, FlagIndex n, double tol);

struct GramSchmidtResult {
  std::vector<CVector> orthonormal;
  /// ||f_m|| before normalization.
  std::vector<double> norms;
};

/// Classical Gram-Schmidt on the given (linearly independent) vectors.
/// Throws DegenerateInput when the smallest singular value is <= 1e-10.
GramSchmidtResult gram_schmidt(std::span<const CVector> vectors);

struct PolarDecomposition {
  COperator positive;
  COperator unitary;
};

/// A = P U with P positive Hermitian and U unitary, via the SVD A = W S V*:
/// P = W S W*, U = W V*. Throws SingularOperator when cond(A) >= 1e8.
PolarDecomposition polar_decompose(const COperator& a);

double operator_norm(const COperator& a);
double smallest_singular_value(const COperator& a);
double condition_number(const COperator& a);

/// Smallest eigenvalue of (A + A*) / 2.
double min_hermitian_eigenvalue(const COperator& a);

/// Hermitian square root of a positive semidefinite Hermitian operator.
COperator hermitian_sqrt(const COperator& a);

/// T >= S in the sense <(T - S)x, x> >= 0. T - S must be Hermitian to
/// `hermitian_tol` (relative to max(1, ||T - S||)), otherwise NotComparable.
bool operator_geq(const COperator& t, const COperator& s, double tol = 1e-10,
                  double hermitian_tol = 1e-10);

/// Same order relation applied to the Hermitian part of T - S; never throws.
bool hermitian_part_geq(const COperator& t, const COperator& s, double tol = 1e-10);

/// True iff every strictly lower entry has modulus <= tol.
bool flag_preserving(const COperator& a, double tol);

/// Largest modulus among the strictly lower entries.
double lower_triangle_max(const COperator& a);

/// Unitary whose first column is the unit vector `first`; the remaining
/// columns complete it to an orthonormal basis, preferring e_2, e_3, ...
COperator unitary_with_first_column(const CVector& first);

}  // namespace kobalab
