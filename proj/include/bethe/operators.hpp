#pragma once

#include <span>
#include <string>

#include "bethe/graph.hpp"
#include "bethe/types.hpp"

namespace bethe {

/// Sparse symmetric real operator with provenance (which t, which graph).
struct SymmetricOperator {
  SpMat matrix;
  double t = 0.0;
  std::string tag;

  Index dim() const { return matrix.rows(); }
  Vec apply(const Vec& v) const { return matrix * v; }
};

/// Sparse real operator without symmetry (reduced or full non-backtracking).
struct GeneralOperator {
  SpMat matrix;
  std::string tag;

  Index dim() const { return matrix.rows(); }
  Vec apply(const Vec& v) const { return matrix * v; }
};

/// Deformed Laplacian t^2 I - t A + (D - I); H(0) = D - I exactly.
SymmetricOperator bethe_hessian(const SparseGraph& g, double t);

/// Weighted variant: diag 1 + sum_k w_ik^2/(t^2-w_ik^2), off-diag
/// -t w_ij/(t^2-w_ij^2). With unit weights equals bethe_hessian/(t^2-1).
SymmetricOperator weighted_bethe_hessian(const SparseGraph& g, double t);

/// 2n x 2n block matrix [[0, D-I], [-I, A]].
GeneralOperator reduced_nb(const SparseGraph& g);

/// 2m x 2m oriented-edge operator: B[(u,v),(x,y)] = 1 iff v = x and u != y.
GeneralOperator full_nb(const SparseGraph& g);

/// Max relative residual over z samples of both determinant identities
/// det(B - zI) = (z^2-1)^{m-n} det(z^2 I - zA + D - I)
///             = (z^2-1)^{m-n} det(Btilde - zI).
/// Dense evaluation; enforced to desk scale (n <= 12, m <= 20).
double ihara_bass_residual(const SparseGraph& g, std::span<const Complex> z_samples);

/// Max abs residual of H(t)/t - H(t')/t' = (t-t')(I - (D-I)/(t t')),
/// relative to the left-hand side scale. Exact identity.
double deformed_difference_check(const SparseGraph& g, double t, double t_prime);

// Matrix-market export for cross-checking with external tools.
void save_operator(const SpMat& m, const std::string& path, bool symmetric);

}  // namespace bethe
