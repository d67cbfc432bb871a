#pragma once

#include <cstdint>
#include <string>

#include <Eigen/SparseCholesky>

#include "bethe/operators.hpp"
#include "bethe/types.hpp"

namespace bethe {

struct SolverMeta {
  int iterations = 0;       // inner iterations (solves / matvecs)
  int factorizations = 0;   // sparse factorizations performed
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Batch of symmetric eigenpairs: values ascending, unit-norm orthonormal
/// vectors, per-pair residual ||Mv - lambda v||.
struct EigPairs {
  Vec values;
  Mat vectors;
  Vec residuals;
  SolverMeta meta;
};

/// Exact count of eigenvalues of M strictly below x, by the signature of the
/// LDL^T factorization of M - xI (Sylvester inertia). Breakdowns retry with a
/// downward-perturbed shift; dense fallback for n <= 1500.
class InertiaCounter {
 public:
  explicit InertiaCounter(const SpMat& m);

  Index below(double x);
  int factorizations() const { return factorizations_; }

 private:
  SpMat m_;  // pattern includes the full diagonal
  Eigen::SimplicialLDLT<SpMat> solver_;
  double scale_ = 1.0;
  int factorizations_ = 0;
};

/// Number of eigenvalues of the operator strictly below -eps_thr.
Index count_below(const SymmetricOperator& op, double eps_thr);

/// The k algebraically smallest eigenpairs, residual-certified, via inertia
/// bisection plus shift-inverted iteration.
EigPairs smallest_eigs(const SymmetricOperator& op, Index k, double tol = 1e-8,
                       std::uint64_t seed = 0);

enum class RitzSide { LargestReal, SmallestReal };

/// Eigenpairs of the 2n x 2n reduced non-backtracking operator at one end of
/// the real axis. Vector halves (x, y) are rescaled to ||y|| = 1; eigenvalues
/// with negligible imaginary part are projected to the real line.
struct NBEigenbundle {
  CVec lambdas;      // after projection; ordered per requested side
  Vec imag_norms;    // |Im lambda| as computed, before projection
  Mat x_parts;       // n x k, real parts after phase alignment
  Mat y_parts;       // n x k, ||column|| = 1
  Vec residuals;     // ||Btilde v - lambda v|| with ||v||_2 = 1
  SolverMeta meta;
};

NBEigenbundle leading_eigs_nonsym(const GeneralOperator& btilde, Index k, RitzSide side,
                                  double tol = 1e-8, std::uint64_t seed = 0);

/// min over orthogonal O of ||V - Y O||_F (orthogonal Procrustes on Y^T V).
struct ProcrustesResult {
  double dist = 0.0;
  Mat rotation;              // the minimizer O
  double min_singular = 0.0; // smallest singular value of Y^T V
  bool rank_deficient = false;
};

ProcrustesResult subspace_distance(const Mat& v, const Mat& y);

/// Residual-based eigenvalue localization: k orthonormal pseudo-pairs with
/// residuals <= eps certify k true eigenvalues within 2 sqrt(k) eps.
struct WeylCertificate {
  double eps = 0.0;
  double bound = 0.0;
  bool checked = false;  // dense verification ran (n <= 1500)
  bool holds = false;
};

WeylCertificate local_weyl_certificate(const SymmetricOperator& op, const Vec& lambdas,
                                       const Mat& vectors);

/// dist(v, E) <= ||Mv - lambda v|| / dist(lambda, Sp(M restricted to E_perp)).
struct DavisKahanCertificate {
  double dist = 0.0;
  double eps = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  bool holds = false;
};

DavisKahanCertificate local_davis_kahan_certificate(const SymmetricOperator& op, const Vec& v,
                                                    double lambda, const Mat& subspace);

// Serialization: values/residuals/metadata as JSON; vectors as a binary
// column-major little-endian f64 file with a 16-byte header
// ("EIGV", u32 version, u32 n, u32 k).
void save_eigpairs_json(const EigPairs& pairs, const std::string& path);
void save_vectors_eigv(const Mat& vectors, const std::string& path);
Mat load_vectors_eigv(const std::string& path);

}  // namespace bethe
