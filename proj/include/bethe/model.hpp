#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bethe/graph.hpp"
#include "bethe/types.hpp"

namespace bethe {

/// Block-model generative parameters: symmetric intensity matrix P (edge
/// probability P_ij/n), block fractions pi, vertex count n.
struct ModelParams {
  Mat P;
  Vec pi;
  Index n = 0;
  Index r = 0;
  double d = 0.0;  // common row sum of P*diag(pi)
};

enum class Sign { Plus, Minus };

/// Eigen-structure of the signal matrix Q = P*diag(pi), ordered by decreasing
/// absolute eigenvalue, with the detectability split.
struct SignalSpectrum {
  double d = 0.0;
  Vec mu;                        // |mu_1| >= ... >= |mu_r|, mu_1 = d
  Mat phi;                       // columns phi_i, pi-orthonormal
  Mat psi;                       // columns psi_i, orthonormal
  Vec tau;                       // tau_i = d/mu_i^2 for i < r0 (informative only)
  Index r0 = 0;                  // number of informative eigenvalues (mu_i^2 > d)
  Index r_plus = 0, r_minus = 0;
  std::vector<double> mu_plus;   // descending, > sqrt(d)
  std::vector<double> mu_minus;  // ascending, < -sqrt(d)
  std::vector<Index> idx_plus;   // positions of mu_plus entries in `mu`
  std::vector<Index> idx_minus;  // positions of mu_minus entries in `mu`
  bool degenerate_tie = false;   // |mu_i| == |mu_j| with opposite signs
};

struct LabeledGraph {
  SparseGraph graph;
  IVec sigma;  // labels in 1..r
  ModelParams params;
};

struct CrossMoments {
  double xy = 0.0;
  double xx = 0.0;
  double yy = 1.0;
  double resid = 0.0;
};

ModelParams validate_model(const Mat& P, const Vec& pi, Index n);

SignalSpectrum signal_spectrum(const ModelParams& params);

/// Deterministic block sizes round(n*pi_k) (remainder absorbed by the largest
/// block), contiguous label ranges, independent edges with prob P_ab/n.
LabeledGraph sample_graph(const ModelParams& params, std::uint64_t seed);

struct OutlierPrediction {
  std::vector<double> location;    // (±sqrt(d)-mu)(±sqrt(d)-d/mu) per informative mu of the sign
  std::vector<double> normalized;  // (1-1/sqrt(tau))(1-sqrt(tau)) = location/d
};

OutlierPrediction predicted_outlier_locations(const SignalSpectrum& s, Sign sign);

/// Asymptotic inner products of the reduced non-backtracking eigenvector
/// halves (x_i, y_i) for the i-th informative eigenvalue (1-based, |mu| order).
CrossMoments predicted_cross_moments(const SignalSpectrum& s, Index i);

// Model file IO: JSON {"P": [[...]], "pi": [...], "n": N}.
ModelParams load_model(const std::string& path);
void save_model(const ModelParams& params, const std::string& path);

/// Balanced 2-block symmetric model with mean degree d and signal eigenvalue
/// mu2: P = [[d+mu2, d-mu2], [d-mu2, d+mu2]], pi = (1/2, 1/2).
ModelParams two_block_model(double d, double mu2, Index n);

}  // namespace bethe
