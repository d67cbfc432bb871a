#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bethe/eig.hpp"
#include "bethe/graph.hpp"
#include "bethe/model.hpp"
#include "bethe/types.hpp"

namespace bethe {

struct DetectConfig {
  double epsilon = -1.0;  // < 0 means the default 1/log(n)
  double solver_tol = 1e-8;
  int kmeans_restarts = 20;
  std::uint64_t seed = 0;
};

inline double default_epsilon(Index n) { return 1.0 / std::log(static_cast<double>(std::max<Index>(n, 3))); }

/// Negative-eigenvalue counts of H(+sqrt(d_hat)) and H(-sqrt(d_hat)) below
/// -epsilon: the community-count estimates (r_hat_plus, r_hat_minus).
std::pair<Index, Index> estimate_counts(const SparseGraph& g, double epsilon = -1.0);

struct Embedding {
  Mat v_plus;       // n x r_hat_plus, eigenvalues ascending
  Mat v_minus;      // n x r_hat_minus
  Vec evals_plus;
  Vec evals_minus;
  double d_hat = 0.0;
  double epsilon = 0.0;
};

Embedding embed(const SparseGraph& g, double epsilon = -1.0, double solver_tol = 1e-8,
                std::uint64_t seed = 0);

struct KmeansResult {
  IVec labels;    // 1..r
  Mat centers;    // r x dim
  double cost = 0.0;
  int empty_repairs = 0;
  int best_restart = 0;
};

/// Lloyd iterations from k-means++ seeding, best of `restarts` independent
/// starts; rows of v are the points. Deterministic for a fixed seed.
KmeansResult kmeans(const Mat& v, Index r, int restarts, std::uint64_t seed);

struct DetectionResult {
  Index r_hat_plus = 0;
  Index r_hat_minus = 0;
  Index r_hat = 0;
  Mat v_plus, v_minus;
  IVec sigma_hat;
  double kmeans_cost = 0.0;
  double d_hat = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int kmeans_empty_repairs = 0;
  bool no_informative = false;  // r_hat == 0: all-ones labeling returned
};

/// Full pipeline: mean degree, counts, embedding, k-means, labels.
DetectionResult cluster(const SparseGraph& g, const DetectConfig& config = {});

/// Label-agreement fraction maximized over label permutations (optimal
/// assignment on the confusion matrix).
double overlap(const IVec& sigma, const IVec& sigma_hat);

/// Max-sum assignment on a square score matrix; returns column for each row.
std::vector<Index> hungarian_max(const Mat& score);

std::string detection_to_json(const DetectionResult& result);

struct TheoryComparison {
  std::string name;
  double measured = 0.0;
  double predicted = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct TheoryReport {
  double d_hat = 0.0;
  Index r0 = 0, r_plus = 0, r_minus = 0;
  double max_imag = 0.0;                    // over informative NB eigenvalues
  std::vector<TheoryComparison> nb_eigenvalues;       // lambda_i vs mu_i
  std::vector<TheoryComparison> outlier_locations;    // smallest eigs of H vs formula
  std::vector<TheoryComparison> inner_products;       // <x,y>, <y,y>, <x,x> vs formulas
  std::vector<double> kernel_residuals;               // ||H(lambda_i) y_i||
  double subspace_dist_plus = 0.0, subspace_dist_minus = 0.0;    // V vs Y
  double phi_dist_plus = 0.0, phi_dist_minus = 0.0;              // V vs community vectors
  double subspace_budget_plus = 0.0, subspace_budget_minus = 0.0;
  double phi_budget_plus = 0.0, phi_budget_minus = 0.0;
  bool all_pass = true;
};

/// Measures the sampled graph's spectra against the closed-form predictions
/// derived from the model: NB outlier locations/realness, inner products,
/// kernel residuals, Bethe-Hessian outlier locations, subspace alignments.
TheoryReport theory_report(const LabeledGraph& lg, const SignalSpectrum& spectrum,
                           double solver_tol = 1e-8, std::uint64_t seed = 0);

std::string theory_to_json(const TheoryReport& report);

}  // namespace bethe
