#include "bethe/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

namespace bethe {

std::pair<Index, Index> estimate_counts(const SparseGraph& g, double epsilon) {
  const Index n = g.num_vertices();
  if (n == 0) fail(Errc::SubcriticalDegree, "empty graph");
  const double d_hat = mean_degree(g);
  if (d_hat <= 1.0)
    fail(Errc::SubcriticalDegree, "mean degree " + std::to_string(d_hat) + " <= 1: no detectable structure");
  const double eps = epsilon < 0 ? default_epsilon(n) : epsilon;
  const double t = std::sqrt(d_hat);
  const Index r_plus = count_below(bethe_hessian(g, t), eps);
  const Index r_minus = count_below(bethe_hessian(g, -t), eps);
  return {r_plus, r_minus};
}

Embedding embed(const SparseGraph& g, double epsilon, double solver_tol, std::uint64_t seed) {
  const auto [r_plus, r_minus] = estimate_counts(g, epsilon);
  Embedding e;
  e.d_hat = mean_degree(g);
  e.epsilon = epsilon < 0 ? default_epsilon(g.num_vertices()) : epsilon;
  const double t = std::sqrt(e.d_hat);
  const EigPairs plus = smallest_eigs(bethe_hessian(g, t), r_plus, solver_tol, derive_seed(seed, 1));
  const EigPairs minus = smallest_eigs(bethe_hessian(g, -t), r_minus, solver_tol, derive_seed(seed, 2));
  e.v_plus = plus.vectors;
  e.evals_plus = plus.values;
  e.v_minus = minus.vectors;
  e.evals_minus = minus.values;
  return e;
}

namespace {

double sq_dist(const Mat& pts, Index row, const Vec& center) {
  return (pts.row(row).transpose() - center).squaredNorm();
}

struct LloydRun {
  IVec labels;
  Mat centers;
  double cost = 0.0;
  int empty_repairs = 0;
};

LloydRun lloyd_once(const Mat& pts, Index r, std::mt19937_64& rng) {
  const Index n = pts.rows();
  const Index dim = pts.cols();
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // k-means++ seeding
  Mat centers(r, dim);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.row(0) = pts.row(pick(rng));
  Vec d2 = Vec::Zero(n);
  for (Index i = 0; i < n; ++i) d2(i) = (pts.row(i) - centers.row(0)).squaredNorm();
  for (Index c = 1; c < r; ++c) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total > 0) {
      double target = unif(rng) * total, acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) { chosen = i; break; }
        chosen = i;
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = pts.row(chosen);
    for (Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (pts.row(i) - centers.row(c)).squaredNorm());
  }

  LloydRun run;
  run.labels = IVec::Zero(n);
  IVec counts(r);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    counts.setZero();
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = (pts.row(i) - centers.row(0)).squaredNorm();
      for (Index c = 1; c < r; ++c) {
        const double d = (pts.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) { best_d = d; best = c; }
      }
      if (run.labels(i) != static_cast<int>(best)) changed = true;
      run.labels(i) = static_cast<int>(best);
      counts(best)++;
    }
    if (!changed && iter > 0) break;
    Mat sums = Mat::Zero(r, dim);
    for (Index i = 0; i < n; ++i) sums.row(run.labels(i)) += pts.row(i);
    for (Index c = 0; c < r; ++c) {
      if (counts(c) > 0) {
        centers.row(c) = sums.row(c) / counts(c);
      } else {
        // re-seed an empty cluster from the point farthest from its center
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < n; ++i) {
          const double d = (pts.row(i) - centers.row(run.labels(i))).squaredNorm();
          if (d > far_d) { far_d = d; far = i; }
        }
        centers.row(c) = pts.row(far);
        run.empty_repairs++;
      }
    }
  }
  run.cost = 0.0;
  for (Index i = 0; i < n; ++i) run.cost += (pts.row(i) - centers.row(run.labels(i))).squaredNorm();
  run.centers = centers;
  return run;
}

}  // namespace

KmeansResult kmeans(const Mat& v, Index r, int restarts, std::uint64_t seed) {
  if (r < 1) fail(Errc::BadConfig, "k-means needs r >= 1");
  if (v.rows() == 0) fail(Errc::BadConfig, "k-means needs at least one point");
  KmeansResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, restarts); ++restart) {
    std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(restart));
    std::mt19937_64 rng(s);
    LloydRun run = lloyd_once(v, r, rng);
    if (run.cost < best.cost) {
      best.cost = run.cost;
      best.labels = run.labels;
      best.centers = run.centers;
      best.empty_repairs = run.empty_repairs;
      best.best_restart = restart;
    }
  }
  for (Index i = 0; i < best.labels.size(); ++i) best.labels(i) += 1;  // labels in 1..r
  return best;
}

DetectionResult cluster(const SparseGraph& g, const DetectConfig& config) {
  DetectionResult res;
  res.seed = config.seed;
  res.d_hat = mean_degree(g);
  res.epsilon = config.epsilon < 0 ? default_epsilon(g.num_vertices()) : config.epsilon;

  const Embedding e = embed(g, config.epsilon, config.solver_tol, derive_seed(config.seed, 11));
  res.r_hat_plus = e.v_plus.cols();
  res.r_hat_minus = e.v_minus.cols();
  res.r_hat = res.r_hat_plus + res.r_hat_minus;
  res.v_plus = e.v_plus;
  res.v_minus = e.v_minus;

  if (res.r_hat == 0) {
    res.no_informative = true;
    res.sigma_hat = IVec::Ones(g.num_vertices());
    return res;
  }

  Mat v(g.num_vertices(), res.r_hat);
  v.leftCols(res.r_hat_plus) = e.v_plus;
  v.rightCols(res.r_hat_minus) = e.v_minus;
  const KmeansResult km = kmeans(v, res.r_hat, config.kmeans_restarts, derive_seed(config.seed, 12));
  res.sigma_hat = km.labels;
  res.kmeans_cost = km.cost;
  res.kmeans_empty_repairs = km.empty_repairs;
  return res;
}

std::vector<Index> hungarian_max(const Mat& score) {
  // potentials-based assignment on the negated matrix, O(r^3)
  const Index n = score.rows();
  if (score.cols() != n) fail(Errc::LengthMismatch, "assignment matrix must be square");
  const Mat a = -score;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      Index j1 = 0;
      double delta = inf;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
        if (minv[j] < delta) { delta = minv[j]; j1 = j; }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(n, 0);
  for (Index j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double overlap(const IVec& sigma, const IVec& sigma_hat) {
  if (sigma.size() != sigma_hat.size()) fail(Errc::LengthMismatch, "label vectors differ in length");
  const Index n = sigma.size();
  if (n == 0) return 1.0;

  std::map<int, Index> map_a, map_b;
  for (Index i = 0; i < n; ++i) {
    map_a.emplace(sigma(i), static_cast<Index>(map_a.size()));
    map_b.emplace(sigma_hat(i), static_cast<Index>(map_b.size()));
  }
  const Index r = std::max(map_a.size(), map_b.size());
  Mat confusion = Mat::Zero(r, r);
  for (Index i = 0; i < n; ++i) confusion(map_a[sigma(i)], map_b[sigma_hat(i)]) += 1.0;

  const auto assign = hungarian_max(confusion);
  double agree = 0.0;
  for (Index i = 0; i < r; ++i) agree += confusion(i, assign[i]);
  return agree / static_cast<double>(n);
}

namespace {

TheoryComparison compare(const std::string& name, double measured, double predicted, double tol) {
  TheoryComparison c;
  c.name = name;
  c.measured = measured;
  c.predicted = predicted;
  c.gap = std::abs(measured - predicted);
  c.tolerance = tol;
  c.pass = c.gap <= tol;
  return c;
}

}  // namespace

TheoryReport theory_report(const LabeledGraph& lg, const SignalSpectrum& spectrum, double solver_tol,
                           std::uint64_t seed) {
  if (spectrum.r0 < 1) fail(Errc::BelowThreshold, "no informative eigenvalues in the model");
  const SparseGraph& g = lg.graph;
  const Index n = g.num_vertices();
  if (n == 0) fail(Errc::SubcriticalDegree, "empty graph");

  TheoryReport rep;
  rep.d_hat = mean_degree(g);
  rep.r0 = spectrum.r0;
  rep.r_plus = spectrum.r_plus;
  rep.r_minus = spectrum.r_minus;
  const double d = spectrum.d;

  const GeneralOperator btilde = reduced_nb(g);
  NBEigenbundle plus, minus;
  if (spectrum.r_plus > 0)
    plus = leading_eigs_nonsym(btilde, spectrum.r_plus, RitzSide::LargestReal, solver_tol,
                               derive_seed(seed, 21));
  if (spectrum.r_minus > 0)
    minus = leading_eigs_nonsym(btilde, spectrum.r_minus, RitzSide::SmallestReal, solver_tol,
                                derive_seed(seed, 22));

  // master informative list in |mu|-descending order
  std::vector<double> lambdas(spectrum.r0, 0.0), imag(spectrum.r0, 0.0);
  Mat xs(n, spectrum.r0), ys(n, spectrum.r0);
  for (Index j = 0; j < spectrum.r_plus; ++j) {
    const Index master = spectrum.idx_plus[j];
    lambdas[master] = plus.lambdas(j).real();
    imag[master] = plus.imag_norms(j);
    xs.col(master) = plus.x_parts.col(j);
    ys.col(master) = plus.y_parts.col(j);
  }
  for (Index j = 0; j < spectrum.r_minus; ++j) {
    const Index master = spectrum.idx_minus[j];
    lambdas[master] = minus.lambdas(j).real();
    imag[master] = minus.imag_norms(j);
    xs.col(master) = minus.x_parts.col(j);
    ys.col(master) = minus.y_parts.col(j);
  }
  rep.max_imag = *std::max_element(imag.begin(), imag.end());

  // (a) reduced-NB outliers sit at the signal eigenvalues, and are real
  for (Index i = 0; i < spectrum.r0; ++i) {
    rep.nb_eigenvalues.push_back(
        compare("lambda_" + std::to_string(i + 1), lambdas[i], spectrum.mu(i), 0.5));
    rep.nb_eigenvalues.push_back(compare("imag_lambda_" + std::to_string(i + 1), imag[i], 0.0,
                                         1e-6 * std::abs(lambdas[i])));
  }

  // (c) inner products vs the asymptotic formulas
  for (Index i = 0; i < spectrum.r0; ++i) {
    const CrossMoments cm = predicted_cross_moments(spectrum, i + 1);
    rep.inner_products.push_back(compare("y" + std::to_string(i + 1) + ".y" + std::to_string(i + 1),
                                         ys.col(i).dot(ys.col(i)), cm.yy, 0.05));
    rep.inner_products.push_back(compare("x" + std::to_string(i + 1) + ".y" + std::to_string(i + 1),
                                         xs.col(i).dot(ys.col(i)), cm.xy, 0.1));
    rep.inner_products.push_back(compare("x" + std::to_string(i + 1) + ".x" + std::to_string(i + 1),
                                         xs.col(i).dot(xs.col(i)), cm.xx, 0.15));
    for (Index j = i + 1; j < spectrum.r0; ++j) {
      rep.inner_products.push_back(compare("y" + std::to_string(i + 1) + ".y" + std::to_string(j + 1),
                                           ys.col(i).dot(ys.col(j)), 0.0, 0.05));
      rep.inner_products.push_back(compare("x" + std::to_string(i + 1) + ".y" + std::to_string(j + 1),
                                           xs.col(i).dot(ys.col(j)), 0.0, 0.1));
    }
  }

  // kernel property: y_i is a null vector of H(lambda_i)
  for (Index i = 0; i < spectrum.r0; ++i) {
    const SymmetricOperator h = bethe_hessian(g, lambdas[i]);
    rep.kernel_residuals.push_back((h.matrix * ys.col(i)).norm());
  }

  // (d) Bethe-Hessian outlier locations vs the closed form
  const double sqrt_dhat = std::sqrt(rep.d_hat);
  EigPairs h_plus, h_minus;
  if (spectrum.r_plus > 0) {
    h_plus = smallest_eigs(bethe_hessian(g, sqrt_dhat), spectrum.r_plus, solver_tol, derive_seed(seed, 23));
    const OutlierPrediction pred = predicted_outlier_locations(spectrum, Sign::Plus);
    const double budget = std::sqrt(static_cast<double>(spectrum.r_plus) * d);
    for (Index k = 0; k < spectrum.r_plus; ++k)
      rep.outlier_locations.push_back(
          compare("H(+sqrt(d)) eig " + std::to_string(k + 1), h_plus.values(k), pred.location[k], budget));
  }
  if (spectrum.r_minus > 0) {
    h_minus = smallest_eigs(bethe_hessian(g, -sqrt_dhat), spectrum.r_minus, solver_tol, derive_seed(seed, 24));
    const OutlierPrediction pred = predicted_outlier_locations(spectrum, Sign::Minus);
    const double budget = std::sqrt(static_cast<double>(spectrum.r_minus) * d);
    for (Index k = 0; k < spectrum.r_minus; ++k)
      rep.outlier_locations.push_back(
          compare("H(-sqrt(d)) eig " + std::to_string(k + 1), h_minus.values(k), pred.location[k], budget));
  }

  // (e)/(f) subspace alignments: V vs Y, and V vs the community vectors
  if (spectrum.r_plus > 0) {
    Mat y_plus(n, spectrum.r_plus), phi_plus(n, spectrum.r_plus);
    double tau_sum = 0.0;
    for (Index j = 0; j < spectrum.r_plus; ++j) {
      const Index master = spectrum.idx_plus[j];
      y_plus.col(j) = ys.col(master);
      for (Index v = 0; v < n; ++v) phi_plus(v, j) = spectrum.phi(lg.sigma(v) - 1, master);
      phi_plus.col(j) /= phi_plus.col(j).norm();
      tau_sum += spectrum.tau(master);
    }
    rep.subspace_dist_plus = subspace_distance(h_plus.vectors, y_plus).dist;
    rep.phi_dist_plus = subspace_distance(h_plus.vectors, phi_plus).dist;
    rep.subspace_budget_plus = 3.0 * std::sqrt(static_cast<double>(spectrum.r_plus) / d);
    rep.phi_budget_plus = 2.0 * tau_sum + rep.subspace_budget_plus;
  }
  if (spectrum.r_minus > 0) {
    Mat y_minus(n, spectrum.r_minus), phi_minus(n, spectrum.r_minus);
    double tau_sum = 0.0;
    for (Index j = 0; j < spectrum.r_minus; ++j) {
      const Index master = spectrum.idx_minus[j];
      y_minus.col(j) = ys.col(master);
      for (Index v = 0; v < n; ++v) phi_minus(v, j) = spectrum.phi(lg.sigma(v) - 1, master);
      phi_minus.col(j) /= phi_minus.col(j).norm();
      tau_sum += spectrum.tau(master);
    }
    rep.subspace_dist_minus = subspace_distance(h_minus.vectors, y_minus).dist;
    rep.phi_dist_minus = subspace_distance(h_minus.vectors, phi_minus).dist;
    rep.subspace_budget_minus = 3.0 * std::sqrt(static_cast<double>(spectrum.r_minus) / d);
    rep.phi_budget_minus = 2.0 * tau_sum + rep.subspace_budget_minus;
  }

  for (const auto& c : rep.nb_eigenvalues) rep.all_pass = rep.all_pass && c.pass;
  for (const auto& c : rep.inner_products) rep.all_pass = rep.all_pass && c.pass;
  for (const auto& c : rep.outlier_locations) rep.all_pass = rep.all_pass && c.pass;
  for (Index i = 0; i < spectrum.r0; ++i)
    rep.all_pass = rep.all_pass &&
                   rep.kernel_residuals[i] <= 1e-6 * (1.0 + lambdas[i] * lambdas[i]);
  if (spectrum.r_plus > 0)
    rep.all_pass = rep.all_pass && rep.subspace_dist_plus <= rep.subspace_budget_plus &&
                   rep.phi_dist_plus <= rep.phi_budget_plus;
  if (spectrum.r_minus > 0)
    rep.all_pass = rep.all_pass && rep.subspace_dist_minus <= rep.subspace_budget_minus &&
                   rep.phi_dist_minus <= rep.phi_budget_minus;
  return rep;
}

namespace {

nlohmann::json comparison_json(const TheoryComparison& c) {
  return {{"name", c.name},     {"measured", c.measured},   {"predicted", c.predicted},
          {"gap", c.gap},       {"tolerance", c.tolerance}, {"pass", c.pass}};
}

}  // namespace

std::string detection_to_json(const DetectionResult& result) {
  nlohmann::json j;
  j["r_hat_plus"] = result.r_hat_plus;
  j["r_hat_minus"] = result.r_hat_minus;
  j["r_hat"] = result.r_hat;
  j["d_hat"] = result.d_hat;
  j["epsilon"] = result.epsilon;
  j["seed"] = result.seed;
  j["kmeans_cost"] = result.kmeans_cost;
  j["kmeans_empty_repairs"] = result.kmeans_empty_repairs;
  j["no_informative"] = result.no_informative;
  j["sigma_hat"] = std::vector<int>(result.sigma_hat.data(), result.sigma_hat.data() + result.sigma_hat.size());
  return j.dump(2);
}

std::string theory_to_json(const TheoryReport& report) {
  nlohmann::json j;
  j["d_hat"] = report.d_hat;
  j["r0"] = report.r0;
  j["r_plus"] = report.r_plus;
  j["r_minus"] = report.r_minus;
  j["max_imag"] = report.max_imag;
  j["nb_eigenvalues"] = nlohmann::json::array();
  for (const auto& c : report.nb_eigenvalues) j["nb_eigenvalues"].push_back(comparison_json(c));
  j["outlier_locations"] = nlohmann::json::array();
  for (const auto& c : report.outlier_locations) j["outlier_locations"].push_back(comparison_json(c));
  j["inner_products"] = nlohmann::json::array();
  for (const auto& c : report.inner_products) j["inner_products"].push_back(comparison_json(c));
  j["kernel_residuals"] = report.kernel_residuals;
  j["subspace_dist_plus"] = report.subspace_dist_plus;
  j["subspace_dist_minus"] = report.subspace_dist_minus;
  j["subspace_budget_plus"] = report.subspace_budget_plus;
  j["subspace_budget_minus"] = report.subspace_budget_minus;
  j["phi_dist_plus"] = report.phi_dist_plus;
  j["phi_dist_minus"] = report.phi_dist_minus;
  j["phi_budget_plus"] = report.phi_budget_plus;
  j["phi_budget_minus"] = report.phi_budget_minus;
  j["all_pass"] = report.all_pass;
  return j.dump(2);
}

}  // namespace bethe
