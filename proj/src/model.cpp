#include "bethe/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

namespace bethe {

ModelParams validate_model(const Mat& P, const Vec& pi, Index n) {
  if (P.rows() != P.cols()) fail(Errc::AsymmetricP, "P must be square");
  const Index r = P.rows();
  if (pi.size() != r) fail(Errc::LengthMismatch, "pi size does not match P");
  if (n <= 0) fail(Errc::BadConfig, "n must be positive");

  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j) {
      if (P(i, j) < 0) fail(Errc::NegativeEntry, "P(" + std::to_string(i) + "," + std::to_string(j) + ") < 0");
      if (std::abs(P(i, j) - P(j, i)) > 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff()))
        fail(Errc::AsymmetricP, "P(" + std::to_string(i) + "," + std::to_string(j) + ") != P(j,i)");
      if (P(i, j) > static_cast<double>(n))
        fail(Errc::InvalidProbability, "P(" + std::to_string(i) + "," + std::to_string(j) + ")/n > 1");
    }

  double pi_sum = 0.0;
  for (Index k = 0; k < r; ++k) {
    if (pi(k) <= 0) fail(Errc::PiNotSimplex, "pi(" + std::to_string(k) + ") <= 0");
    pi_sum += pi(k);
  }
  if (std::abs(pi_sum - 1.0) > 1e-9) fail(Errc::PiNotSimplex, "sum(pi) = " + std::to_string(pi_sum));

  const Vec row_sums = P * pi;  // row sums of P*diag(pi)
  const double d = row_sums(0);
  for (Index i = 1; i < r; ++i)
    if (std::abs(row_sums(i) - d) > 1e-9 * std::max(1.0, std::abs(d)))
      fail(Errc::DegreeRowMismatch, "row " + std::to_string(i) + " sum " + std::to_string(row_sums(i)) +
                                        " != " + std::to_string(d));
  if (d <= 1.0) fail(Errc::SubcriticalDegree, "mean degree d = " + std::to_string(d) + " <= 1");

  return ModelParams{P, pi, n, r, d};
}

namespace {

// Flip each column so its first entry above noise is positive.
void canonical_signs(Mat& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > 1e-12) {
        if (m(i, j) < 0) m.col(j) = -m.col(j);
        break;
      }
    }
  }
}

}  // namespace

SignalSpectrum signal_spectrum(const ModelParams& params) {
  const Index r = params.r;
  const Vec sqrt_pi = params.pi.cwiseSqrt();
  const Mat sym = sqrt_pi.asDiagonal() * params.P * sqrt_pi.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  Vec vals = es.eigenvalues();
  Mat vecs = es.eigenvectors();
  canonical_signs(vecs);

  // Order by decreasing |mu|; positive first on an absolute-value tie.
  std::vector<Index> order(r);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double aa = std::abs(vals(a)), ab = std::abs(vals(b));
    if (aa != ab) return aa > ab;
    return vals(a) > vals(b);
  });

  SignalSpectrum s;
  s.d = params.d;
  s.mu = Vec(r);
  s.psi = Mat(r, r);
  for (Index i = 0; i < r; ++i) {
    s.mu(i) = vals(order[i]);
    s.psi.col(i) = vecs.col(order[i]);
  }
  s.phi = sqrt_pi.cwiseInverse().asDiagonal() * s.psi;
  canonical_signs(s.phi);

  const double abs_tol = 1e-12 * std::max(1.0, std::abs(s.mu(0)));
  for (Index i = 0; i + 1 < r; ++i)
    if (std::abs(std::abs(s.mu(i)) - std::abs(s.mu(i + 1))) <= abs_tol && s.mu(i) * s.mu(i + 1) < 0)
      s.degenerate_tie = true;

  s.r0 = 0;
  while (s.r0 < r && s.mu(s.r0) * s.mu(s.r0) > s.d) ++s.r0;
  s.tau = Vec(s.r0);
  for (Index i = 0; i < s.r0; ++i) {
    s.tau(i) = s.d / (s.mu(i) * s.mu(i));
    if (s.mu(i) > 0) {
      s.mu_plus.push_back(s.mu(i));
      s.idx_plus.push_back(i);
    } else {
      s.mu_minus.push_back(s.mu(i));
      s.idx_minus.push_back(i);
    }
  }
  s.r_plus = static_cast<Index>(s.mu_plus.size());
  s.r_minus = static_cast<Index>(s.mu_minus.size());
  // mu_plus descending, mu_minus ascending; keep idx lists aligned.
  {
    std::vector<size_t> p(s.mu_plus.size());
    std::iota(p.begin(), p.end(), size_t{0});
    std::sort(p.begin(), p.end(), [&](size_t a, size_t b) { return s.mu_plus[a] > s.mu_plus[b]; });
    auto mp = s.mu_plus; auto ip = s.idx_plus;
    for (size_t i = 0; i < p.size(); ++i) { s.mu_plus[i] = mp[p[i]]; s.idx_plus[i] = ip[p[i]]; }
    std::vector<size_t> q(s.mu_minus.size());
    std::iota(q.begin(), q.end(), size_t{0});
    std::sort(q.begin(), q.end(), [&](size_t a, size_t b) { return s.mu_minus[a] < s.mu_minus[b]; });
    auto mm = s.mu_minus; auto im = s.idx_minus;
    for (size_t i = 0; i < q.size(); ++i) { s.mu_minus[i] = mm[q[i]]; s.idx_minus[i] = im[q[i]]; }
  }
  return s;
}

namespace {

// nearest-integer block sizes, remainder absorbed by the largest block
std::vector<Index> block_sizes(const ModelParams& params) {
  std::vector<Index> sizes(params.r);
  Index total = 0;
  for (Index k = 0; k < params.r; ++k) {
    sizes[k] = static_cast<Index>(std::llround(static_cast<double>(params.n) * params.pi(k)));
    total += sizes[k];
  }
  Index largest = 0;
  for (Index k = 1; k < params.r; ++k)
    if (params.pi(k) > params.pi(largest)) largest = k;
  sizes[largest] += params.n - total;
  if (sizes[largest] < 0) fail(Errc::BadConfig, "block rounding produced a negative block size");
  return sizes;
}

}  // namespace

LabeledGraph sample_graph(const ModelParams& params, std::uint64_t seed) {
  const Index n = params.n;
  const auto sizes = block_sizes(params);

  IVec sigma(n);
  std::vector<Index> start(params.r + 1, 0);
  for (Index k = 0; k < params.r; ++k) {
    start[k + 1] = start[k] + sizes[k];
    for (Index i = start[k]; i < start[k + 1]; ++i) sigma(i) = static_cast<int>(k) + 1;
  }

  std::uint64_t state = seed;
  std::mt19937_64 rng(splitmix64(state));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(static_cast<size_t>(params.d * static_cast<double>(n) / 2 * 1.2) + 16);

  // Geometric skipping over each block pair: expected O(m + r^2) draws.
  for (Index a = 0; a < params.r; ++a) {
    for (Index b = a; b < params.r; ++b) {
      const double p = params.P(a, b) / static_cast<double>(n);
      if (p <= 0.0) continue;
      const Index na = sizes[a], nb = sizes[b];
      const std::int64_t total = (a == b) ? static_cast<std::int64_t>(na) * (na - 1) / 2
                                          : static_cast<std::int64_t>(na) * nb;
      if (total == 0) continue;
      const double log1mp = std::log1p(-p);
      std::int64_t w = -1;
      while (true) {
        if (p < 1.0) {
          const double u = unif(rng);
          w += 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / log1mp));
        } else {
          w += 1;
        }
        if (w >= total) break;
        Index i, j;
        if (a == b) {
          // w-th pair (i<j) within the block, row-major over the strict upper triangle
          const double fi = (2.0 * static_cast<double>(na) - 1.0 -
                             std::sqrt((2.0 * static_cast<double>(na) - 1.0) * (2.0 * static_cast<double>(na) - 1.0) -
                                       8.0 * static_cast<double>(w))) / 2.0;
          Index row = static_cast<Index>(fi);
          auto row_start = [&](Index rr) {
            return rr * (2 * na - rr - 1) / 2;
          };
          while (row > 0 && row_start(row) > w) --row;
          while (row + 1 < na && row_start(row + 1) <= w) ++row;
          const Index col = row + 1 + static_cast<Index>(w - row_start(row));
          i = start[a] + row;
          j = start[a] + col;
        } else {
          i = start[a] + static_cast<Index>(w / nb);
          j = start[b] + static_cast<Index>(w % nb);
        }
        edges.emplace_back(i, j);
      }
    }
  }

  LabeledGraph out;
  out.graph = SparseGraph::from_edges(n, std::move(edges));
  out.sigma = std::move(sigma);
  out.params = params;
  return out;
}

OutlierPrediction predicted_outlier_locations(const SignalSpectrum& s, Sign sign) {
  OutlierPrediction out;
  const double sqrt_d = std::sqrt(s.d);
  const auto& mus = sign == Sign::Plus ? s.mu_plus : s.mu_minus;
  const double t = sign == Sign::Plus ? sqrt_d : -sqrt_d;
  for (double mu : mus) {
    out.location.push_back((t - mu) * (t - s.d / mu));
    const double tau = s.d / (mu * mu);
    out.normalized.push_back((1.0 - 1.0 / std::sqrt(tau)) * (1.0 - std::sqrt(tau)));
  }
  return out;
}

CrossMoments predicted_cross_moments(const SignalSpectrum& s, Index i) {
  if (i < 1 || i > s.r0)
    fail(Errc::IndexOutOfInformativeRange, "i = " + std::to_string(i) + ", r0 = " + std::to_string(s.r0));
  const double mu = s.mu(i - 1);
  const double tau = s.tau(i - 1);
  const double d = s.d;
  CrossMoments cm;
  cm.yy = 1.0;
  cm.xy = (d + 1.0 - tau) / mu;
  cm.xx = (d * d + d + (2.0 * d + 1.0) * (1.0 - tau)) / (mu * mu);
  cm.resid = std::sqrt((d + tau * (1.0 - tau)) / (mu * mu));
  return cm;
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, path + ": " + e.what());
  }
  if (!j.contains("P") || !j.contains("pi") || !j.contains("n"))
    fail(Errc::ParseError, path + ": model file needs keys P, pi, n");
  const auto& jp = j["P"];
  const Index r = static_cast<Index>(jp.size());
  Mat P(r, r);
  for (Index i = 0; i < r; ++i) {
    if (static_cast<Index>(jp[i].size()) != r) fail(Errc::ParseError, path + ": P is not square");
    for (Index k = 0; k < r; ++k) P(i, k) = jp[i][k].get<double>();
  }
  const auto& jpi = j["pi"];
  if (static_cast<Index>(jpi.size()) != r) fail(Errc::ParseError, path + ": pi size mismatch");
  Vec pi(r);
  for (Index k = 0; k < r; ++k) pi(k) = jpi[k].get<double>();
  return validate_model(P, pi, j["n"].get<Index>());
}

void save_model(const ModelParams& params, const std::string& path) {
  nlohmann::json j;
  j["P"] = nlohmann::json::array();
  for (Index i = 0; i < params.r; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index k = 0; k < params.r; ++k) row.push_back(params.P(i, k));
    j["P"].push_back(row);
  }
  j["pi"] = nlohmann::json::array();
  for (Index k = 0; k < params.r; ++k) j["pi"].push_back(params.pi(k));
  j["n"] = params.n;
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << j.dump(2) << "\n";
}

ModelParams two_block_model(double d, double mu2, Index n) {
  Mat P(2, 2);
  P << d + mu2, d - mu2, d - mu2, d + mu2;
  Vec pi(2);
  pi << 0.5, 0.5;
  return validate_model(P, pi, n);
}

}  // namespace bethe
