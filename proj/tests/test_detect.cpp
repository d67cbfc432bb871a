#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bethe/detect.hpp"
#include "bethe/model.hpp"
#include "test_util.hpp"

using namespace bethe;
using namespace bethe::test;

namespace {

ModelParams assortative(Index n) {
  Mat p(2, 2);
  p << 10, 2, 2, 10;
  Vec pi(2);
  pi << 0.5, 0.5;
  return validate_model(p, pi, n);
}

ModelParams disassortative(Index n) {
  Mat p(2, 2);
  p << 2, 10, 10, 2;
  Vec pi(2);
  pi << 0.5, 0.5;
  return validate_model(p, pi, n);
}

double brute_force_overlap(const IVec& sigma, const IVec& sigma_hat) {
  std::vector<int> labels_a, labels_b;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (std::find(labels_a.begin(), labels_a.end(), sigma(i)) == labels_a.end())
      labels_a.push_back(sigma(i));
    if (std::find(labels_b.begin(), labels_b.end(), sigma_hat(i)) == labels_b.end())
      labels_b.push_back(sigma_hat(i));
  }
  while (labels_b.size() < labels_a.size()) labels_b.push_back(-1 - static_cast<int>(labels_b.size()));
  while (labels_a.size() < labels_b.size()) labels_a.push_back(-1 - static_cast<int>(labels_a.size()));
  std::sort(labels_b.begin(), labels_b.end());
  double best = 0.0;
  do {
    Index agree = 0;
    for (Index i = 0; i < sigma.size(); ++i) {
      const auto pos = std::find(labels_a.begin(), labels_a.end(), sigma(i)) - labels_a.begin();
      if (labels_b[pos] == sigma_hat(i)) ++agree;
    }
    best = std::max(best, static_cast<double>(agree) / static_cast<double>(sigma.size()));
  } while (std::next_permutation(labels_b.begin(), labels_b.end()));
  return best;
}

}  // namespace

TEST_CASE("estimate_counts on the two benchmarks") {
  const LabeledGraph a = sample_graph(assortative(3000), 1);
  const auto [ap, am] = estimate_counts(a.graph);
  CHECK(ap == 2);
  CHECK(am == 0);

  const LabeledGraph d = sample_graph(disassortative(3000), 1);
  const auto [dp, dm] = estimate_counts(d.graph);
  CHECK(dp == 1);
  CHECK(dm == 1);
}

TEST_CASE("estimate_counts refuses subcritical graphs") {
  const SparseGraph empty = SparseGraph::from_edges(50, {});
  try {
    estimate_counts(empty);
    FAIL("expected SubcriticalDegree");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SubcriticalDegree);
  }
}

TEST_CASE("embed returns sign-split community columns") {
  const LabeledGraph lg = sample_graph(assortative(2000), 5);
  const Embedding e = embed(lg.graph, -1.0, 1e-8, 3);
  REQUIRE(e.v_plus.cols() == 2);
  CHECK(e.v_minus.cols() == 0);
  CHECK(e.evals_plus(0) < e.evals_plus(1));
  CHECK(e.evals_plus(1) < -e.epsilon);

  // column 1 is near-constant-sign, column 2 splits by community
  const Vec c1 = e.v_plus.col(0);
  Index sign_flips = 0;
  for (Index i = 0; i < c1.size(); ++i)
    if (c1(i) * c1(0) < 0) ++sign_flips;
  CHECK(std::min(sign_flips, c1.size() - sign_flips) < c1.size() / 10);

  Vec community(lg.sigma.size());
  for (Index i = 0; i < community.size(); ++i) community(i) = lg.sigma(i) == 1 ? 1.0 : -1.0;
  community.normalize();
  CHECK(std::abs(community.dot(e.v_plus.col(1))) > 0.6);

  const Embedding ed = embed(sample_graph(disassortative(2000), 5).graph, -1.0, 1e-8, 3);
  CHECK(ed.v_plus.cols() == 1);
  CHECK(ed.v_minus.cols() == 1);
}

TEST_CASE("kmeans separates well-separated clouds exactly") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss;
  const Index n = 200;
  Mat pts(n, 2);
  IVec truth(n);
  for (Index i = 0; i < n; ++i) {
    const bool second = i >= n / 2;
    truth(i) = second ? 2 : 1;
    pts(i, 0) = (second ? 10.0 : -10.0) + 0.1 * gauss(rng);
    pts(i, 1) = 0.1 * gauss(rng);
  }
  const KmeansResult km = kmeans(pts, 2, 5, 1);
  CHECK(overlap(truth, km.labels) == doctest::Approx(1.0));
  // cost is about the within-cloud variance: ~ n * dim * 0.01
  CHECK(km.cost < 4.0 * static_cast<double>(n) * 0.01);
}

TEST_CASE("kmeans on identical points has zero cost") {
  Mat pts = Mat::Ones(40, 3);
  const KmeansResult km = kmeans(pts, 2, 3, 7);
  CHECK(km.cost == doctest::Approx(0.0));
  for (Index i = 0; i < 40; ++i) CHECK((km.labels(i) == 1 || km.labels(i) == 2));
}

TEST_CASE("kmeans restart saturation on a planted mixture") {
  // 20 restarts come within 1% of the best cost over 1000 restarts
  std::mt19937_64 rng(101);
  std::normal_distribution<double> gauss;
  const Index per = 60;
  Mat pts(3 * per, 2);
  const double cx[3] = {0.0, 4.0, 8.0};
  const double cy[3] = {0.0, 3.0, -2.0};
  for (Index c = 0; c < 3; ++c)
    for (Index i = 0; i < per; ++i) {
      pts(c * per + i, 0) = cx[c] + gauss(rng);
      pts(c * per + i, 1) = cy[c] + gauss(rng);
    }
  const KmeansResult few = kmeans(pts, 3, 20, 55);
  const KmeansResult many = kmeans(pts, 3, 1000, 55);
  CHECK(few.cost <= 1.01 * many.cost);
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  Mat pts(100, 2);
  for (Index i = 0; i < 100; ++i)
    for (Index j = 0; j < 2; ++j) pts(i, j) = gauss(rng);
  const KmeansResult a = kmeans(pts, 4, 10, 42);
  const KmeansResult b = kmeans(pts, 4, 10, 42);
  CHECK((a.labels - b.labels).cwiseAbs().maxCoeff() == 0);
  CHECK(a.cost == doctest::Approx(b.cost));
}

TEST_CASE("overlap basics") {
  IVec sigma(6), same(6), relabeled(6), constant(6);
  sigma << 1, 1, 2, 2, 3, 3;
  same = sigma;
  relabeled << 3, 3, 1, 1, 2, 2;
  constant.setConstant(1);
  CHECK(overlap(sigma, same) == doctest::Approx(1.0));
  CHECK(overlap(sigma, relabeled) == doctest::Approx(1.0));
  CHECK(overlap(sigma, constant) == doctest::Approx(1.0 / 3.0));  // largest block fraction

  IVec short_vec(3);
  short_vec << 1, 2, 3;
  CHECK_THROWS_AS(overlap(sigma, short_vec), Error);
}

TEST_CASE("overlap invariances and the identity-permutation lower bound") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 30;
    const int r = 2 + static_cast<int>(rng() % 4);
    IVec a(n), b(n);
    for (Index i = 0; i < n; ++i) {
      a(i) = 1 + static_cast<int>(rng() % r);
      b(i) = 1 + static_cast<int>(rng() % r);
    }
    const double ov = overlap(a, b);

    // dominates the identity permutation
    Index agree = 0;
    for (Index i = 0; i < n; ++i)
      if (a(i) == b(i)) ++agree;
    CHECK(ov >= static_cast<double>(agree) / n - 1e-12);

    // invariant under relabeling either argument
    std::vector<int> perm(r + 1);
    for (int k = 0; k <= r; ++k) perm[k] = k;
    std::shuffle(perm.begin() + 1, perm.end(), rng);
    IVec b2(n);
    for (Index i = 0; i < n; ++i) b2(i) = perm[b(i)];
    CHECK(overlap(a, b2) == doctest::Approx(ov));
    IVec a2(n);
    for (Index i = 0; i < n; ++i) a2(i) = perm[a(i)];
    CHECK(overlap(a2, b) == doctest::Approx(ov));

    // exact against brute force for r <= 6
    CHECK(ov == doctest::Approx(brute_force_overlap(a, b)));
  }
}

TEST_CASE("hungarian assignment matches brute force") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Index r = 2 + static_cast<Index>(rng() % 5);
    Mat score(r, r);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j) score(i, j) = unif(rng);
    const auto assign = hungarian_max(score);
    double got = 0.0;
    for (Index i = 0; i < r; ++i) got += score(i, assign[i]);

    std::vector<Index> perm(r);
    for (Index i = 0; i < r; ++i) perm[i] = i;
    double best = 0.0;
    do {
      double s = 0.0;
      for (Index i = 0; i < r; ++i) s += score(i, perm[i]);
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best));
  }
}

TEST_CASE("cluster recovers the two benchmarks at moderate size") {
  DetectConfig config;
  config.seed = 9;
  const LabeledGraph a = sample_graph(assortative(2000), 2);
  const DetectionResult ra = cluster(a.graph, config);
  CHECK(ra.r_hat == 2);
  CHECK(overlap(a.sigma, ra.sigma_hat) >= 0.75);

  const LabeledGraph d = sample_graph(disassortative(2000), 2);
  const DetectionResult rd = cluster(d.graph, config);
  CHECK(rd.r_hat_plus == 1);
  CHECK(rd.r_hat_minus == 1);
  CHECK(overlap(d.sigma, rd.sigma_hat) >= 0.75);
}

TEST_CASE("cluster is deterministic for fixed seeds") {
  const LabeledGraph lg = sample_graph(assortative(1200), 6);
  DetectConfig config;
  config.seed = 77;
  const DetectionResult r1 = cluster(lg.graph, config);
  const DetectionResult r2 = cluster(lg.graph, config);
  CHECK((r1.sigma_hat - r2.sigma_hat).cwiseAbs().maxCoeff() == 0);
  CHECK(r1.kmeans_cost == doctest::Approx(r2.kmeans_cost));
}

TEST_CASE("cluster flags graphs with no informative eigenvalues") {
  // long path: d_hat just below 2, all reduced-nb eigenvalues in [-1, 1],
  // so no eigenvalue of H(±sqrt(d_hat)) falls below -1/log n
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i + 1 < 200; ++i) edges.emplace_back(i, i + 1);
  const SparseGraph path = SparseGraph::from_edges(200, std::move(edges));
  const DetectionResult res = cluster(path, {});
  CHECK(res.no_informative);
  CHECK(res.r_hat == 0);
  CHECK(res.sigma_hat.minCoeff() == 1);
  CHECK(res.sigma_hat.maxCoeff() == 1);
}

TEST_CASE("theory report structure and sharp checks at moderate size") {
  const ModelParams model = assortative(2500);
  const SignalSpectrum spectrum = signal_spectrum(model);
  const LabeledGraph lg = sample_graph(model, 8);
  const TheoryReport rep = theory_report(lg, spectrum, 1e-9, 8);

  CHECK(rep.r0 == 2);
  CHECK(rep.r_plus == 2);
  CHECK(rep.r_minus == 0);
  REQUIRE(rep.nb_eigenvalues.size() == 4);  // lambda and imag per informative i
  CHECK(rep.nb_eigenvalues[0].gap < 0.5);
  CHECK(rep.nb_eigenvalues[2].gap < 0.5);
  CHECK(rep.max_imag <= 1e-6 * 6.0);

  REQUIRE(rep.kernel_residuals.size() == 2);
  for (double kres : rep.kernel_residuals) CHECK(kres <= 1e-6 * (1.0 + 36.0));

  REQUIRE(rep.outlier_locations.size() == 2);
  for (const auto& c : rep.outlier_locations) CHECK(c.pass);

  CHECK(rep.subspace_dist_plus <= rep.subspace_budget_plus);
  CHECK(rep.phi_dist_plus > 0.0);

  const std::string js = theory_to_json(rep);
  CHECK(js.find("outlier_locations") != std::string::npos);
  CHECK(js.find("subspace_dist_plus") != std::string::npos);
}

TEST_CASE("theory report rejects signal-free models") {
  SignalSpectrum flat;
  flat.r0 = 0;
  const LabeledGraph lg = sample_graph(assortative(200), 1);
  CHECK_THROWS_AS(theory_report(lg, flat, 1e-8, 1), Error);
}

TEST_CASE("detection json serialization") {
  const LabeledGraph lg = sample_graph(assortative(800), 3);
  DetectConfig config;
  config.seed = 4;
  const DetectionResult res = cluster(lg.graph, config);
  const std::string js = detection_to_json(res);
  CHECK(js.find("\"r_hat_plus\": 2") != std::string::npos);
  CHECK(js.find("\"sigma_hat\"") != std::string::npos);
}

TEST_CASE("nu is non-increasing for informative signal strengths") {
  // nu(mu) = (t - (d+1-d/mu^2)/mu)(t - mu) on mu in (sqrt(d), inf)
  for (double d : {2.0, 3.0, 6.0, 12.0}) {
    for (double t : {std::sqrt(d), std::sqrt(d) + 1.0}) {
      double prev = std::numeric_limits<double>::infinity();
      bool monotone = true;
      for (int k = 0; k <= 100000; ++k) {
        const double mu = std::sqrt(d) * (1.0 + 1e-6) + static_cast<double>(k) * 50.0 / 100000.0;
        const double nu = (t - (d + 1.0 - d / (mu * mu)) / mu) * (t - mu);
        monotone = monotone && nu <= prev + 1e-9;
        prev = nu;
      }
      CHECK(monotone);
    }
  }
}

TEST_CASE("informative ratio stays below sqrt(d)") {
  // (d+1)/mu - d/mu^3 < sqrt(d) for all mu > sqrt(d), d >= 2
  for (double d : {2.0, 2.5, 3.0, 6.0, 12.0, 40.0}) {
    bool below = true;
    for (int k = 1; k <= 20000; ++k) {
      const double mu = std::sqrt(d) + static_cast<double>(k) * 30.0 / 20000.0;
      below = below && (d + 1.0) / mu - d / (mu * mu * mu) < std::sqrt(d);
    }
    CHECK(below);
  }
}
