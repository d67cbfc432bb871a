#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "bethe/operators.hpp"
#include "test_util.hpp"

using namespace bethe;
using namespace bethe::test;

TEST_CASE("bethe hessian of a single edge") {
  const double t = 1.7;
  const SymmetricOperator h = bethe_hessian(single_edge(), t);
  CHECK(h.matrix.coeff(0, 0) == doctest::Approx(t * t));
  CHECK(h.matrix.coeff(0, 1) == doctest::Approx(-t));
  const Vec ev = dense_spectrum(h.matrix);
  CHECK(ev(0) == doctest::Approx(t * (t - 1)));
  CHECK(ev(1) == doctest::Approx(t * (t + 1)));
}

TEST_CASE("bethe hessian at t=0 is D - I") {
  const SparseGraph g = make_graph(4, {{0, 1}, {1, 2}});
  const SymmetricOperator h = bethe_hessian(g, 0.0);
  const Mat dense = Mat(h.matrix);
  Mat expect = Mat::Zero(4, 4);
  expect.diagonal() << 0, 1, 0, -1;
  CHECK((dense - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("bethe hessian of the empty graph") {
  const SparseGraph g = SparseGraph::from_edges(5, {});
  const double t = 2.5;
  const Mat dense = Mat(bethe_hessian(g, t).matrix);
  CHECK((dense - (t * t - 1.0) * Mat::Identity(5, 5)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("bethe hessian is exactly symmetric") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const SparseGraph g = random_connected_graph(10, 0.3, rng);
    const SpMat h = bethe_hessian(g, 1.0 + 0.3 * trial).matrix;
    const SpMat diff = SpMat(h - SpMat(h.transpose()));
    double worst = 0.0;
    for (Index k = 0; k < diff.outerSize(); ++k)
      for (SpMat::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    CHECK(worst == 0.0);
  }
}

TEST_CASE("weighted bethe hessian: single edge, w=2, t=3") {
  const SparseGraph g = SparseGraph::from_edges(2, {{0, 1}}, std::vector<double>{2.0});
  const SymmetricOperator h = weighted_bethe_hessian(g, 3.0);
  CHECK(h.matrix.coeff(0, 0) == doctest::Approx(1.8));   // 1 + 4/5
  CHECK(h.matrix.coeff(1, 1) == doctest::Approx(1.8));
  CHECK(h.matrix.coeff(0, 1) == doctest::Approx(-1.2));  // -6/5
}

TEST_CASE("weighted bethe hessian with unit weights matches H/(t^2-1)") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const SparseGraph g = random_connected_graph(12, 0.3, rng);
    const double t = 1.3 + 0.4 * trial;
    const Mat w = Mat(weighted_bethe_hessian(g, t).matrix);
    const Mat h = Mat(bethe_hessian(g, t).matrix) / (t * t - 1.0);
    CHECK((w - h).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("weighted bethe hessian pole detection") {
  const SparseGraph g = SparseGraph::from_edges(2, {{0, 1}}, std::vector<double>{2.0});
  try {
    weighted_bethe_hessian(g, 2.0);
    FAIL("expected PoleAtWeight");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PoleAtWeight);
  }
  const SparseGraph unit = single_edge();
  CHECK_THROWS_AS(weighted_bethe_hessian(unit, -1.0), Error);
}

TEST_CASE("reduced non-backtracking block structure") {
  const SparseGraph g = make_graph(1, {});
  const Mat b = Mat(reduced_nb(g).matrix);
  Mat expect(2, 2);
  expect << 0, -1, -1, 0;
  CHECK((b - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("reduced nb of the empty graph has spectrum {+1, -1}") {
  // det(Btilde - zI) = det(z^2 I - zA + D - I) = (z^2 - 1)^n when A = 0, D = 0
  const SparseGraph g = SparseGraph::from_edges(4, {});
  const CVec ev = dense_spectrum_general(reduced_nb(g).matrix);
  for (Index i = 0; i < ev.size(); ++i) {
    CHECK(std::abs(ev(i).imag()) < 1e-12);
    CHECK(std::abs(std::abs(ev(i).real()) - 1.0) < 1e-12);
  }
}

namespace {

// greedy nearest matching between two complex spectra
double spectra_mismatch(const CVec& sa, const CVec& sb) {
  std::vector<Complex> b(sb.data(), sb.data() + sb.size());
  double worst = 0.0;
  for (Index i = 0; i < sa.size(); ++i) {
    size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < b.size(); ++j) {
      const double dist = std::abs(sa(i) - b[j]);
      if (dist < best) { best = dist; arg = j; }
    }
    worst = std::max(worst, best);
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(arg));
  }
  return worst;
}

}  // namespace

TEST_CASE("triangle: full and reduced operators share their spectrum") {
  // m = n for the triangle, so the determinant identity forces equal spectra
  const SparseGraph g = triangle();
  const CVec spec_b = dense_spectrum_general(full_nb(g).matrix);
  const CVec spec_bt = dense_spectrum_general(reduced_nb(g).matrix);
  CHECK(spectra_mismatch(spec_b, spec_bt) < 1e-8);
  // cube roots of unity, each twice
  int on_unit_circle = 0;
  for (Index i = 0; i < spec_b.size(); ++i)
    if (std::abs(std::abs(spec_b(i)) - 1.0) < 1e-9) ++on_unit_circle;
  CHECK(on_unit_circle == 6);
}

TEST_CASE("full nb of a single edge is the zero matrix") {
  const SpMat b = full_nb(single_edge()).matrix;
  CHECK(b.rows() == 2);
  CHECK(b.nonZeros() == 0);
}

TEST_CASE("full nb of a star is nilpotent") {
  // integer matrix: the vanishing power is exact, eigenvalues follow
  const Mat b = Mat(full_nb(star(3)).matrix);
  CHECK((b * b).cwiseAbs().maxCoeff() == 0.0);
  const CVec ev = dense_spectrum_general(full_nb(star(3)).matrix);
  for (Index i = 0; i < ev.size(); ++i) CHECK(std::abs(ev(i)) < 1e-6);
}

TEST_CASE("full nb row sums equal out-degree minus one") {
  std::mt19937_64 rng(31);
  const SparseGraph g = random_connected_graph(7, 0.45, rng);
  const OrientedEdgeSet oe = oriented_edges(g);
  const Mat b = Mat(full_nb(g).matrix);
  for (Index e = 0; e < oe.size(); ++e) {
    const auto [u, v] = oe.edges[e];
    CHECK(b.row(e).sum() == doctest::Approx(static_cast<double>(g.degree(v) - 1)));
  }
}

TEST_CASE("ihara-bass residual on the triangle at z=2") {
  // det(B - 2I) = (z-1)^2 (z^2+z+1)^2 at z=2, i.e. 49
  const SparseGraph g = triangle();
  const CMat b = CMat(Mat(full_nb(g).matrix).cast<Complex>());
  const Complex det = (b - 2.0 * CMat::Identity(6, 6)).determinant();
  CHECK(std::abs(det - Complex(49.0, 0.0)) < 1e-9);

  const std::vector<Complex> zs = {Complex(2.0, 0.0)};
  CHECK(ihara_bass_residual(g, zs) <= 1e-9);
}

TEST_CASE("ihara-bass residual on a path") {
  const std::vector<Complex> zs = {Complex(2.0, 0.0), Complex(0.3, 1.1), Complex(-1.7, 0.4)};
  CHECK(ihara_bass_residual(path3(), zs) <= 1e-9);
}

TEST_CASE("trees: the full nb operator is nilpotent and the identity balances") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<Index> pick;
  for (int trial = 0; trial < 10; ++trial) {
    // random tree on n vertices: attach each new vertex to a uniform earlier one
    const Index n = 4 + static_cast<Index>(rng() % 5);
    std::vector<std::pair<Index, Index>> edges;
    for (Index v = 1; v < n; ++v)
      edges.emplace_back(static_cast<Index>(rng() % v), v);
    const SparseGraph g = SparseGraph::from_edges(n, std::move(edges));

    // nilpotency is exact for the integer operator: B^(2m) = 0
    Mat power = Mat(full_nb(g).matrix);
    const Mat b0 = power;
    for (Index step = 1; step < 2 * g.num_edges() && power.cwiseAbs().maxCoeff() > 0; ++step)
      power = power * b0;
    CHECK(power.cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 zrng(trial);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<Complex> zs;
    for (int k = 0; k < 5; ++k) {
      Complex z(unif(zrng), unif(zrng));
      if (std::abs(z - 1.0) < 0.2 || std::abs(z + 1.0) < 0.2) z += Complex(0.5, 0.5);
      zs.push_back(z);
    }
    CHECK(ihara_bass_residual(g, zs) <= 1e-8);
  }
}

TEST_CASE("ihara-bass rejects large instances") {
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < 13; ++i) edges.emplace_back(i, (i + 1) % 14);
  const SparseGraph g = SparseGraph::from_edges(14, std::move(edges));
  const std::vector<Complex> zs = {Complex(2.0, 0.0)};
  try {
    ihara_bass_residual(g, zs);
    FAIL("expected TooLargeForDense");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooLargeForDense);
  }
}

TEST_CASE("deformed difference identity") {
  CHECK(deformed_difference_check(triangle(), 2.0, 2.0) == doctest::Approx(0.0));
  CHECK(deformed_difference_check(single_edge(), 2.0, 3.0) <= 1e-14);
  CHECK(deformed_difference_check(triangle(), std::sqrt(6.0), -std::sqrt(6.0)) <= 1e-12);
  CHECK_THROWS_AS(deformed_difference_check(triangle(), 0.0, 1.0), Error);

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unif(0.2, 4.0);
  for (int trial = 0; trial < 25; ++trial) {
    const SparseGraph g = random_connected_graph(9, 0.35, rng);
    const double sign_a = rng() % 2 ? 1.0 : -1.0;
    const double sign_b = rng() % 2 ? 1.0 : -1.0;
    CHECK(deformed_difference_check(g, sign_a * unif(rng), sign_b * unif(rng)) <= 1e-12);
  }
}

TEST_CASE("operator matrix-market export") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "bethe_op.mtx").string();
  save_operator(bethe_hessian(triangle(), 1.5).matrix, path, true);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "%%MatrixMarket matrix coordinate real symmetric");
  Index rows, cols, nnz;
  in >> rows >> cols >> nnz;
  CHECK(rows == 3);
  CHECK(nnz == 6);  // 3 diagonal + 3 lower-triangle entries
  std::remove(path.c_str());
}
