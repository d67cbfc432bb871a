#include "bethe/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

namespace bethe {

SymmetricOperator bethe_hessian(const SparseGraph& g, double t) {
  const Index n = g.num_vertices();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n) + 2 * static_cast<size_t>(g.num_edges()));
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, t * t + g.degrees()(i) - 1.0);
  for (const auto& [u, v] : g.edges()) {
    trip.emplace_back(u, v, -t);
    trip.emplace_back(v, u, -t);
  }
  SymmetricOperator op;
  op.matrix = SpMat(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  op.t = t;
  op.tag = "bethe_hessian(t=" + std::to_string(t) + ")";
  return op;
}

SymmetricOperator weighted_bethe_hessian(const SparseGraph& g, double t) {
  const Index n = g.num_vertices();
  const double t2 = t * t;
  Vec diag = Vec::Ones(n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n) + 2 * static_cast<size_t>(g.num_edges()));
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto& [u, v] = g.edges()[e];
    const double w = g.edge_weight(e);
    const double denom = t2 - w * w;
    if (std::abs(denom) <= 1e-12 * std::max({t2, w * w, 1.0}))
      fail(Errc::PoleAtWeight, "t^2 = w^2 on edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    diag(u) += w * w / denom;
    diag(v) += w * w / denom;
    trip.emplace_back(u, v, -t * w / denom);
    trip.emplace_back(v, u, -t * w / denom);
  }
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, diag(i));
  SymmetricOperator op;
  op.matrix = SpMat(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  op.t = t;
  op.tag = "weighted_bethe_hessian(t=" + std::to_string(t) + ")";
  return op;
}

GeneralOperator reduced_nb(const SparseGraph& g) {
  const Index n = g.num_vertices();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * static_cast<size_t>(n) + 2 * static_cast<size_t>(g.num_edges()));
  for (Index i = 0; i < n; ++i) {
    trip.emplace_back(i, n + i, g.degrees()(i) - 1.0);  // top-right block D - I
    trip.emplace_back(n + i, i, -1.0);                  // bottom-left block -I
  }
  for (const auto& [u, v] : g.edges()) {
    trip.emplace_back(n + u, n + v, 1.0);
    trip.emplace_back(n + v, n + u, 1.0);
  }
  GeneralOperator op;
  op.matrix = SpMat(2 * n, 2 * n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  op.tag = "reduced_nb";
  return op;
}

GeneralOperator full_nb(const SparseGraph& g) {
  const OrientedEdgeSet oe = oriented_edges(g);
  const Index two_m = oe.size();
  std::vector<Eigen::Triplet<double>> trip;
  for (Index e = 0; e < two_m; ++e) {
    const auto [u, v] = oe.edges[e];
    for (Index y : g.neighbors(v)) {
      if (y == u) continue;  // no backtracking
      trip.emplace_back(e, oe.index_of(v, y), 1.0);
    }
  }
  GeneralOperator op;
  op.matrix = SpMat(two_m, two_m);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  op.tag = "full_nb";
  return op;
}

double ihara_bass_residual(const SparseGraph& g, std::span<const Complex> z_samples) {
  const Index n = g.num_vertices();
  const Index m = g.num_edges();
  if (n > 12 || m > 20)
    fail(Errc::TooLargeForDense, "n = " + std::to_string(n) + ", m = " + std::to_string(m) +
                                     " exceeds dense determinant cap (n <= 12, m <= 20)");

  const CMat b = CMat(full_nb(g).matrix);
  const CMat btilde = CMat(reduced_nb(g).matrix);
  const Mat a = Mat(g.adjacency_matrix());
  const Vec deg = g.degrees();

  double worst = 0.0;
  for (const Complex z : z_samples) {
    const Complex lhs = (b - z * CMat::Identity(2 * m, 2 * m)).determinant();

    CMat hz = (z * z) * CMat::Identity(n, n) - z * a.cast<Complex>();
    for (Index i = 0; i < n; ++i) hz(i, i) += deg(i) - 1.0;
    const Complex factor = std::pow(z * z - 1.0, static_cast<double>(m - n));
    const Complex rhs1 = factor * hz.determinant();
    const Complex rhs2 =
        factor * (btilde - z * CMat::Identity(2 * n, 2 * n)).determinant();

    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs1), std::abs(rhs2)});
    worst = std::max(worst, std::abs(lhs - rhs1) / scale);
    worst = std::max(worst, std::abs(lhs - rhs2) / scale);
  }
  return worst;
}

double deformed_difference_check(const SparseGraph& g, double t, double t_prime) {
  if (t == 0.0 || t_prime == 0.0) fail(Errc::ZeroParameter, "t and t' must be nonzero");
  const Index n = g.num_vertices();
  const SpMat lhs = bethe_hessian(g, t).matrix / t - bethe_hessian(g, t_prime).matrix / t_prime;

  std::vector<Eigen::Triplet<double>> trip;
  for (Index i = 0; i < n; ++i)
    trip.emplace_back(i, i, (t - t_prime) * (1.0 - (g.degrees()(i) - 1.0) / (t * t_prime)));
  SpMat rhs(n, n);
  rhs.setFromTriplets(trip.begin(), trip.end());

  const SpMat diff = lhs - rhs;
  double max_abs = 0.0, lhs_scale = 1.0;
  for (Index k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it) max_abs = std::max(max_abs, std::abs(it.value()));
  for (Index k = 0; k < lhs.outerSize(); ++k)
    for (SpMat::InnerIterator it(lhs, k); it; ++it) lhs_scale = std::max(lhs_scale, std::abs(it.value()));
  return max_abs / lhs_scale;
}

void save_operator(const SpMat& m, const std::string& path, bool symmetric) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
  std::vector<std::string> lines;
  Index count = 0;
  char buf[96];
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;  // lower triangle only
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n", static_cast<long long>(it.row() + 1),
                    static_cast<long long>(it.col() + 1), it.value());
      lines.push_back(buf);
      ++count;
    }
  out << m.rows() << " " << m.cols() << " " << count << "\n";
  for (const auto& l : lines) out << l;
  if (!out) fail(Errc::IoError, "write failed: " + path);
}

}  // namespace bethe
