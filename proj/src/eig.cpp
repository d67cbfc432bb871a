#include "bethe/eig.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <nlohmann/json.hpp>

namespace bethe {

namespace {

// Pattern with every diagonal entry explicit, so shifted copies keep the
// sparsity structure of the symbolic analysis.
SpMat with_full_diagonal(const SpMat& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m.nonZeros()) + static_cast<size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) trip.emplace_back(i, i, 0.0);
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  SpMat out(m.rows(), m.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

double max_abs_coeff(const SpMat& m) {
  double s = 0.0;
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) s = std::max(s, std::abs(it.value()));
  return s;
}

SpMat shifted_copy(const SpMat& m, double x) {
  SpMat s = m;
  for (Index i = 0; i < s.rows(); ++i) s.coeffRef(i, i) -= x;
  return s;
}

Index dense_count_below(const SpMat& m, double x) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(m), Eigen::EigenvaluesOnly);
  Index c = 0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < x) ++c;
  return c;
}

std::pair<double, double> gershgorin_bounds(const SpMat& m) {
  const Index n = m.rows();
  if (n == 0) return {0.0, 0.0};
  Vec diag = Vec::Zero(n), radius = Vec::Zero(n);
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      if (it.row() == it.col())
        diag(it.row()) += it.value();
      else
        radius(it.row()) += std::abs(it.value());
    }
  return {(diag - radius).minCoeff(), (diag + radius).maxCoeff()};
}

}  // namespace

InertiaCounter::InertiaCounter(const SpMat& m) : m_(with_full_diagonal(m)) {
  scale_ = std::max(1.0, max_abs_coeff(m_));
  solver_.analyzePattern(m_);
}

Index InertiaCounter::below(double x) {
  // Strictly-below semantics: a breakdown means an eigenvalue sits at the
  // shift, so retries move the shift down to exclude it.
  const double perturb[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (double p : perturb) {
    const double shift = x - p * scale_;
    solver_.factorize(shifted_copy(m_, shift));
    ++factorizations_;
    if (solver_.info() != Eigen::Success) continue;
    const Vec d = solver_.vectorD();
    if (!d.array().isFinite().all()) continue;
    bool singular = false;
    Index neg = 0;
    for (Index i = 0; i < d.size(); ++i) {
      if (d(i) == 0.0) singular = true;
      if (d(i) < 0.0) ++neg;
    }
    if (singular) continue;
    return neg;
  }
  if (m_.rows() <= 1500) return dense_count_below(m_, x);
  fail(Errc::FactorizationBreakdown, "LDLT breakdown at shift " + std::to_string(x) + " after retries");
}

Index count_below(const SymmetricOperator& op, double eps_thr) {
  InertiaCounter counter(op.matrix);
  return counter.below(-eps_thr);
}

namespace {

// Lanczos with full reorthogonalization on c I - M, so the algebraically
// smallest eigenvalues of M become the dominant end of the shifted operator.
struct LanczosOutcome {
  bool converged = false;
  Vec values;      // ascending eigenvalues of M
  Mat vectors;
  Vec residuals;   // true residuals ||Mv - lambda v||
  int matvecs = 0;
};

LanczosOutcome lanczos_smallest(const SpMat& m, Index k, double shift_c, double tol,
                                std::uint64_t seed) {
  const Index n = m.rows();
  const Index max_steps = std::min<Index>(n, std::max<Index>(400, 12 * k + 30));
  LanczosOutcome out;

  std::uint64_t rng_state = seed;
  std::mt19937_64 rng(splitmix64(rng_state));
  std::normal_distribution<double> gauss;

  Mat basis(n, max_steps + 1);
  Vec alpha = Vec::Zero(max_steps);
  Vec beta = Vec::Zero(max_steps);  // beta(j) couples steps j and j+1

  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = gauss(rng);
  v.normalize();
  basis.col(0) = v;

  const double breakdown_tol = 1e-13 * std::max(1.0, std::abs(shift_c));
  Index j = 0;
  auto try_extract = [&](Index steps) -> bool {
    if (steps < k) return false;
    Mat tri = Mat::Zero(steps, steps);
    for (Index i = 0; i < steps; ++i) {
      tri(i, i) = alpha(i);
      if (i + 1 < steps) tri(i, i + 1) = tri(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(tri);
    // largest Ritz values of the shifted operator = smallest of M
    bool plausible = true;
    for (Index idx = 0; idx < k; ++idx) {
      const Index col = steps - 1 - idx;
      const double est = (steps < n ? std::abs(beta(steps - 1) * es.eigenvectors()(steps - 1, col)) : 0.0);
      const double lam = shift_c - es.eigenvalues()(col);
      if (est > 0.5 * tol * std::max(1.0, std::abs(lam))) plausible = false;
    }
    if (!plausible) return false;
    out.values = Vec(k);
    out.vectors = Mat(n, k);
    out.residuals = Vec(k);
    for (Index idx = 0; idx < k; ++idx) {
      const Index col = steps - 1 - idx;  // largest Ritz value of cI - M
      Vec vec = basis.leftCols(steps) * es.eigenvectors().col(col);
      vec.normalize();
      const double lam = shift_c - es.eigenvalues()(col);
      out.values(idx) = lam;  // idx 0 is the algebraically smallest of M
      out.vectors.col(idx) = vec;
      out.residuals(idx) = (m * vec - lam * vec).norm();
      if (out.residuals(idx) > tol * std::max(1.0, std::abs(lam))) return false;
    }
    out.converged = true;
    return true;
  };

  while (j < max_steps) {
    Vec w = shift_c * basis.col(j) - m * basis.col(j);
    ++out.matvecs;
    // full reorthogonalization, two passes; the i == j coefficient of the
    // first pass is the diagonal recurrence term
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i <= j; ++i) {
        const double h = basis.col(i).dot(w);
        w -= h * basis.col(i);
        if (pass == 0 && i == j) alpha(j) = h;
      }
    const double b = w.norm();
    ++j;
    if (b <= breakdown_tol) {
      // invariant subspace: restart the recurrence with a fresh direction
      if (j >= k && try_extract(j)) return out;
      if (j >= max_steps) break;
      Vec fresh(n);
      for (Index i = 0; i < n; ++i) fresh(i) = gauss(rng);
      for (Index i = 0; i < j; ++i) fresh -= basis.col(i).dot(fresh) * basis.col(i);
      const double fn = fresh.norm();
      if (fn < 1e-12) break;
      basis.col(j) = fresh / fn;
      if (j > 0) beta(j - 1) = 0.0;
      continue;
    }
    basis.col(j) = w / b;
    if (j > 0) beta(j - 1) = b;
    if (j >= k && (j % 10 == 0 || j == max_steps) && try_extract(j)) return out;
  }
  try_extract(j);
  return out;
}

struct Cluster {
  double lo, hi;     // all targeted eigenvalues lie in [lo, hi)
  Index count;       // eigenvalues of M in the interval
  Index n_targets;   // how many of them are among the k smallest
};

// Bisection on the inertia counter until every targeted eigenvalue cluster
// is isolated to width <= sep.
std::vector<Cluster> isolate_smallest(InertiaCounter& counter, double lo, double hi, Index k,
                                      double sep) {
  struct Node {
    double a, b;
    Index ca, cb;  // counts below a and b
  };
  std::vector<Node> stack{{lo, hi, 0, counter.below(hi)}};
  if (stack[0].cb < k)
    fail(Errc::NoConvergence, "spectral window does not contain the requested eigenvalues");
  std::vector<Cluster> done;
  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    const Index targets = std::min(nd.cb, k) - nd.ca;
    if (targets <= 0 || nd.cb == nd.ca) continue;
    if (nd.b - nd.a <= sep) {
      done.push_back({nd.a, nd.b, nd.cb - nd.ca, targets});
      continue;
    }
    const double mid = 0.5 * (nd.a + nd.b);
    const Index cm = counter.below(mid);
    stack.push_back({nd.a, mid, nd.ca, cm});
    stack.push_back({mid, nd.b, cm, nd.cb});
  }
  std::sort(done.begin(), done.end(), [](const Cluster& a, const Cluster& b) { return a.lo < b.lo; });
  return done;
}

}  // namespace

EigPairs smallest_eigs(const SymmetricOperator& op, Index k, double tol, std::uint64_t seed) {
  const Index n = op.dim();
  if (k < 0 || k > n) fail(Errc::BadConfig, "k = " + std::to_string(k) + " out of range");
  EigPairs out;
  out.meta.tolerance = tol;
  out.meta.seed = seed;
  if (k == 0) {
    out.values = Vec(0);
    out.vectors = Mat(n, 0);
    out.residuals = Vec(0);
    return out;
  }

  const SpMat padded = with_full_diagonal(op.matrix);
  auto [glo, ghi] = gershgorin_bounds(padded);
  const double scale = std::max({1.0, std::abs(glo), std::abs(ghi)});
  const double margin = 1e-6 * scale;
  InertiaCounter counter(padded);

  // fast path: shifted Lanczos, then certify the result against the inertia
  // count at the top returned eigenvalue
  LanczosOutcome lz = lanczos_smallest(padded, k, ghi + 1.0, tol, derive_seed(seed, 101));
  if (lz.converged) {
    const double top = lz.values(k - 1);
    const double delta = std::max(100.0 * lz.residuals.maxCoeff(), 1e-9 * scale);
    if (counter.below(top + delta) >= k && counter.below(top - delta) <= k - 1) {
      out.values = lz.values;
      out.vectors = lz.vectors;
      out.residuals = lz.residuals;
      out.meta.iterations = lz.matvecs;
      out.meta.factorizations = counter.factorizations();
      return out;
    }
  }

  // robust path: inertia bisection plus shift-inverted iteration
  const double sep = 1e-5 * scale;
  const auto clusters = isolate_smallest(counter, glo - margin, ghi + margin, k, sep);

  std::uint64_t rng_state = seed;
  std::mt19937_64 rng(splitmix64(rng_state));
  std::normal_distribution<double> gauss;

  Eigen::SimplicialLDLT<SpMat> solver;
  solver.analyzePattern(padded);

  std::vector<double> values;
  std::vector<Vec> vectors;
  std::vector<double> residuals;
  int solves = 0, factorizations = 0;

  const int max_refactor = 6;
  const int max_inner = 40;

  for (const Cluster& cl : clusters) {
    double sigma = 0.5 * (cl.lo + cl.hi);
    for (Index j = 0; j < cl.n_targets; ++j) {
      // shift-inverted iteration, deflated against vectors already accepted
      Vec v(n);
      for (Index i = 0; i < n; ++i) v(i) = gauss(rng);
      auto deflate = [&](Vec& w) {
        for (const Vec& u : vectors) w -= u.dot(w) * u;
      };
      deflate(v);
      v.normalize();

      double best_res = std::numeric_limits<double>::infinity();
      double rho = sigma;
      Vec best_v = v;
      bool converged = false;
      double shift = sigma;
      for (int refac = 0; refac < max_refactor && !converged; ++refac) {
        // nudge the shift off an exact eigenvalue if the factorization balks
        bool factored = false;
        for (int attempt = 0; attempt < 4 && !factored; ++attempt) {
          solver.factorize(shifted_copy(padded, shift));
          ++factorizations;
          if (solver.info() == Eigen::Success && solver.vectorD().array().isFinite().all() &&
              (solver.vectorD().array() != 0.0).all())
            factored = true;
          else
            shift += (attempt + 1) * 1e-9 * scale;
        }
        if (!factored) {
          shift += 1e-6 * scale;
          continue;
        }
        for (int it = 0; it < max_inner; ++it) {
          Vec w = solver.solve(v);
          ++solves;
          if (!w.array().isFinite().all()) {
            // solve blew up exactly along the eigenvector: restart randomized
            for (Index i = 0; i < n; ++i) w(i) = gauss(rng);
          }
          deflate(w);
          const double norm = w.norm();
          if (norm == 0.0) {
            for (Index i = 0; i < n; ++i) w(i) = gauss(rng);
            deflate(w);
            w.normalize();
          } else {
            w /= norm;
          }
          v = w;
          rho = v.dot(padded * v);
          const double res = (padded * v - rho * v).norm();
          ++solves;
          if (res < best_res) {
            best_res = res;
            best_v = v;
          }
          if (res <= tol * std::max(1.0, std::abs(rho))) {
            converged = true;
            break;
          }
        }
        if (!converged) shift = rho;  // Rayleigh-quotient refinement
      }
      if (!converged)
        fail(Errc::NoConvergence, "inverse iteration stalled: best residual " + std::to_string(best_res) +
                                      " after " + std::to_string(solves) + " solves");
      values.push_back(best_v.dot(padded * best_v));
      vectors.push_back(best_v);
      residuals.push_back(best_res);
    }
  }

  // ascending eigenvalues; final orthonormalization pass
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });

  out.values = Vec(k);
  out.vectors = Mat(n, k);
  out.residuals = Vec(k);
  for (Index j = 0; j < k; ++j) {
    Vec v = vectors[order[j]];
    for (Index p = 0; p < j; ++p) v -= out.vectors.col(p).dot(v) * out.vectors.col(p);
    v.normalize();
    out.vectors.col(j) = v;
    const double rho = v.dot(padded * v);
    out.values(j) = rho;
    out.residuals(j) = (padded * v - rho * v).norm();
  }
  // certify ordering against the inertia oracle: the j-th value must bracket
  // the true j-th smallest eigenvalue
  for (Index j = 0; j < k; ++j) {
    const double delta = std::max(10.0 * sep, 100.0 * out.residuals(j));
    if (counter.below(out.values(j) - delta) > j || counter.below(out.values(j) + delta) < j + 1)
      fail(Errc::NoConvergence, "eigenpair " + std::to_string(j) + " failed the inertia ordering check");
  }
  out.meta.iterations = solves;
  out.meta.factorizations = counter.factorizations() + factorizations;
  return out;
}

namespace {

struct ArnoldiResult {
  Mat basis;      // n x (m+1)
  Mat hessenberg; // (m+1) x m
  Index m;        // completed steps
  bool invariant; // lucky breakdown: exact invariant subspace
};

ArnoldiResult arnoldi_factorization(const SpMat& m, const Vec& start, Index steps) {
  const Index n = m.rows();
  ArnoldiResult r;
  r.basis = Mat(n, steps + 1);
  r.hessenberg = Mat::Zero(steps + 1, steps);
  r.basis.col(0) = start / start.norm();
  r.invariant = false;
  Index j = 0;
  for (; j < steps; ++j) {
    Vec w = m * r.basis.col(j);
    // modified Gram-Schmidt with one re-orthogonalization pass
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i <= j; ++i) {
        const double h = r.basis.col(i).dot(w);
        w -= h * r.basis.col(i);
        r.hessenberg(i, j) += h;
      }
    const double beta = w.norm();
    r.hessenberg(j + 1, j) = beta;
    if (beta <= 1e-14 * std::max(1.0, r.hessenberg.cwiseAbs().maxCoeff())) {
      r.invariant = true;
      ++j;
      break;
    }
    r.basis.col(j + 1) = w / beta;
  }
  r.m = j;
  return r;
}

}  // namespace

NBEigenbundle leading_eigs_nonsym(const GeneralOperator& btilde, Index k, RitzSide side,
                                  double tol, std::uint64_t seed) {
  const SpMat& m = btilde.matrix;
  const Index dim = m.rows();
  if (dim % 2 != 0) fail(Errc::BadConfig, "operator dimension must be even (2n)");
  const Index n = dim / 2;
  if (k < 1 || k > dim) fail(Errc::BadConfig, "k out of range");

  std::uint64_t rng_state = seed;
  std::mt19937_64 rng(splitmix64(rng_state));
  std::normal_distribution<double> gauss;
  Vec start(dim);
  for (Index i = 0; i < dim; ++i) start(i) = gauss(rng);

  const Index max_m = std::min<Index>(dim, std::max<Index>(300, 8 * k + 40));
  Index msize = std::min<Index>(dim, std::max<Index>(40, 6 * k + 20));

  CVec lambdas;
  CMat vectors;
  Vec residuals;
  int matvecs = 0;

  auto better = [&](const Complex& a, const Complex& b) {
    if (side == RitzSide::LargestReal) {
      if (a.real() != b.real()) return a.real() > b.real();
    } else {
      if (a.real() != b.real()) return a.real() < b.real();
    }
    return std::abs(a.imag()) < std::abs(b.imag());
  };

  bool converged = false;
  for (int round = 0; round < 12 && !converged; ++round) {
    ArnoldiResult ar = arnoldi_factorization(m, start, msize);
    matvecs += static_cast<int>(ar.m);
    const Index mm = ar.m;
    if (mm < k) {
      if (ar.invariant) fail(Errc::NoConvergence, "invariant subspace smaller than k");
      msize = std::min(max_m, 2 * msize);
      continue;
    }
    Eigen::EigenSolver<Mat> es(ar.hessenberg.topLeftCorner(mm, mm));
    CVec theta = es.eigenvalues();
    CMat s = es.eigenvectors();

    std::vector<Index> order(mm);
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return better(theta(a), theta(b)); });

    lambdas = CVec(k);
    vectors = CMat(dim, k);
    residuals = Vec(k);
    bool all_ok = true;
    for (Index j = 0; j < k; ++j) {
      const Index idx = order[j];
      lambdas(j) = theta(idx);
      CVec v = ar.basis.leftCols(mm).cast<Complex>() * s.col(idx);
      v /= v.norm();
      vectors.col(j) = v;
      const CVec rvec = m.cast<Complex>() * v - lambdas(j) * v;
      residuals(j) = rvec.norm();
      if (residuals(j) > tol * std::max(1.0, std::abs(lambdas(j)))) all_ok = false;
    }
    if (all_ok || (ar.invariant && mm <= msize)) {
      converged = true;
      break;
    }
    if (msize >= max_m && round >= 6) break;
    // restart toward the wanted invariant subspace
    Vec combo = Vec::Zero(dim);
    for (Index j = 0; j < k; ++j) combo += vectors.col(j).real() + vectors.col(j).imag();
    for (Index i = 0; i < dim; ++i) combo(i) += 1e-3 * gauss(rng);
    start = combo;
    msize = std::min(max_m, msize + msize / 2);
  }
  if (!converged)
    fail(Errc::NoConvergence, "Arnoldi iteration did not reach tolerance " + std::to_string(tol) +
                                  "; worst residual " + std::to_string(residuals.size() ? residuals.maxCoeff() : -1.0));

  NBEigenbundle out;
  out.meta.tolerance = tol;
  out.meta.seed = seed;
  out.meta.iterations = matvecs;
  out.lambdas = CVec(k);
  out.imag_norms = Vec(k);
  out.x_parts = Mat(n, k);
  out.y_parts = Mat(n, k);
  out.residuals = residuals;

  for (Index j = 0; j < k; ++j) {
    Complex lam = lambdas(j);
    out.imag_norms(j) = std::abs(lam.imag());
    CVec v = vectors.col(j);
    // phase-align on the largest-modulus entry, then split halves
    Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const Complex phase = v(imax) / std::abs(v(imax));
    v /= phase;
    if (out.imag_norms(j) <= 1e-6 * std::max(1.0, std::abs(lam))) lam = Complex(lam.real(), 0.0);
    out.lambdas(j) = lam;
    Vec x = v.head(n).real();
    Vec y = v.tail(n).real();
    const double ynorm = y.norm();
    if (ynorm == 0.0) fail(Errc::NoConvergence, "eigenvector has vanishing y half");
    out.x_parts.col(j) = x / ynorm;
    out.y_parts.col(j) = y / ynorm;
  }

  for (Index j = 0; j < k; ++j) {
    const Complex lam = out.lambdas(j);
    if (std::abs(lam.imag()) > 0.1 * std::abs(lam))
      fail(Errc::ComplexDominance, "requested extremal eigenvalue " + std::to_string(j) +
                                       " has |Im| = " + std::to_string(std::abs(lam.imag())) +
                                       " > 0.1 |lambda|; no real outliers at this end");
  }
  return out;
}

ProcrustesResult subspace_distance(const Mat& v, const Mat& y) {
  if (v.rows() != y.rows() || v.cols() != y.cols())
    fail(Errc::LengthMismatch, "V and Y must have matching shapes");
  ProcrustesResult out;
  const Index k = v.cols();
  if (k == 0) {
    out.rotation = Mat(0, 0);
    return out;
  }
  const Mat c = y.transpose() * v;
  Eigen::JacobiSVD<Mat> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.min_singular = svd.singularValues().minCoeff();
  out.rank_deficient = out.min_singular < 1e-12;
  out.dist = (v - y * out.rotation).norm();
  return out;
}

WeylCertificate local_weyl_certificate(const SymmetricOperator& op, const Vec& lambdas,
                                       const Mat& vectors) {
  const Index k = lambdas.size();
  if (vectors.cols() != k) fail(Errc::LengthMismatch, "lambdas/vectors size mismatch");
  const Mat gram = vectors.transpose() * vectors;
  if ((gram - Mat::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-8)
    fail(Errc::BadConfig, "pseudo-eigenvectors must be orthonormal");

  WeylCertificate cert;
  for (Index j = 0; j < k; ++j)
    cert.eps = std::max(cert.eps, (op.matrix * vectors.col(j) - lambdas(j) * vectors.col(j)).norm());
  cert.bound = 2.0 * std::sqrt(static_cast<double>(k)) * cert.eps;

  if (op.dim() <= 1500) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(op.matrix), Eigen::EigenvaluesOnly);
    const Vec spec = es.eigenvalues();
    // sorted greedy matching: each lambda claims the lowest unused eigenvalue
    std::vector<double> lam(lambdas.data(), lambdas.data() + k);
    std::sort(lam.begin(), lam.end());
    cert.checked = true;
    cert.holds = true;
    Index cursor = 0;
    for (double l : lam) {
      while (cursor < spec.size() && spec(cursor) < l - cert.bound) ++cursor;
      if (cursor >= spec.size() || std::abs(spec(cursor) - l) > cert.bound + 1e-12) {
        cert.holds = false;
        break;
      }
      ++cursor;
    }
  }
  return cert;
}

DavisKahanCertificate local_davis_kahan_certificate(const SymmetricOperator& op, const Vec& v,
                                                    double lambda, const Mat& subspace) {
  const Index n = op.dim();
  if (v.size() != n || subspace.rows() != n) fail(Errc::LengthMismatch, "dimension mismatch");
  if (n > 1500) fail(Errc::TooLargeForDense, "dense verification capped at n <= 1500");

  // orthonormal basis of E and of its complement
  Eigen::HouseholderQR<Mat> qr(subspace);
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Index s = subspace.cols();
  const Mat e_basis = q.leftCols(s);
  const Mat w = q.rightCols(n - s);

  DavisKahanCertificate cert;
  const Vec vn = v / v.norm();
  cert.eps = (op.matrix * vn - lambda * vn).norm();
  cert.dist = (vn - e_basis * (e_basis.transpose() * vn)).norm();
  if (s >= n) {  // complement is empty: distance is zero, bound vacuously true
    cert.gap = std::numeric_limits<double>::infinity();
    cert.bound = std::numeric_limits<double>::infinity();
    cert.holds = true;
    return cert;
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(w.transpose() * Mat(op.matrix) * w, Eigen::EigenvaluesOnly);
  cert.gap = (es.eigenvalues().array() - lambda).abs().minCoeff();
  if (cert.gap <= 1e-12 * std::max(1.0, std::abs(lambda)))
    fail(Errc::GapZero, "lambda lies in the complement spectrum; bound is vacuous");
  cert.bound = cert.eps / cert.gap;
  cert.holds = cert.dist <= cert.bound + 1e-12;
  return cert;
}

void save_eigpairs_json(const EigPairs& pairs, const std::string& path) {
  nlohmann::json j;
  j["values"] = std::vector<double>(pairs.values.data(), pairs.values.data() + pairs.values.size());
  j["residuals"] =
      std::vector<double>(pairs.residuals.data(), pairs.residuals.data() + pairs.residuals.size());
  j["meta"] = {{"iterations", pairs.meta.iterations},
               {"factorizations", pairs.meta.factorizations},
               {"tolerance", pairs.meta.tolerance},
               {"seed", pairs.meta.seed},
               {"threads", pairs.meta.threads}};
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << j.dump(2) << "\n";
}

void save_vectors_eigv(const Mat& vectors, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  const char magic[4] = {'E', 'I', 'G', 'V'};
  const std::uint32_t version = 1;
  const std::uint32_t n = static_cast<std::uint32_t>(vectors.rows());
  const std::uint32_t k = static_cast<std::uint32_t>(vectors.cols());
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&k), 4);
  // column-major doubles; bytes are little-endian on every supported target
  out.write(reinterpret_cast<const char*>(vectors.data()),
            static_cast<std::streamsize>(sizeof(double) * vectors.size()));
  if (!out) fail(Errc::IoError, "write failed: " + path);
}

Mat load_vectors_eigv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, n = 0, k = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&k), 4);
  if (!in || std::memcmp(magic, "EIGV", 4) != 0) fail(Errc::ParseError, path + ": bad magic");
  if (version != 1) fail(Errc::ParseError, path + ": unsupported version");
  Mat m(n, k);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) fail(Errc::ParseError, path + ": truncated data");
  return m;
}

}  // namespace bethe
