#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace bethe {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<double>;
using Complex = std::complex<double>;

// Error taxonomy. Each failure mode carries a stable code so callers and
// tests can dispatch without parsing messages.
enum class Errc {
  AsymmetricP,
  NegativeEntry,
  PiNotSimplex,
  DegreeRowMismatch,
  SubcriticalDegree,
  InvalidProbability,
  ParseError,
  SelfLoopRejected,
  DuplicateEdgeRejected,
  PoleAtWeight,
  TooLargeForDense,
  ZeroParameter,
  NoConvergence,
  ComplexDominance,
  FactorizationBreakdown,
  IndexOutOfInformativeRange,
  LengthMismatch,
  BelowThreshold,
  GapZero,
  IoError,
  BadConfig,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

// SplitMix64 step; used to derive independent substreams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d649bb133111ebULL;
  return z ^ (z >> 31);
}

// Substream seed for (master, index) pairs, e.g. k-means restarts or trials.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xa0761d6478bd642fULL * (index + 1));
  return splitmix64(s);
}

}  // namespace bethe
