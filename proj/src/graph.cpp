#include "bethe/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bethe {

SparseGraph SparseGraph::from_edges(Index n, std::vector<std::pair<Index, Index>> edges,
                                    std::optional<std::vector<double>> weights) {
  if (n < 0) fail(Errc::ParseError, "negative vertex count");
  if (weights && weights->size() != edges.size())
    fail(Errc::LengthMismatch, "weights size does not match edge count");

  for (auto& [u, v] : edges) {
    if (u == v) fail(Errc::SelfLoopRejected, "self-loop at vertex " + std::to_string(u));
    if (u < 0 || v < 0 || u >= n || v >= n)
      fail(Errc::ParseError, "edge endpoint out of range: (" + std::to_string(u) + "," + std::to_string(v) + ")");
    if (u > v) std::swap(u, v);
  }

  // Sort edges (carrying weights along) and reject duplicates.
  std::vector<Index> order(edges.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return edges[a] < edges[b]; });

  SparseGraph g;
  g.n_ = n;
  g.edges_.reserve(edges.size());
  if (weights) g.weights_.reserve(edges.size());
  for (Index i : order) {
    if (!g.edges_.empty() && g.edges_.back() == edges[i])
      fail(Errc::DuplicateEdgeRejected, "duplicate edge (" + std::to_string(edges[i].first) + "," +
                                            std::to_string(edges[i].second) + ")");
    g.edges_.push_back(edges[i]);
    if (weights) g.weights_.push_back((*weights)[i]);
  }

  // CSR with sorted neighbor lists.
  g.offsets_.assign(n + 1, 0);
  for (const auto& [u, v] : g.edges_) {
    g.offsets_[u + 1]++;
    g.offsets_[v + 1]++;
  }
  for (Index i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.targets_.resize(2 * g.edges_.size());
  std::vector<Index> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [u, v] : g.edges_) {
    g.targets_[cursor[u]++] = v;
    g.targets_[cursor[v]++] = u;
  }
  for (Index i = 0; i < n; ++i)
    std::sort(g.targets_.begin() + g.offsets_[i], g.targets_.begin() + g.offsets_[i + 1]);

  g.degrees_ = Vec(n);
  for (Index i = 0; i < n; ++i) g.degrees_(i) = static_cast<double>(g.offsets_[i + 1] - g.offsets_[i]);
  return g;
}

SpMat SparseGraph::adjacency_matrix(bool use_weights) const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * edges_.size());
  for (size_t e = 0; e < edges_.size(); ++e) {
    const auto& [u, v] = edges_[e];
    const double w = use_weights ? edge_weight(static_cast<Index>(e)) : 1.0;
    trip.emplace_back(u, v, w);
    trip.emplace_back(v, u, w);
  }
  SpMat a(n_, n_);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

bool SparseGraph::operator==(const SparseGraph& other) const {
  return n_ == other.n_ && edges_ == other.edges_ && weights_ == other.weights_;
}

double mean_degree(const SparseGraph& g) {
  if (g.num_vertices() == 0) return 0.0;
  return 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.num_vertices());
}

OrientedEdgeSet oriented_edges(const SparseGraph& g) {
  OrientedEdgeSet oe;
  oe.edges.reserve(2 * g.num_edges());
  for (const auto& [u, v] : g.edges()) {
    oe.edges.emplace_back(u, v);
    oe.edges.emplace_back(v, u);
  }
  return oe;
}

Index OrientedEdgeSet::index_of(Index u, Index v) const {
  const std::pair<Index, Index> key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
  auto it = std::lower_bound(edges.begin(), edges.end(), key,
                             [](const auto& a, const auto& b) {
                               // edges come in (u,v),(v,u) pairs sorted by the canonical pair
                               return std::minmax(a.first, a.second) < std::minmax(b.first, b.second);
                             });
  for (; it != edges.end() && std::minmax(it->first, it->second) == std::minmax(key.first, key.second); ++it)
    if (it->first == u && it->second == v) return static_cast<Index>(it - edges.begin());
  fail(Errc::ParseError, "oriented edge (" + std::to_string(u) + "," + std::to_string(v) + ") not present");
}

namespace {

struct ParsedLine {
  Index u, v;
  std::optional<double> w;
};

ParsedLine parse_edge_line(const std::string& line, Index lineno) {
  std::istringstream iss(line);
  ParsedLine out{};
  if (!(iss >> out.u >> out.v))
    fail(Errc::ParseError, "line " + std::to_string(lineno) + ": expected 'u v [w]'");
  double w;
  if (iss >> w) out.w = w;
  std::string rest;
  if (iss >> rest)
    fail(Errc::ParseError, "line " + std::to_string(lineno) + ": trailing token '" + rest + "'");
  return out;
}

SparseGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::vector<std::pair<Index, Index>> edges;
  std::vector<double> weights;
  bool any_weight = false;
  Index n = 0, lineno = 0;
  std::string line;
  // optional first line "# n <N>" pins the vertex count (degree-0 tail vertices)
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream iss(line.substr(1));
      std::string key;
      Index val;
      if (iss >> key >> val && key == "n") n = std::max(n, val);
      continue;
    }
    ParsedLine p = parse_edge_line(line, lineno);
    if (p.u == p.v) fail(Errc::SelfLoopRejected, "line " + std::to_string(lineno) + ": self-loop");
    edges.emplace_back(p.u, p.v);
    weights.push_back(p.w.value_or(1.0));
    if (p.w) any_weight = true;
    n = std::max({n, p.u + 1, p.v + 1});
  }
  if (any_weight) return SparseGraph::from_edges(n, std::move(edges), std::move(weights));
  return SparseGraph::from_edges(n, std::move(edges));
}

void save_edge_list(const SparseGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << "# n " << g.num_vertices() << "\n";
  char buf[96];
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto& [u, v] = g.edges()[e];
    if (g.weighted())
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n", static_cast<long long>(u),
                    static_cast<long long>(v), g.edge_weight(e));
    else
      std::snprintf(buf, sizeof(buf), "%lld %lld\n", static_cast<long long>(u), static_cast<long long>(v));
    out << buf;
  }
  if (!out) fail(Errc::IoError, "write failed: " + path);
}

SparseGraph load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) fail(Errc::ParseError, "line 1: empty file");
  std::istringstream hs(header);
  std::string banner, object, fmt, field, symmetry;
  hs >> banner >> object >> fmt >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || fmt != "coordinate")
    fail(Errc::ParseError, "line 1: expected MatrixMarket coordinate header");
  const bool pattern = field == "pattern";
  if (!pattern && field != "real")
    fail(Errc::ParseError, "line 1: unsupported field '" + field + "'");
  if (symmetry != "symmetric")
    fail(Errc::ParseError, "line 1: expected symmetric matrix, got '" + symmetry + "'");

  Index lineno = 1;
  std::string line;
  Index rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream iss(line);
    if (!(iss >> rows >> cols >> nnz))
      fail(Errc::ParseError, "line " + std::to_string(lineno) + ": expected 'rows cols nnz'");
    break;
  }
  if (rows < 0) fail(Errc::ParseError, "missing size line");
  if (rows != cols) fail(Errc::ParseError, "adjacency matrix must be square");

  std::vector<std::pair<Index, Index>> edges;
  std::vector<double> weights;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream iss(line);
    Index i, j;
    double w = 1.0;
    if (!(iss >> i >> j)) fail(Errc::ParseError, "line " + std::to_string(lineno) + ": expected 'i j [v]'");
    if (!pattern && !(iss >> w)) fail(Errc::ParseError, "line " + std::to_string(lineno) + ": missing value");
    if (i == j) fail(Errc::SelfLoopRejected, "line " + std::to_string(lineno) + ": diagonal entry");
    edges.emplace_back(i - 1, j - 1);  // matrix-market is 1-based
    weights.push_back(w);
  }
  if (static_cast<Index>(edges.size()) != nnz)
    fail(Errc::ParseError, "entry count " + std::to_string(edges.size()) + " does not match header nnz " +
                               std::to_string(nnz));
  if (pattern) return SparseGraph::from_edges(rows, std::move(edges));
  return SparseGraph::from_edges(rows, std::move(edges), std::move(weights));
}

void save_matrix_market(const SparseGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  const bool pattern = !g.weighted();
  out << "%%MatrixMarket matrix coordinate " << (pattern ? "pattern" : "real") << " symmetric\n";
  out << g.num_vertices() << " " << g.num_vertices() << " " << g.num_edges() << "\n";
  char buf[96];
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto& [u, v] = g.edges()[e];
    // lower triangle: row > col
    if (pattern)
      std::snprintf(buf, sizeof(buf), "%lld %lld\n", static_cast<long long>(v + 1), static_cast<long long>(u + 1));
    else
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n", static_cast<long long>(v + 1),
                    static_cast<long long>(u + 1), g.edge_weight(e));
    out << buf;
  }
  if (!out) fail(Errc::IoError, "write failed: " + path);
}

}  // namespace

SparseGraph load_graph(const std::string& path, GraphFormat format) {
  return format == GraphFormat::EdgeList ? load_edge_list(path) : load_matrix_market(path);
}

void save_graph(const SparseGraph& g, const std::string& path, GraphFormat format) {
  if (format == GraphFormat::EdgeList)
    save_edge_list(g, path);
  else
    save_matrix_market(g, path);
}

void save_labels(const IVec& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  for (Index i = 0; i < labels.size(); ++i) out << labels(i) << "\n";
  if (!out) fail(Errc::IoError, "write failed: " + path);
}

IVec load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::vector<int> vals;
  int v;
  while (in >> v) vals.push_back(v);
  IVec out(static_cast<Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) out(static_cast<Index>(i)) = vals[i];
  return out;
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::AsymmetricP: return "AsymmetricP";
    case Errc::NegativeEntry: return "NegativeEntry";
    case Errc::PiNotSimplex: return "PiNotSimplex";
    case Errc::DegreeRowMismatch: return "DegreeRowMismatch";
    case Errc::SubcriticalDegree: return "SubcriticalDegree";
    case Errc::InvalidProbability: return "InvalidProbability";
    case Errc::ParseError: return "ParseError";
    case Errc::SelfLoopRejected: return "SelfLoopRejected";
    case Errc::DuplicateEdgeRejected: return "DuplicateEdgeRejected";
    case Errc::PoleAtWeight: return "PoleAtWeight";
    case Errc::TooLargeForDense: return "TooLargeForDense";
    case Errc::ZeroParameter: return "ZeroParameter";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ComplexDominance: return "ComplexDominance";
    case Errc::FactorizationBreakdown: return "FactorizationBreakdown";
    case Errc::IndexOutOfInformativeRange: return "IndexOutOfInformativeRange";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::BelowThreshold: return "BelowThreshold";
    case Errc::GapZero: return "GapZero";
    case Errc::IoError: return "IoError";
    case Errc::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace bethe
