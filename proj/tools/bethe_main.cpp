// Command-line front end: SBM generation, Bethe-Hessian spectra, community
// counting, clustering, theory verification, and multi-seed experiments.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bethe/detect.hpp"
#include "bethe/eig.hpp"
#include "bethe/experiment.hpp"
#include "bethe/graph.hpp"
#include "bethe/model.hpp"
#include "bethe/operators.hpp"

namespace fs = std::filesystem;
using namespace bethe;

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::NoConvergence:
    case Errc::FactorizationBreakdown:
    case Errc::ComplexDominance:
    case Errc::GapZero:
      return 3;  // solver failure
    default:
      return 2;  // validation / input error
  }
}

GraphFormat format_from(const std::string& flag, const std::string& path) {
  if (flag == "edgelist") return GraphFormat::EdgeList;
  if (flag == "mm") return GraphFormat::MatrixMarket;
  return fs::path(path).extension() == ".mtx" ? GraphFormat::MatrixMarket : GraphFormat::EdgeList;
}

double resolve_t(const std::string& spec, const SparseGraph& g) {
  if (spec == "sqrt" || spec == "+sqrt") return std::sqrt(mean_degree(g));
  if (spec == "-sqrt") return -std::sqrt(mean_degree(g));
  return std::stod(spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse spectral community detection via the Bethe-Hessian"};
  app.require_subcommand(1);

  std::string model_path, graph_path, labels_path, out_path = ".", config_path, format_flag = "auto";
  std::string t_spec = "sqrt", out_format = "json";
  std::uint64_t seed = 1;
  double epsilon = -1.0;
  double win_lo = 0.0, win_hi = 0.0;
  Index bins = 72;
  int restarts = 20, trials = -1, threads = 0;

  auto* gen = app.add_subcommand("generate", "Sample a labeled SBM graph to files");
  gen->add_option("--model", model_path, "model JSON file")->required();
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--out", out_path, "output directory");
  gen->add_option("--graph-format", format_flag, "edgelist|mm");

  auto* spec = app.add_subcommand("spectrum", "Exact windowed eigenvalue histogram of H(t)");
  spec->add_option("--graph", graph_path, "graph file")->required();
  spec->add_option("--t", t_spec, "t value, or sqrt|-sqrt for ±sqrt(d_hat)");
  spec->add_option("--window-lo", win_lo, "window lower edge");
  spec->add_option("--window-hi", win_hi, "window upper edge (lo >= hi selects automatically)");
  spec->add_option("--bins", bins, "number of bins");
  spec->add_option("--out", out_path, "output file (.json or .csv)");
  spec->add_option("--graph-format", format_flag, "edgelist|mm (input graph format)");
  spec->add_option("--format", out_format, "json|csv output file format");

  auto* cnt = app.add_subcommand("count", "Estimate community counts from H(±sqrt(d_hat))");
  cnt->add_option("--graph", graph_path, "graph file")->required();
  cnt->add_option("--epsilon", epsilon, "threshold (default 1/log n)");
  cnt->add_option("--graph-format", format_flag, "edgelist|mm");

  auto* clu = app.add_subcommand("cluster", "Spectral clustering with the Bethe-Hessian");
  clu->add_option("--graph", graph_path, "graph file")->required();
  clu->add_option("--epsilon", epsilon, "threshold (default 1/log n)");
  clu->add_option("--seed", seed, "RNG seed");
  clu->add_option("--restarts", restarts, "k-means restarts");
  clu->add_option("--labels", labels_path, "true labels for overlap scoring");
  clu->add_option("--out", out_path, "output directory");
  clu->add_option("--graph-format", format_flag, "edgelist|mm");

  auto* ver = app.add_subcommand("verify", "Check closed-form spectral predictions on a sample");
  ver->add_option("--model", model_path, "model JSON file")->required();
  ver->add_option("--seed", seed, "RNG seed");
  ver->add_option("--out", out_path, "output JSON file");

  auto* exp = app.add_subcommand("experiment", "Multi-seed experiment from a config file");
  exp->add_option("--config", config_path, "experiment config JSON")->required();
  exp->add_option("--out", out_path, "output directory override");
  exp->add_option("--trials", trials, "trial count override");
  exp->add_option("--seed", seed, "seed base override (with --trials)");
  exp->add_option("--threads", threads, "worker threads (0 = all)");
  exp->add_option("--epsilon", epsilon, "threshold override");
  exp->add_option("--format", out_format, "json|csv summary to stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ModelParams model = load_model(model_path);
      const LabeledGraph lg = sample_graph(model, seed);
      fs::create_directories(out_path);
      const GraphFormat gf = format_from(format_flag, "");
      const std::string gfile =
          (fs::path(out_path) / (gf == GraphFormat::MatrixMarket ? "graph.mtx" : "graph.txt")).string();
      save_graph(lg.graph, gfile, gf);
      save_labels(lg.sigma, (fs::path(out_path) / "labels.txt").string());
      nlohmann::json prov;
      prov["seed"] = seed;
      prov["n"] = model.n;
      prov["d"] = model.d;
      prov["d_hat"] = mean_degree(lg.graph);
      prov["edges"] = lg.graph.num_edges();
      prov["model_file"] = model_path;
      prov["P"] = nlohmann::json::array();
      for (Index i = 0; i < model.r; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < model.r; ++j) row.push_back(model.P(i, j));
        prov["P"].push_back(row);
      }
      prov["pi"] = std::vector<double>(model.pi.data(), model.pi.data() + model.pi.size());
      write_file_atomic((fs::path(out_path) / "provenance.json").string(), prov.dump(2) + "\n");
      std::cout << prov.dump(2) << std::endl;
    } else if (spec->parsed()) {
      const SparseGraph g = load_graph(graph_path, format_from(format_flag, graph_path));
      const double t = resolve_t(t_spec, g);
      const SpectrumHistogram hist = spectrum_histogram(g, t, win_lo, win_hi, bins);
      const bool csv = out_format == "csv" || fs::path(out_path).extension() == ".csv";
      if (out_path != "." && csv)
        save_histogram_csv(hist, out_path);
      else if (out_path != ".")
        write_file_atomic(out_path, histogram_to_json(hist) + "\n");
      nlohmann::json brief;
      brief["t"] = t;
      brief["window"] = {hist.lo, hist.hi};
      brief["negative_eigenvalues"] = hist.negative_eigenvalues;
      brief["total_in_window"] = std::accumulate(hist.counts.begin(), hist.counts.end(), Index{0});
      std::cout << brief.dump(2) << std::endl;
    } else if (cnt->parsed()) {
      const SparseGraph g = load_graph(graph_path, format_from(format_flag, graph_path));
      const auto [rp, rm] = estimate_counts(g, epsilon);
      nlohmann::json j;
      j["d_hat"] = mean_degree(g);
      j["epsilon"] = epsilon < 0 ? default_epsilon(g.num_vertices()) : epsilon;
      j["r_hat_plus"] = rp;
      j["r_hat_minus"] = rm;
      j["r_hat"] = rp + rm;
      std::cout << j.dump(2) << std::endl;
    } else if (clu->parsed()) {
      const SparseGraph g = load_graph(graph_path, format_from(format_flag, graph_path));
      DetectConfig dc;
      dc.epsilon = epsilon;
      dc.seed = seed;
      dc.kmeans_restarts = restarts;
      const DetectionResult dr = cluster(g, dc);
      fs::create_directories(out_path);
      save_labels(dr.sigma_hat, (fs::path(out_path) / "labels_hat.txt").string());
      if (dr.r_hat > 0) {
        Mat embedding(g.num_vertices(), dr.r_hat);
        embedding.leftCols(dr.r_hat_plus) = dr.v_plus;
        embedding.rightCols(dr.r_hat_minus) = dr.v_minus;
        save_vectors_eigv(embedding, (fs::path(out_path) / "embedding.eigv").string());
      }
      nlohmann::json j = nlohmann::json::parse(detection_to_json(dr));
      if (!labels_path.empty()) {
        const IVec truth = load_labels(labels_path);
        j["overlap"] = overlap(truth, dr.sigma_hat);
      }
      write_file_atomic((fs::path(out_path) / "detection.json").string(), j.dump(2) + "\n");
      j.erase("sigma_hat");  // keep stdout brief
      std::cout << j.dump(2) << std::endl;
    } else if (ver->parsed()) {
      const ModelParams model = load_model(model_path);
      const SignalSpectrum spectrum = signal_spectrum(model);
      const LabeledGraph lg = sample_graph(model, seed);
      const TheoryReport rep = theory_report(lg, spectrum, 1e-8, seed);
      const std::string json = theory_to_json(rep);
      if (out_path != ".") write_file_atomic(out_path, json + "\n");
      std::cout << json << std::endl;
    } else if (exp->parsed()) {
      ExperimentConfig cfg = load_experiment_config(config_path);
      if (out_path != ".") cfg.out_dir = out_path;
      if (threads > 0) cfg.threads = threads;
      if (epsilon >= 0) cfg.epsilon = epsilon;
      if (trials > 0) {
        cfg.seeds.clear();
        for (int i = 0; i < trials; ++i) cfg.seeds.push_back(seed ^ static_cast<std::uint64_t>(i));
      }
      const ExperimentSummary summary = run_experiment(cfg);
      if (out_format == "csv") {
        std::ifstream in((fs::path(cfg.out_dir) / "trials.csv").string());
        std::cout << in.rdbuf();
      } else {
        std::cout << summary.summary_json << std::endl;
      }
      if (!summary.pass) return 4;  // acceptance failure
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
