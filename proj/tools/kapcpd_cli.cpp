#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "kapcpd/bench.hpp"
#include "kapcpd/errors.hpp"
#include "kapcpd/inference.hpp"
#include "kapcpd/kernels.hpp"
#include "kapcpd/scan.hpp"
#include "kapcpd/segmentation.hpp"
#include "kapcpd/serialize.hpp"

using namespace kapcpd;

namespace {

enum Exit { OK = 0, FAILURE = 1, DEGENERATE = 2 };

struct KernelOptions {
  std::string input;
  std::string kernel1 = "gaussian";
  std::string kernel2 = "graphlet";
  double threshold = 0.5;
  double n0_frac = 0.05;
  double n1_frac = 0.95;
  std::uint64_t seed = 0;
  std::string dump_profile;
};

struct Loaded {
  std::optional<GraphSequence> seq;
  KernelSource s1, s2;
  std::optional<KernelMatrix> k1, k2;
};

void add_kernel_options(CLI::App* cmd, KernelOptions& o) {
  cmd->add_option("input", o.input, "GSEQ file (optional when both kernels are file:PATH)");
  cmd->add_option("--kernel1", o.kernel1, "gaussian | graphlet | file:PATH")->capture_default_str();
  cmd->add_option("--kernel2", o.kernel2, "gaussian | graphlet | file:PATH")->capture_default_str();
  cmd->add_option("--threshold", o.threshold, "binarization cutoff for graphlet on weighted graphs")
      ->capture_default_str();
  cmd->add_option("--n0-frac", o.n0_frac, "lower scan cutoff as a fraction of n")->capture_default_str();
  cmd->add_option("--n1-frac", o.n1_frac, "upper scan cutoff as a fraction of n")->capture_default_str();
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  cmd->add_option("--dump-profile", o.dump_profile, "write the per-t profile CSV here");
}

Loaded load(const KernelOptions& o) {
  Loaded l;
  l.s1 = parse_kernel_source(o.kernel1, o.threshold);
  l.s2 = parse_kernel_source(o.kernel2, o.threshold);
  if (!o.input.empty()) {
    l.seq = read_sequence(o.input);
    l.k1 = l.s1.build(*l.seq);
    l.k2 = l.s2.build(*l.seq);
  } else {
    if (l.s1.kind != KernelKind::EXTERNAL || l.s2.kind != KernelKind::EXTERNAL)
      throw ParameterError("an input GSEQ file is required unless both kernels are given as file:PATH");
    l.k1 = read_kernel(l.s1.file);
    l.k2 = read_kernel(l.s2.file);
    if (l.k1->size() != l.k2->size()) throw ParameterError("kernel files have different sizes");
  }
  return l;
}

nlohmann::json kernel_meta(const KernelSource& s, const KernelMatrix& k) {
  nlohmann::json j{{"source", s.describe()}};
  if (k.bandwidth()) j["bandwidth"] = *k.bandwidth();
  if (s.kind == KernelKind::GRAPHLET) j["threshold"] = s.threshold;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

void finish(const KernelOptions& o, const Loaded& l, const ScanConfig& cfg, nlohmann::json j) {
  if (!o.dump_profile.empty()) write_text(o.dump_profile, format_profile_csv(scan_statistic(*l.k1, *l.k2, cfg)));
  j["n"] = l.k1->size();
  j["n0"] = cfg.n0;
  j["n1"] = cfg.n1;
  j["kernel1"] = kernel_meta(l.s1, *l.k1);
  j["kernel2"] = kernel_meta(l.s2, *l.k2);
  std::cout << j.dump(2) << '\n';
}

std::vector<std::vector<double>> parse_block(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> r;
    std::stringstream cs(row);
    std::string cell;
    while (std::getline(cs, cell, ',')) {
      try {
        std::size_t used = 0;
        r.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParameterError("invalid block matrix entry '" + cell + "'");
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<double> parse_list(const std::string& text) {
  auto rows = parse_block(text);
  if (rows.size() != 1) throw ParameterError("expected a comma-separated list");
  return rows.front();
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    return OK;
  } catch (const DegeneracyError& e) {
    std::cerr << "degenerate: " << e.what() << '\n';
    return DEGENERATE;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return FAILURE;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-aggregated change-point detection for network sequences"};
  app.require_subcommand(1);
  int status = OK;

  // detect
  KernelOptions det;
  std::size_t perms = 1000, workers = 0;
  bool add_one = false, strict = false;
  auto* detect = app.add_subcommand("detect", "permutation test (aggregated scan statistic)");
  add_kernel_options(detect, det);
  detect->add_option("--perms", perms, "number of permutations B")->capture_default_str();
  detect->add_option("--workers", workers, "worker threads (0 = auto)");
  detect->add_flag("--add-one", add_one, "use (1 + count) / (1 + B)");
  detect->add_flag("--strict", strict, "rebuild kernels for every permuted replica");
  detect->callback([&] {
    status = guarded([&] {
      const Loaded l = load(det);
      const ScanConfig cfg = default_scan_config(l.k1->size(), det.n0_frac, det.n1_frac);
      const PermConfig pcfg{perms, det.seed, workers, add_one};
      TestOutcome out;
      if (strict) {
        if (!l.seq) throw ParameterError("--strict needs a GSEQ input");
        out = permutation_test_strict(*l.seq, l.s1, l.s2, cfg, pcfg);
      } else {
        out = permutation_test(*l.k1, *l.k2, cfg, pcfg);
      }
      finish(det, l, cfg, to_json(out));
    });
  });

  // fastdetect
  KernelOptions fast;
  double r1 = 0.5, r2 = 2.0;
  auto* fastdetect = app.add_subcommand("fastdetect", "analytic Bonferroni test");
  add_kernel_options(fastdetect, fast);
  fastdetect->add_option("--r1", r1, "first W weight")->capture_default_str();
  fastdetect->add_option("--r2", r2, "second W weight")->capture_default_str();
  fastdetect->callback([&] {
    status = guarded([&] {
      const Loaded l = load(fast);
      const ScanConfig cfg = default_scan_config(l.k1->size(), fast.n0_frac, fast.n1_frac);
      finish(fast, l, cfg, to_json(fast_test(*l.k1, *l.k2, FastConfig{r1, r2, cfg})));
    });
  });

  // segment
  KernelOptions seg;
  SegmentationConfig scfg;
  std::string engine = "perm";
  std::size_t min_segment = 0, seg_perms = 1000;
  auto* segment = app.add_subcommand("segment", "binary segmentation for multiple change points");
  add_kernel_options(segment, seg);
  segment->add_option("--min-sep", scfg.min_separation, "minimum separation between change points")
      ->capture_default_str();
  segment->add_option("--min-segment", min_segment, "shortest segment that is tested (default max(2*min-sep, 20))");
  segment->add_option("--alpha", scfg.alpha, "significance level per split")->capture_default_str();
  segment->add_option("--engine", engine, "perm | fast")->capture_default_str();
  segment->add_option("--perms", seg_perms, "permutations per test (perm engine)")->capture_default_str();
  segment->add_option("--r1", scfg.r1, "first W weight (fast engine)")->capture_default_str();
  segment->add_option("--r2", scfg.r2, "second W weight (fast engine)")->capture_default_str();
  segment->callback([&] {
    status = guarded([&] {
      if (seg.input.empty()) throw ParameterError("segment needs a GSEQ input file");
      if (!seg.dump_profile.empty()) throw ParameterError("--dump-profile is not available for segment");
      const GraphSequence seq = read_sequence(seg.input);
      scfg.engine = engine_from_string(engine);
      scfg.n0_frac = seg.n0_frac;
      scfg.n1_frac = seg.n1_frac;
      scfg.perm = PermConfig{seg_perms, seg.seed, 0, false};
      if (min_segment > 0) scfg.min_segment = min_segment;
      const auto s1 = parse_kernel_source(seg.kernel1, seg.threshold);
      const auto s2 = parse_kernel_source(seg.kernel2, seg.threshold);
      auto j = to_json(binary_segmentation(seq, s1, s2, scfg));
      j["engine"] = to_string(scfg.engine);
      std::cout << j.dump(2) << '\n';
    });
  });

  // simulate
  std::string model = "ER", scenario, output, block, block_post, theta, theta_post;
  std::size_t nodes = 50, length = 100, tau = 0;
  double signal = 0.0, p = 0.5, p_post = -1.0, radius = 0.0, radius_post = -1.0;
  double ergm_edge = -2.0, ergm_tri = 0.1, ergm_tri_post = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t sim_seed = 0;
  auto* simulate = app.add_subcommand("simulate", "generate a GSEQ file");
  simulate->add_option("--scenario", scenario, "experiment preset (ER, SBM, ..., ERGM); overrides --model");
  simulate->add_option("--signal", signal, "preset signal level")->capture_default_str();
  simulate->add_option("--model", model, "ER | SBM | SPARSE_SBM | DCSBM_* | RGG | ERGM")->capture_default_str();
  simulate->add_option("--nodes", nodes, "nodes per snapshot")->capture_default_str();
  simulate->add_option("--n", length, "sequence length")->capture_default_str();
  simulate->add_option("--tau", tau, "change index (0 = no change)");
  simulate->add_option("--p", p, "ER edge probability")->capture_default_str();
  simulate->add_option("--p-post", p_post, "ER probability after tau");
  simulate->add_option("--block", block, "block matrix, rows separated by ';'");
  simulate->add_option("--block-post", block_post, "block matrix after tau");
  simulate->add_option("--theta", theta, "degree parameters, comma separated");
  simulate->add_option("--theta-post", theta_post, "degree parameters after tau");
  simulate->add_option("--radius", radius, "RGG radius (default 0.9 sqrt(log N / (pi N)))");
  simulate->add_option("--radius-post", radius_post, "RGG radius after tau");
  simulate->add_option("--ergm-edge", ergm_edge, "ERGM edge coefficient")->capture_default_str();
  simulate->add_option("--ergm-triangle", ergm_tri, "ERGM triangle coefficient")->capture_default_str();
  simulate->add_option("--ergm-triangle-post", ergm_tri_post, "ERGM triangle coefficient after tau");
  simulate->add_option("--seed", sim_seed, "random seed")->capture_default_str();
  simulate->add_option("-o,--output", output, "output path (default stdout)");
  simulate->callback([&] {
    status = guarded([&] {
      GeneratorSpec g;
      if (!scenario.empty()) {
        BenchSpec b;
        b.scenario = scenario;
        b.n = length;
        b.n_nodes = nodes;
        if (tau > 0) b.tau = tau;
        else b.metric = "SIZE";
        g = scenario_spec(b, signal, sim_seed);
      } else {
        g.model = model_from_string(model);
        g.n_nodes = nodes;
        g.n = length;
        g.seed = sim_seed;
        if (tau > 0) g.tau = tau;
        g.params.p = p;
        g.params.ergm_edge = ergm_edge;
        g.params.ergm_triangle = ergm_tri;
        g.params.radius = radius > 0.0 ? radius : rgg_base_radius(nodes);
        if (!block.empty()) g.params.block = parse_block(block);
        if (!theta.empty()) g.params.theta = parse_list(theta);
        g.post = g.params;
        if (p_post >= 0.0) g.post.p = p_post;
        if (radius_post >= 0.0) g.post.radius = radius_post;
        if (!std::isnan(ergm_tri_post)) g.post.ergm_triangle = ergm_tri_post;
        if (!block_post.empty()) g.post.block = parse_block(block_post);
        if (!theta_post.empty()) g.post.theta = parse_list(theta_post);
      }
      const GraphSequence seq = generate_sequence(g);
      if (output.empty()) std::cout << format_sequence(seq);
      else write_sequence(seq, output);
    });
  });

  // kernel
  std::string kin, kkind = "gaussian", kout;
  double kthreshold = 0.5;
  auto* kernel = app.add_subcommand("kernel", "compute a kernel matrix and export it as CSV");
  kernel->add_option("input", kin, "GSEQ file")->required();
  kernel->add_option("--kind", kkind, "gaussian | graphlet")->capture_default_str();
  kernel->add_option("--threshold", kthreshold, "binarization cutoff for weighted graphs")->capture_default_str();
  kernel->add_option("-o,--output", kout, "output path (default stdout)");
  kernel->callback([&] {
    status = guarded([&] {
      const auto src = parse_kernel_source(kkind, kthreshold);
      if (src.kind == KernelKind::EXTERNAL) throw ParameterError("--kind must be gaussian or graphlet");
      const KernelMatrix k = src.build(read_sequence(kin));
      if (k.bandwidth()) std::cerr << "bandwidth " << *k.bandwidth() << '\n';
      if (kout.empty()) std::cout << format_kernel(k);
      else write_kernel(k, kout);
    });
  });

  // bench
  std::string spec_path, bench_out;
  auto* bench = app.add_subcommand("bench", "run a simulation grid from a JSON spec");
  bench->add_option("spec", spec_path, "bench spec (JSON)")->required();
  bench->add_option("-o,--output", bench_out, "CSV path (default stdout)");
  bench->callback([&] {
    status = guarded([&] {
      const BenchSpec spec = read_bench_spec(spec_path);
      set_warnings_enabled(false);
      const auto cells = run_bench(spec);
      set_warnings_enabled(true);
      const std::string csv = format_bench_csv(cells);
      if (bench_out.empty()) std::cout << csv;
      else write_text(bench_out, csv);
      for (const auto& c : cells)
        std::cerr << c.scenario << " signal=" << c.signal << ' ' << c.method << ": detected " << c.detected << '/'
                  << c.runs << ", accurate " << c.accurate << ", mean " << c.mean_ms << " ms"
                  << (c.failures ? ", failures " + std::to_string(c.failures) : std::string()) << '\n';
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? OK : FAILURE;
  }
  return status;
}
