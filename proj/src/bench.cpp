#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "kapcpd/bench.hpp"
#include "kapcpd/errors.hpp"
#include "kapcpd/inference.hpp"
#include "kapcpd/kernels.hpp"
#include "kapcpd/parallel.hpp"

namespace kapcpd {

namespace {

const std::set<std::string> kScenarios{"ER",          "SBM",         "SPARSE_SBM", "DCSBM_DEGREE", "DCSBM_HUB",
                                       "DCSBM_BLOCK", "RGG",         "ERGM",       "APPENDIX_A"};
const std::set<std::string> kMethods{"KAP_PERM", "KAPF", "GKCP_GAUSS", "GKCP_GRAPHLET"};
const std::set<std::string> kMetrics{"ACCURATE_DETECTION", "SIZE", "RUNTIME", "LOCALIZATION"};

using Matrix = std::vector<std::vector<double>>;

Matrix two_block(double within, double across) { return {{within, across}, {across, within}}; }

std::size_t as_count(double signal, const char* what) {
  if (!(signal >= 0.0) || std::floor(signal) != signal)
    throw ParameterError(std::string(what) + " signal must be a non-negative integer");
  return static_cast<std::size_t>(signal);
}

struct RunResult {
  bool ok = false;
  double p_value = 1.0;
  std::optional<std::size_t> tau_hat;
  double ms = 0.0;
  double kernel_ms = 0.0;
  std::string error;
};

double ms_between(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

BenchSpec parse_bench_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("bench spec must be a JSON object");
  static const std::set<std::string> keys{"scenario", "signals", "runs",    "methods", "seed",  "metric",
                                          "n",        "n_nodes", "tau",     "perms",   "n0_frac", "n1_frac",
                                          "unbalanced", "alpha", "dim",     "workers"};
  for (const auto& [key, _] : j.items())
    if (!keys.count(key)) throw FormatError("unknown bench spec key '" + key + "'");
  BenchSpec s;
  try {
    s.scenario = j.value("scenario", s.scenario);
    s.signals = j.value("signals", s.signals);
    s.runs = j.value("runs", s.runs);
    s.methods = j.value("methods", s.methods);
    s.seed = j.value("seed", s.seed);
    s.metric = j.value("metric", s.metric);
    s.n = j.value("n", s.n);
    if (j.contains("n_nodes")) s.n_nodes = j.at("n_nodes").get<std::size_t>();
    if (j.contains("tau")) s.tau = j.at("tau").get<std::size_t>();
    s.perms = j.value("perms", s.perms);
    s.n0_frac = j.value("n0_frac", s.n0_frac);
    s.n1_frac = j.value("n1_frac", s.n1_frac);
    s.unbalanced = j.value("unbalanced", s.unbalanced);
    s.alpha = j.value("alpha", s.alpha);
    s.dim = j.value("dim", s.dim);
    s.workers = j.value("workers", s.workers);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bench spec: ") + e.what());
  }
  if (!kScenarios.count(s.scenario)) throw FormatError("unknown scenario '" + s.scenario + "'");
  if (!kMetrics.count(s.metric)) throw FormatError("unknown metric '" + s.metric + "'");
  for (const auto& m : s.methods)
    if (!kMethods.count(m)) throw FormatError("unknown method '" + m + "'");
  if (s.methods.empty()) throw FormatError("bench spec needs at least one method");
  if (s.signals.empty()) throw FormatError("signal grid must not be empty");
  if (s.runs < 1) throw FormatError("runs must be at least 1");
  if (s.perms < 1) throw FormatError("perms must be at least 1");
  if (s.n < 4) throw FormatError("n must be at least 4");
  return s;
}

BenchSpec read_bench_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("bench spec is not valid JSON: ") + e.what());
  }
  return parse_bench_spec(j);
}

double rgg_base_radius(std::size_t n_nodes) {
  const double N = static_cast<double>(n_nodes);
  return 0.9 * std::sqrt(std::log(N) / (std::numbers::pi * N));
}

std::vector<double> lognormal_theta(std::size_t n_nodes, double sd, CounterRng& rng) {
  std::lognormal_distribution<double> dist(0.0, sd);
  std::vector<double> y(n_nodes);
  double total = 0.0;
  for (auto& v : y) {
    v = dist(rng);
    total += v;
  }
  const double mean = total / static_cast<double>(n_nodes);
  for (auto& v : y) v /= mean;
  return y;
}

GeneratorSpec scenario_spec(const BenchSpec& spec, double signal, std::uint64_t seed) {
  GeneratorSpec g;
  g.n = spec.n;
  g.seed = seed;
  g.n_nodes = spec.n_nodes.value_or(50);
  if (spec.metric != "SIZE") g.tau = spec.tau.value_or(spec.n / 2);

  const std::string& sc = spec.scenario;
  if (sc == "ER") {
    g.model = Model::ER;
    g.params.p = 0.5;
    g.post.p = 0.5 + signal;
  } else if (sc == "SBM") {
    g.model = Model::SBM;
    g.params.block = std::vector<std::vector<double>>(5, std::vector<double>(5, 0.3));
    for (std::size_t k = 0; k < 5; ++k) g.params.block[k][k] = 0.5;
    g.post = g.params;
    for (std::size_t k = 0; k < 5; ++k) g.post.block[k][k] += signal;
  } else if (sc == "SPARSE_SBM") {
    g.model = Model::SPARSE_SBM;
    g.n_nodes = as_count(signal, "SPARSE_SBM node-count");
    g.params.block = two_block(0.05, 0.03);
    g.post.block = two_block(0.06, 0.02);
  } else if (sc == "DCSBM_DEGREE") {
    if (!(signal >= 0.0 && signal < 1.0)) throw ParameterError("DCSBM_DEGREE signal must lie in [0, 1)");
    g.model = Model::DCSBM_DEGREE;
    g.params.block = two_block(0.5, 0.3);
    g.post.block = g.params.block;
    g.post.theta.resize(g.n_nodes);
    for (std::size_t i = 0; i < g.n_nodes; ++i) g.post.theta[i] = i % 2 == 0 ? 1.0 + signal : 1.0 - signal;
  } else if (sc == "DCSBM_HUB") {
    g.model = Model::DCSBM_HUB;
    const std::size_t hubs = as_count(signal, "DCSBM_HUB hub-size");
    if (hubs > g.n_nodes) throw ParameterError("hub size exceeds node count");
    g.params.block = two_block(0.05, 0.03);
    g.post.block = g.params.block;
    g.post.theta.assign(g.n_nodes, 1.0);
    for (std::size_t i = 0; i < hubs; ++i) g.post.theta[i] = 1.3;
  } else if (sc == "DCSBM_BLOCK") {
    g.model = Model::DCSBM_BLOCK;
    g.n_nodes = as_count(signal, "DCSBM_BLOCK node-count");
    CounterRng rng(seed, ~std::uint64_t{0});
    g.params.theta = lognormal_theta(g.n_nodes, 0.25, rng);
    g.params.block = two_block(0.06, 0.03);
    g.post.theta = g.params.theta;
    g.post.block = two_block(0.07, 0.02);
  } else if (sc == "RGG") {
    if (!(signal > 0.0)) throw ParameterError("RGG signal is a radius multiplier and must be positive");
    g.model = Model::RGG;
    g.params.radius = rgg_base_radius(g.n_nodes);
    g.post.radius = g.params.radius * signal;
  } else if (sc == "ERGM") {
    g.model = Model::ERGM;
    g.params.ergm_edge = -2.0;
    g.params.ergm_triangle = 0.1;
    g.post = g.params;
    g.post.ergm_triangle += signal;
  } else {
    throw ParameterError("scenario '" + sc + "' does not generate graphs");
  }
  if (!g.tau) g.post = g.params;
  return g;
}

std::vector<std::vector<double>> heavy_tailed_shift(std::size_t n, std::size_t tau, std::size_t d, double delta,
                                                    CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi(3.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (std::size_t t = 0; t < n; ++t) {
    const double scale = 1.0 / std::sqrt(chi(rng) / 3.0);
    for (std::size_t j = 0; j < d; ++j) {
      rows[t][j] = normal(rng) * scale;
      if (t >= tau && j < 10) rows[t][j] += delta;
    }
  }
  return rows;
}

std::vector<BenchCell> run_bench(const BenchSpec& spec) {
  const bool vectors = spec.scenario == "APPENDIX_A";
  const double n0_frac = spec.unbalanced ? 0.04 : spec.n0_frac;
  const double n1_frac = spec.unbalanced ? 0.95 : spec.n1_frac;
  const ScanConfig cfg = default_scan_config(spec.n, n0_frac, n1_frac);
  const std::size_t window = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(spec.n)));
  const std::size_t n_methods = spec.methods.size();

  std::vector<BenchCell> cells;
  for (std::size_t s = 0; s < spec.signals.size(); ++s) {
    const double signal = spec.signals[s];
    std::optional<std::size_t> truth;
    std::vector<std::vector<RunResult>> results(spec.runs, std::vector<RunResult>(n_methods));

    parallel_for(spec.runs, resolve_workers(spec.workers), [&](std::size_t r) {
      const std::uint64_t seed = CounterRng(spec.seed, (static_cast<std::uint64_t>(s) << 32) | r)();
      auto& row = results[r];
      auto fail_all = [&](const std::string& msg) {
        for (auto& res : row) res.error = msg;
      };
      try {
        const auto k0 = std::chrono::steady_clock::now();
        std::optional<KernelMatrix> gauss, second;
        std::optional<std::size_t> tau;
        if (vectors) {
          tau = spec.metric == "SIZE" ? std::nullopt : std::optional<std::size_t>(spec.tau.value_or(spec.n / 2));
          CounterRng rng(seed, 0);
          const auto points = heavy_tailed_shift(spec.n, tau.value_or(spec.n), spec.dim, signal, rng);
          gauss.emplace(gaussian_kernel(points));
          second.emplace(laplacian_kernel(points));
        } else {
          const GeneratorSpec g = scenario_spec(spec, signal, seed);
          tau = g.tau;
          const GraphSequence seq = generate_sequence(g);
          gauss.emplace(gaussian_kernel(seq));
          second.emplace(graphlet_kernel(seq));
        }
        const double kernel_ms = ms_between(k0, std::chrono::steady_clock::now());
        for (std::size_t m = 0; m < n_methods; ++m) {
          auto& res = row[m];
          res.kernel_ms = kernel_ms;
          const std::string& method = spec.methods[m];
          PermConfig perm{spec.perms, CounterRng(seed, 1 + m)(), 1, false};
          try {
            TestOutcome out;
            if (vectors) {
              if (method != "KAP_PERM") throw ParameterError(method + " is not available for APPENDIX_A");
              out = fixed_split_test(*gauss, *second, spec.tau.value_or(spec.n / 2), perm);
            } else if (method == "KAP_PERM") {
              out = permutation_test(*gauss, *second, cfg, perm);
            } else if (method == "KAPF") {
              out = fast_test(*gauss, *second, FastConfig{0.5, 2.0, cfg});
            } else if (method == "GKCP_GAUSS") {
              out = single_kernel_test(*gauss, cfg, perm);
            } else {
              out = single_kernel_test(*second, cfg, perm);
            }
            res.ok = true;
            res.p_value = out.p_value;
            res.tau_hat = out.tau_hat;
            res.ms = out.elapsed_ms;
          } catch (const std::exception& e) {
            res.error = e.what();
          }
        }
      } catch (const std::exception& e) {
        fail_all(e.what());
      }
    });

    if (spec.metric != "SIZE") truth = spec.tau.value_or(spec.n / 2);
    for (std::size_t m = 0; m < n_methods; ++m) {
      BenchCell cell;
      cell.scenario = spec.scenario;
      cell.signal = signal;
      cell.method = spec.methods[m];
      cell.runs = spec.runs;
      double ms = 0.0, kms = 0.0, loc = 0.0, loc2 = 0.0;
      std::size_t completed = 0, located = 0;
      for (std::size_t r = 0; r < spec.runs; ++r) {
        const RunResult& res = results[r][m];
        if (!res.ok) {
          ++cell.failures;
          if (cell.error.empty()) cell.error = res.error;
          continue;
        }
        ++completed;
        ms += res.ms;
        kms += res.kernel_ms;
        const bool detected = res.p_value <= spec.alpha;
        if (detected) ++cell.detected;
        if (truth && res.tau_hat) {
          const double err = std::abs(static_cast<double>(*res.tau_hat) - static_cast<double>(*truth));
          loc += err;
          loc2 += err * err;
          ++located;
          if (detected && err <= static_cast<double>(window)) ++cell.accurate;
        } else if (detected) {
          ++cell.accurate;
        }
      }
      if (completed > 0) {
        cell.mean_ms = ms / static_cast<double>(completed);
        cell.mean_kernel_ms = kms / static_cast<double>(completed);
      }
      if (located > 0) {
        const double k = static_cast<double>(located);
        cell.loc_mean = loc / k;
        cell.loc_sd = located > 1 ? std::sqrt(std::max(0.0, (loc2 - k * cell.loc_mean * cell.loc_mean) / (k - 1.0))) : 0.0;
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::string format_bench_csv(const std::vector<BenchCell>& cells) {
  std::ostringstream os;
  os << "scenario,signal,method,runs,detected,accurate,mean_ms,kernel_ms,loc_mean,loc_sd,failures,error\n";
  for (const auto& c : cells) {
    std::string err = c.error;
    for (char& ch : err)
      if (ch == '"') ch = '\'';
    os << c.scenario << ',' << c.signal << ',' << c.method << ',' << c.runs << ',' << c.detected << ',' << c.accurate
       << ',' << c.mean_ms << ',' << c.mean_kernel_ms << ',' << c.loc_mean << ',' << c.loc_sd << ',' << c.failures
       << ",\"" << err << "\"\n";
  }
  return os.str();
}

}  // namespace kapcpd
