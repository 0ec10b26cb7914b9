#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kapcpd/graphs.hpp"

namespace kapcpd {

/// A grid of simulation cells. `scenario` is one of the generator settings
/// (ER, SBM, SPARSE_SBM, DCSBM_DEGREE, DCSBM_HUB, DCSBM_BLOCK, RGG, ERGM) or
/// APPENDIX_A (fixed-split test on heavy-tailed vectors). The meaning of a
/// signal value depends on the scenario, see README.
struct BenchSpec {
  std::string scenario = "ER";
  std::vector<double> signals{0.0};
  std::size_t runs = 100;
  std::vector<std::string> methods{"KAP_PERM", "KAPF"};
  std::uint64_t seed = 1;
  std::string metric = "ACCURATE_DETECTION";  // or SIZE, RUNTIME, LOCALIZATION

  std::size_t n = 100;
  std::optional<std::size_t> n_nodes;  // scenario default when absent
  std::optional<std::size_t> tau;      // n / 2 when absent; no change under SIZE
  std::size_t perms = 200;
  double n0_frac = 0.05;
  double n1_frac = 0.95;
  bool unbalanced = false;  // n0 = 0.04 n, n1 = 0.95 n
  double alpha = 0.05;
  std::size_t dim = 30;     // APPENDIX_A vector dimension
  std::size_t workers = 0;  // runs evaluated concurrently; 0 = resolve_workers()
};

BenchSpec parse_bench_spec(const nlohmann::json& j);
BenchSpec read_bench_spec(const std::string& path);

struct BenchCell {
  std::string scenario;
  double signal = 0.0;
  std::string method;
  std::size_t runs = 0;
  std::size_t detected = 0;
  std::size_t accurate = 0;
  std::size_t failures = 0;
  double mean_ms = 0.0;         // test only, kernels excluded
  double mean_kernel_ms = 0.0;  // kernel construction
  double loc_mean = 0.0;        // mean |tau_hat - tau| over completed runs
  double loc_sd = 0.0;
  std::string error;            // first failure message, if any
};

/// RGG connection radius 0.9 sqrt(log N / (pi N)).
double rgg_base_radius(std::size_t n_nodes);

/// theta_i = y_i / mean(y), y_i ~ LogNormal(0, sd).
std::vector<double> lognormal_theta(std::size_t n_nodes, double sd, CounterRng& rng);

/// Generator spec of one run of a graph scenario at a given signal.
GeneratorSpec scenario_spec(const BenchSpec& spec, double signal, std::uint64_t seed);

/// Rows of X_1..X_tau ~ t_3(0, I_d), X_{tau+1}..X_n ~ t_3(mu, I_d) with
/// mu_j = delta for j < 10 and 0 otherwise.
std::vector<std::vector<double>> heavy_tailed_shift(std::size_t n, std::size_t tau, std::size_t d, double delta,
                                                    CounterRng& rng);

/// Cells in canonical (signal, method) order.
std::vector<BenchCell> run_bench(const BenchSpec& spec);

/// scenario,signal,method,runs,detected,accurate,mean_ms,kernel_ms,loc_mean,loc_sd,failures,error
std::string format_bench_csv(const std::vector<BenchCell>& cells);

}  // namespace kapcpd
