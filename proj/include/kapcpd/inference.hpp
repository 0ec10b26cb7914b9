#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kapcpd/kernels.hpp"
#include "kapcpd/scan.hpp"

namespace kapcpd {

enum class Method { KAP_PERM, KAPF_ANALYTIC, FIXED_SPLIT, GKCP_PERM };

std::string to_string(Method m);

struct PermConfig {
  std::size_t B = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0 = resolve_workers()
  bool add_one = false;     // (1 + count) / (1 + B) instead of count / B
};

struct FastConfig {
  double r1 = 0.5;
  double r2 = 2.0;
  ScanConfig cfg;
};

struct ComponentResult {
  std::string name;
  double max = 0.0;
  double p_value = 1.0;
};

struct TestOutcome {
  Method method = Method::KAP_PERM;
  double p_value = 1.0;
  std::optional<std::size_t> tau_hat;
  double s_star = 0.0;
  std::vector<ComponentResult> components;  // fast test only
  std::size_t permutations = 0;
  std::size_t degenerate_replicas = 0;
  double elapsed_ms = 0.0;
};

/// Scan maxima of B row/column permutations of the kernels. Replica b uses
/// CounterRng(seed, b), so the result does not depend on the worker count.
std::vector<double> permutation_maxima(const ScanPlan& plan, const CenteredPair& pair, const PermConfig& pcfg);

/// Algorithm-1 style test with the aggregated statistic.
TestOutcome permutation_test(const KernelMatrix& k1, const KernelMatrix& k2, const ScanConfig& cfg,
                             const PermConfig& pcfg);

/// Validation mode: each replica reorders the sequence and rebuilds both
/// kernels from scratch. Degenerate replicas count as exceeding S*; more than
/// 1% of them aborts with DegeneracyError.
TestOutcome permutation_test_strict(const GraphSequence& seq, const KernelSource& s1, const KernelSource& s2,
                                    const ScanConfig& cfg, const PermConfig& pcfg);

/// Single-kernel baseline: max_t Z_W(t)^2 + Z_D(t)^2, permutation p-value.
TestOutcome single_kernel_test(const KernelMatrix& k, const ScanConfig& cfg, const PermConfig& pcfg);

/// Bonferroni combination of the six analytic component p-values.
TestOutcome fast_test(const KernelMatrix& k1, const KernelMatrix& k2, const FastConfig& fcfg);

/// Permutation p-value of S(tau) alone.
TestOutcome fixed_split_test(const KernelMatrix& k1, const KernelMatrix& k2, std::size_t tau, const PermConfig& pcfg);

/// count / B or (1 + count) / (1 + B).
double permutation_p_value(const std::vector<double>& maxima, double observed, bool add_one);

}  // namespace kapcpd
