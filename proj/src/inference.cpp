#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "kapcpd/errors.hpp"
#include "kapcpd/inference.hpp"
#include "kapcpd/parallel.hpp"
#include "kapcpd/tail.hpp"

namespace kapcpd {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_perm_config(const PermConfig& pcfg) {
  if (pcfg.B < 1) throw ParameterError("number of permutations B must be at least 1");
}

double dot(const Vec4& a, const Vec4& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]; }

std::string component_name(Process p, double r) {
  std::ostringstream os;
  if (is_w_process(p)) os << "Z_W" << kernel_of(p) + 1 << ",r=" << r;
  else os << "Z_D" << kernel_of(p) + 1;
  return os.str();
}

// Standardized process along `coeffs(t)` over the scan range.
template <class Coeffs>
std::vector<double> standardized_path(const MomentCache& cache, const std::vector<Vec4>& sweep, const ScanConfig& cfg,
                                      const std::string& name, Coeffs coeffs) {
  std::vector<double> z;
  z.reserve(sweep.size());
  for (std::size_t t = cfg.n0; t <= cfg.n1; ++t) {
    const Vec4 c = coeffs(t);
    const double v = time_moments(cache, t).var(c);
    if (!(v > variance_floor(cache, c)))
      throw DegeneracyError(name + " has zero permutation variance at t = " + std::to_string(t), static_cast<long>(t));
    z.push_back(dot(c, sweep[t - cfg.n0]) / std::sqrt(v));
  }
  return z;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::KAP_PERM: return "KAP_PERM";
    case Method::KAPF_ANALYTIC: return "KAPF_ANALYTIC";
    case Method::FIXED_SPLIT: return "FIXED_SPLIT";
    case Method::GKCP_PERM: return "GKCP_PERM";
  }
  return "?";
}

double permutation_p_value(const std::vector<double>& maxima, double observed, bool add_one) {
  std::size_t count = 0;
  for (double m : maxima)
    if (m >= observed) ++count;
  const double B = static_cast<double>(maxima.size());
  if (add_one) return (1.0 + static_cast<double>(count)) / (1.0 + B);
  return static_cast<double>(count) / B;
}

std::vector<double> permutation_maxima(const ScanPlan& plan, const CenteredPair& pair, const PermConfig& pcfg) {
  check_perm_config(pcfg);
  const std::size_t n = pair.n();
  const ScanConfig cfg = plan.config();
  std::vector<double> maxima(pcfg.B);
  parallel_for(pcfg.B, resolve_workers(pcfg.workers), [&](std::size_t b) {
    thread_local std::vector<Vec4> sweep;
    CounterRng rng(pcfg.seed, b);
    const auto order = random_permutation(n, rng);
    pair.sweep(order, cfg.n0, cfg.n1, sweep);
    maxima[b] = plan.maximize(sweep).first;
  });
  return maxima;
}

TestOutcome permutation_test(const KernelMatrix& k1, const KernelMatrix& k2, const ScanConfig& cfg,
                             const PermConfig& pcfg) {
  check_perm_config(pcfg);
  const auto start = Clock::now();
  const MomentCache cache = build_cache(k1, k2);
  const CenteredPair pair(k1, k2);
  const ScanPlan plan = ScanPlan::aggregated(cache, cfg);
  std::vector<Vec4> sweep;
  pair.sweep({}, cfg.n0, cfg.n1, sweep);
  const auto [s_star, tau] = plan.maximize(sweep);

  TestOutcome out;
  out.method = Method::KAP_PERM;
  out.s_star = s_star;
  out.tau_hat = tau;
  out.permutations = pcfg.B;
  out.p_value = permutation_p_value(permutation_maxima(plan, pair, pcfg), s_star, pcfg.add_one);
  out.elapsed_ms = ms_since(start);
  return out;
}

TestOutcome permutation_test_strict(const GraphSequence& seq, const KernelSource& s1, const KernelSource& s2,
                                    const ScanConfig& cfg, const PermConfig& pcfg) {
  check_perm_config(pcfg);
  if (s1.kind == KernelKind::EXTERNAL || s2.kind == KernelKind::EXTERNAL)
    throw ParameterError("strict permutation mode needs kernels computed from the sequence");
  const auto start = Clock::now();
  const ScanProfile observed = scan_statistic(s1.build(seq), s2.build(seq), cfg);

  std::vector<double> maxima(pcfg.B);
  std::vector<char> degenerate(pcfg.B, 0);
  parallel_for(pcfg.B, resolve_workers(pcfg.workers), [&](std::size_t b) {
    CounterRng rng(pcfg.seed, b);
    const auto order = random_permutation(seq.size(), rng);
    const GraphSequence shuffled = seq.permuted(order);
    try {
      maxima[b] = scan_statistic(s1.build(shuffled), s2.build(shuffled), cfg).s_star;
    } catch (const DegeneracyError&) {
      maxima[b] = std::numeric_limits<double>::infinity();
      degenerate[b] = 1;
    }
  });

  TestOutcome out;
  out.method = Method::KAP_PERM;
  out.s_star = observed.s_star;
  out.tau_hat = observed.tau_hat;
  out.permutations = pcfg.B;
  for (char d : degenerate) out.degenerate_replicas += d ? 1 : 0;
  if (out.degenerate_replicas > 0)
    log_warning(std::to_string(out.degenerate_replicas) + " of " + std::to_string(pcfg.B) +
                " permuted replicas were degenerate and counted as exceeding S*");
  if (100 * out.degenerate_replicas > pcfg.B)
    throw DegeneracyError("more than 1% of permuted replicas were degenerate");
  out.p_value = permutation_p_value(maxima, observed.s_star, pcfg.add_one);
  out.elapsed_ms = ms_since(start);
  return out;
}

TestOutcome single_kernel_test(const KernelMatrix& k, const ScanConfig& cfg, const PermConfig& pcfg) {
  check_perm_config(pcfg);
  const auto start = Clock::now();
  const MomentCache cache = build_cache(k, k);
  const CenteredPair pair(k, k);
  const ScanPlan plan = ScanPlan::single_kernel(cache, 0, cfg);
  std::vector<Vec4> sweep;
  pair.sweep({}, cfg.n0, cfg.n1, sweep);
  const auto [s_star, tau] = plan.maximize(sweep);

  TestOutcome out;
  out.method = Method::GKCP_PERM;
  out.s_star = s_star;
  out.tau_hat = tau;
  out.permutations = pcfg.B;
  out.p_value = permutation_p_value(permutation_maxima(plan, pair, pcfg), s_star, pcfg.add_one);
  out.elapsed_ms = ms_since(start);
  return out;
}

TestOutcome fast_test(const KernelMatrix& k1, const KernelMatrix& k2, const FastConfig& fcfg) {
  if (fcfg.r1 == 1.0 || fcfg.r2 == 1.0) throw ParameterError("r1 and r2 must differ from 1");
  if (!(fcfg.r1 > 0.0 && fcfg.r2 > 0.0)) throw ParameterError("r1 and r2 must be positive");
  const auto start = Clock::now();
  const ScanConfig& cfg = fcfg.cfg;
  const std::size_t n = k1.size();
  const MomentCache cache = build_cache(k1, k2);
  const CenteredPair pair(k1, k2);
  const ScanPlan plan = ScanPlan::aggregated(cache, cfg);
  std::vector<Vec4> sweep;
  pair.sweep({}, cfg.n0, cfg.n1, sweep);
  const auto [s_star, tau] = plan.maximize(sweep);

  TestOutcome out;
  out.method = Method::KAPF_ANALYTIC;
  out.s_star = s_star;
  out.tau_hat = tau;

  for (std::size_t x = 0; x < 2; ++x) {
    const Process p = x == 0 ? Process::D1 : Process::D2;
    const std::string name = component_name(p, 1.0);
    const auto z = standardized_path(cache, sweep, cfg, name, [&](std::size_t t) { return d_coefficients(n, t, x); });
    double m = 0.0;
    for (double v : z) m = std::max(m, std::abs(v));
    out.components.push_back({name, m, tail_p_value(slope_profile(cache, p, 1.0, cfg), m, kTwoSidedFactor)});
  }
  for (std::size_t x = 0; x < 2; ++x) {
    const Process p = x == 0 ? Process::W1R : Process::W2R;
    for (double r : {fcfg.r1, fcfg.r2}) {
      const std::string name = component_name(p, r);
      const auto z =
          standardized_path(cache, sweep, cfg, name, [&](std::size_t t) { return w_coefficients(n, t, x, r); });
      double m = -std::numeric_limits<double>::infinity();
      for (double v : z) m = std::max(m, v);
      out.components.push_back({name, m, tail_p_value(slope_profile(cache, p, r, cfg), m, kOneSidedFactor)});
    }
  }
  double best = 1.0;
  for (const auto& c : out.components) best = std::min(best, c.p_value);
  out.p_value = std::min(1.0, 6.0 * best);
  out.elapsed_ms = ms_since(start);
  return out;
}

TestOutcome fixed_split_test(const KernelMatrix& k1, const KernelMatrix& k2, std::size_t tau, const PermConfig& pcfg) {
  check_perm_config(pcfg);
  const auto start = Clock::now();
  const MomentCache cache = build_cache(k1, k2);
  const CenteredPair pair(k1, k2);
  const ScanPlan plan = ScanPlan::aggregated(cache, ScanConfig{tau, tau});
  std::vector<Vec4> sweep;
  pair.sweep({}, tau, tau, sweep);
  const double observed = plan.statistic(tau, sweep[0]);

  TestOutcome out;
  out.method = Method::FIXED_SPLIT;
  out.s_star = observed;
  out.tau_hat = tau;
  out.permutations = pcfg.B;
  out.p_value = permutation_p_value(permutation_maxima(plan, pair, pcfg), observed, pcfg.add_one);
  out.elapsed_ms = ms_since(start);
  return out;
}

}  // namespace kapcpd
