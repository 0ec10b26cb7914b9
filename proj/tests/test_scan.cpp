#include <doctest.h>

#include <sstream>

#include "kapcpd/bench.hpp"
#include "kapcpd/errors.hpp"
#include "kapcpd/scan.hpp"
#include "oracles.hpp"

using namespace kapcpd;

namespace {

KernelMatrix block_kernel(std::size_t n, std::size_t tau, double a, double b, double c) {
  std::vector<double> e(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) e[i * n + j] = (i < tau && j < tau) ? a : (i >= tau && j >= tau) ? b : c;
  return KernelMatrix(n, std::move(e));
}

KernelMatrix affine(const KernelMatrix& k, double a, double b) {
  const std::size_t n = k.size();
  std::vector<double> e(k.entries().begin(), k.entries().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) e[i * n + j] = a * e[i * n + j] + b;
  return KernelMatrix(n, std::move(e));
}

KernelMatrix reversed(const KernelMatrix& k) {
  std::vector<std::size_t> order(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) order[i] = k.size() - 1 - i;
  return k.permuted(order);
}

}  // namespace

TEST_SUITE("scan") {
  TEST_CASE("default scan range") {
    CHECK(default_scan_config(100).n0 == 5);
    CHECK(default_scan_config(100).n1 == 95);
    CHECK(default_scan_config(20).n0 == 2);
    CHECK(default_scan_config(20).n1 == 18);
    CHECK(default_scan_config(200, 0.2, 0.8).n0 == 40);
    CHECK(default_scan_config(200, 0.2, 0.8).n1 == 160);
    CHECK_THROWS_AS(validate(ScanConfig{1, 5}, 10), ParameterError);
    CHECK_THROWS_AS(validate(ScanConfig{3, 9}, 10), ParameterError);
    CHECK_THROWS_AS(validate(ScanConfig{6, 5}, 10), ParameterError);
    CHECK_NOTHROW(validate(ScanConfig{2, 8}, 10));
  }

  TEST_CASE("block-constant kernel at the block boundary") {
    const auto k1 = block_kernel(10, 4, 0.8, 0.3, 0.1);
    const auto k2 = block_kernel(10, 4, 0.2, 0.6, 0.5);
    const Vec4 a = raw_processes(k1, k2, 4);
    CHECK(a[kAlpha1] == doctest::Approx(0.8));
    CHECK(a[kBeta1] == doctest::Approx(0.3));
    CHECK(a[kAlpha2] == doctest::Approx(0.2));
    CHECK(a[kBeta2] == doctest::Approx(0.6));
  }

  TEST_CASE("raw processes and the sweep equal the double loop") {
    CounterRng rng(10, 0);
    const auto k1 = oracle::random_kernel(10, rng), k2 = oracle::random_rbf_kernel(10, 2, rng);
    const CenteredPair pair(k1, k2);
    const Vec4 kbar{pair.kbar(0), pair.kbar(0), pair.kbar(1), pair.kbar(1)};
    for (int rep = 0; rep < 5; ++rep) {
      const auto order = rep == 0 ? oracle::identity(10) : random_permutation(10, rng);
      std::vector<Vec4> sweep;
      pair.sweep(order, 2, 8, sweep);
      REQUIRE(sweep.size() == 7);
      for (std::size_t t = 2; t <= 8; ++t) {
        const Vec4 expect = oracle::direct_processes(k1, k2, order, t);
        const Vec4 at = pair.at(order, t);
        if (rep == 0) {
          const Vec4 raw = raw_processes(k1, k2, t);
          for (int i = 0; i < 4; ++i) CHECK(std::abs(raw[i] - expect[i]) <= 1e-12);
        }
        for (int i = 0; i < 4; ++i) {
          CHECK(std::abs(sweep[t - 2][i] + kbar[i] - expect[i]) <= 1e-12);
          CHECK(std::abs(at[i] + kbar[i] - expect[i]) <= 1e-12);
        }
      }
    }
    CHECK_THROWS_AS(raw_processes(k1, k2, 9), ParameterError);
    CHECK_THROWS_AS(raw_processes(k1, k2, 1), ParameterError);
  }

  TEST_CASE("the last valid cut uses only the first n-2 observations for alpha") {
    CounterRng rng(2, 0);
    const auto k1 = oracle::random_kernel(8, rng), k2 = oracle::random_kernel(8, rng);
    const Vec4 a = raw_processes(k1, k2, 6);
    double s = 0;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        if (i != j) s += k1(i, j);
    CHECK(a[kAlpha1] == doctest::Approx(s / 30));
    CHECK(a[kBeta1] == doctest::Approx(k1(6, 7)));
  }

  TEST_CASE("identical kernels are degenerate") {
    CounterRng rng(3, 0);
    const auto k = oracle::random_kernel(12, rng);
    CHECK_THROWS_AS(scan_statistic(k, k, ScanConfig{2, 10}), DegeneracyError);
    CHECK_THROWS_AS(fixed_split_statistic(k, k, 6), DegeneracyError);
    CHECK_THROWS_WITH(scan_statistic(k, k, ScanConfig{3, 10}), doctest::Contains("t = 3"));
  }

  TEST_CASE("decomposition equals the explicit quadratic form") {
    CounterRng rng(20, 0);
    for (std::size_t n : {10, 20, 50})
      for (int draw = 0; draw < 10; ++draw) {
        const auto k1 = oracle::random_kernel(n, rng), k2 = oracle::random_rbf_kernel(n, 3, rng);
        const ScanProfile p = scan_statistic(k1, k2, ScanConfig{2, n - 2}, true);
        for (const auto& pt : p.points) {
          CHECK(pt.s >= 0.0);
          CHECK(std::abs(pt.s - pt.s_quadform) <= 1e-8 * std::max(1.0, pt.s));
        }
      }
  }

  TEST_CASE("planted change is localized") {
    BenchSpec b;
    b.scenario = "ER";
    b.n = 100;
    b.tau = 50;
    std::size_t close = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
      const auto seq = generate_sequence(scenario_spec(b, 0.07, 1000 + run));
      const ScanProfile p = scan_statistic(gaussian_kernel(seq), graphlet_kernel(seq), default_scan_config(100));
      if (p.tau_hat + 5 >= 50 && p.tau_hat <= 55) ++close;
    }
    CHECK(close >= 95);
  }

  TEST_CASE("fixed split equals the profile and has mean four under permutation") {
    CounterRng rng(30, 0);
    const std::size_t n = 30;
    const auto k1 = oracle::random_kernel(n, rng), k2 = oracle::random_rbf_kernel(n, 2, rng);
    const ScanProfile prof = scan_statistic(k1, k2, default_scan_config(n));
    for (std::size_t tau : {5, 15, 24}) CHECK(fixed_split_statistic(k1, k2, tau) == prof.at(tau).s);

    const MomentCache cache = build_cache(k1, k2);
    const CenteredPair pair(k1, k2);
    const ScanPlan plan = ScanPlan::aggregated(cache, ScanConfig{12, 12});
    std::vector<double> s;
    for (int d = 0; d < 20000; ++d) s.push_back(plan.statistic(12, pair.at(random_permutation(n, rng), 12)));
    const double m = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
    const double se = std::sqrt(oracle::sample_cov(s, s).estimate / s.size());
    CHECK(std::abs(m - 4.0) <= 4 * se);
  }

  TEST_CASE("affine maps of the kernels leave the profile unchanged") {
    CounterRng rng(40, 0);
    const std::size_t n = 25;
    const auto k1 = oracle::random_kernel(n, rng), k2 = oracle::random_rbf_kernel(n, 2, rng);
    const ScanConfig cfg = default_scan_config(n);
    const ScanProfile p = scan_statistic(k1, k2, cfg);
    const ScanProfile common = scan_statistic(affine(k1, 2.5, -0.7), affine(k2, 2.5, -0.7), cfg);
    const ScanProfile separate = scan_statistic(affine(k1, 0.3, 4.0), affine(k2, 7.0, 1.0), cfg);
    CHECK(common.tau_hat == p.tau_hat);
    CHECK(separate.tau_hat == p.tau_hat);
    for (std::size_t t = cfg.n0; t <= cfg.n1; ++t) {
      CHECK(std::abs(common.at(t).s - p.at(t).s) <= 1e-8 * std::max(1.0, p.at(t).s));
      CHECK(std::abs(common.at(t).z_wdiff - p.at(t).z_wdiff) <= 1e-8);
      CHECK(std::abs(common.at(t).z_dsum - p.at(t).z_dsum) <= 1e-8);
      CHECK(std::abs(separate.at(t).s - p.at(t).s) <= 1e-8 * std::max(1.0, p.at(t).s));
    }
  }

  TEST_CASE("reversing the sequence reverses the profile") {
    CounterRng rng(50, 0);
    const std::size_t n = 30;
    const auto k1 = oracle::random_kernel(n, rng), k2 = oracle::random_rbf_kernel(n, 3, rng);
    const ScanProfile p = scan_statistic(k1, k2, ScanConfig{3, n - 3});
    const ScanProfile r = scan_statistic(reversed(k1), reversed(k2), ScanConfig{3, n - 3});
    for (std::size_t t = 3; t <= n - 3; ++t) {
      CHECK(std::abs(r.at(n - t).s - p.at(t).s) <= 1e-9 * std::max(1.0, p.at(t).s));
      CHECK(r.at(n - t).alpha1 == doctest::Approx(p.at(t).beta1).epsilon(1e-12));
    }
  }

  TEST_CASE("profile CSV") {
    CounterRng rng(60, 0);
    const auto k1 = oracle::random_kernel(12, rng), k2 = oracle::random_rbf_kernel(12, 2, rng);
    const ScanProfile p = scan_statistic(k1, k2, ScanConfig{3, 9});
    std::istringstream in(format_profile_csv(p));
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,S,Z_Wdiff,Z_Ddiff,Z_Wsum,Z_Dsum");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string cell;
      std::getline(row, cell, ',');
      CHECK(std::stoul(cell) == 3 + rows);
      std::getline(row, cell, ',');
      CHECK(std::stod(cell) == p.points[rows].s);
      ++rows;
    }
    CHECK(rows == 7);
  }

  TEST_CASE("tau_hat is the first maximizer") {
    CounterRng rng(70, 0);
    const auto k1 = oracle::random_kernel(16, rng), k2 = oracle::random_rbf_kernel(16, 2, rng);
    const ScanProfile p = scan_statistic(k1, k2, ScanConfig{2, 14});
    double best = -1;
    std::size_t arg = 0;
    for (const auto& pt : p.points)
      if (pt.s > best) {
        best = pt.s;
        arg = pt.t;
      }
    CHECK(p.tau_hat == arg);
    CHECK(p.s_star == best);
  }
}
