#include <doctest.h>

#include "kapcpd/errors.hpp"
#include "kapcpd/moments.hpp"
#include "kapcpd/scan.hpp"
#include "oracles.hpp"

using namespace kapcpd;

namespace {

KernelMatrix constant_kernel(std::size_t n, double c) {
  std::vector<double> e(n * n, c);
  for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
  return KernelMatrix(n, std::move(e));
}

double rel(double a, double b, double scale) { return std::abs(a - b) / std::max(scale, 1e-300); }

double max_abs(const Mat4& m) {
  double s = 0;
  for (const auto& row : m)
    for (double v : row) s = std::max(s, std::abs(v));
  return s;
}

Vec4 coefficients(Process p, double r, std::size_t n, std::size_t t) {
  switch (p) {
    case Process::D1: return d_coefficients(n, t, 0);
    case Process::D2: return d_coefficients(n, t, 1);
    case Process::W1R: return w_coefficients(n, t, 0, r);
    case Process::W2R: return w_coefficients(n, t, 1, r);
  }
  return {};
}

double dot(const Vec4& a, const Vec4& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]; }

// Exact correlation of a process at two cuts over all n! orderings.
double enumerated_correlation(const KernelMatrix& k1, const KernelMatrix& k2, Process p, double r, std::size_t s,
                              std::size_t t) {
  const std::size_t n = k1.size();
  const Vec4 cs = coefficients(p, r, n, s), ct = coefficients(p, r, n, t);
  auto order = oracle::identity(n);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, m = 0;
  do {
    const double x = dot(cs, oracle::direct_processes(k1, k2, order, s));
    const double y = dot(ct, oracle::direct_processes(k1, k2, order, t));
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
    m += 1;
  } while (std::next_permutation(order.begin(), order.end()));
  const double cxy = sxy / m - sx / m * sy / m;
  return cxy / std::sqrt((sxx / m - sx / m * sx / m) * (syy / m - sy / m * sy / m));
}

KernelMatrix reversed(const KernelMatrix& k) {
  const std::size_t n = k.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = n - 1 - i;
  return k.permuted(order);
}

constexpr Process kAllProcesses[] = {Process::D1, Process::D2, Process::W1R, Process::W2R};

}  // namespace

TEST_SUITE("moments") {
  TEST_CASE("constant kernel sums") {
    const double c = 0.3;
    const auto k = constant_kernel(5, c);
    const MomentCache cache = build_cache(k, k);
    CHECK(cache.kbar(0) == doctest::Approx(c));
    CHECK(cache.raw(0, 1).A == doctest::Approx(20 * c * c));
    CHECK(cache.raw(0, 1).B == doctest::Approx(60 * c * c));
    CHECK(cache.raw(0, 1).C == doctest::Approx(120 * c * c));
    for (std::size_t t = 2; t <= 3; ++t) {
      const TimeMoments m = time_moments(cache, t);
      CHECK(std::abs(m.sigma[kAlpha1][kAlpha1]) <= 1e-15);
      CHECK(std::abs(m.sigma[kBeta1][kBeta1]) <= 1e-15);
    }
  }

  TEST_CASE("cache sums equal the quadruple loop") {
    CounterRng rng(6, 0);
    for (int draw = 0; draw < 50; ++draw) {
      const std::size_t n = draw == 0 ? 6 : 4 + rng.below(11);
      const auto k1 = oracle::random_kernel(n, rng);
      const auto k2 = draw % 2 ? oracle::random_rbf_kernel(n, 3, rng) : oracle::random_kernel(n, rng);
      const MomentCache cache = build_cache(k1, k2);
      const KernelMatrix* ks[2] = {&k1, &k2};
      for (std::size_t a = 0; a < 2; ++a) {
        CHECK(rel(cache.kbar(a), oracle::brute_kbar(*ks[a]), std::abs(cache.kbar(a))) <= 1e-10);
        for (std::size_t b = 0; b < 2; ++b) {
          const auto s = oracle::brute_sums(*ks[a], *ks[b]);
          CHECK(rel(cache.raw(a, b).A, s.A, std::abs(s.A)) <= 1e-9);
          CHECK(rel(cache.raw(a, b).B, s.B, std::abs(s.B)) <= 1e-9);
          CHECK(rel(cache.raw(a, b).C, s.C, std::abs(s.C)) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("identical kernels give a symmetric cache") {
    CounterRng rng(2, 0);
    const auto k = oracle::random_kernel(9, rng);
    const MomentCache cache = build_cache(k, k);
    CHECK(cache.raw(0, 1).A == cache.raw(1, 0).A);
    CHECK(cache.raw(0, 1).B == doctest::Approx(cache.raw(1, 0).B).epsilon(1e-13));
    CHECK(cache.raw(0, 0).C == doctest::Approx(cache.raw(1, 1).C).epsilon(1e-13));
  }

  TEST_CASE("cache scalars are invariant to a common relabeling") {
    CounterRng rng(3, 0);
    const auto k1 = oracle::random_kernel(11, rng), k2 = oracle::random_rbf_kernel(11, 2, rng);
    const auto order = random_permutation(11, rng);
    const MomentCache a = build_cache(k1, k2), b = build_cache(k1.permuted(order), k2.permuted(order));
    for (std::size_t x = 0; x < 2; ++x) {
      CHECK(a.kbar(x) == doctest::Approx(b.kbar(x)).epsilon(1e-13));
      for (std::size_t y = 0; y < 2; ++y) {
        CHECK(a.raw(x, y).A == doctest::Approx(b.raw(x, y).A).epsilon(1e-12));
        CHECK(a.raw(x, y).B == doctest::Approx(b.raw(x, y).B).epsilon(1e-12));
        CHECK(a.raw(x, y).C == doctest::Approx(b.raw(x, y).C).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("same-time moments equal the brute-force covariance formulas") {
    CounterRng rng(14, 0);
    for (int draw = 0; draw < 50; ++draw) {
      const std::size_t n = 5 + rng.below(10);
      const auto k1 = oracle::random_kernel(n, rng);
      const auto k2 = oracle::random_rbf_kernel(n, 1 + rng.below(4), rng);
      const MomentCache cache = build_cache(k1, k2);
      for (std::size_t t = 2; t + 2 <= n; ++t) {
        const Mat4 expect = oracle::lemma_sigma(k1, k2, t);
        const TimeMoments m = time_moments(cache, t);
        const TimeMoments u = time_moments_uncentered(cache, t);
        const double scale = max_abs(expect);
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j) {
            CHECK(rel(m.sigma[i][j], expect[i][j], scale) <= 1e-9);
            CHECK(rel(u.sigma[i][j], expect[i][j], scale) <= 1e-9);
            CHECK(m.sigma[i][j] == m.sigma[j][i]);
          }
        CHECK(m.mean[kAlpha1] == doctest::Approx(cache.kbar(0)).epsilon(1e-14));
        CHECK(m.mean[kBeta2] == doctest::Approx(cache.kbar(1)).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("same-time moments equal full enumeration of orderings") {
    CounterRng rng(7, 0);
    const auto k1 = oracle::random_kernel(7, rng), k2 = oracle::random_rbf_kernel(7, 2, rng);
    const MomentCache cache = build_cache(k1, k2);
    for (std::size_t t = 2; t <= 5; ++t) {
      const auto [mean, cov] = oracle::enumerate_moments(k1, k2, t);
      const TimeMoments m = time_moments(cache, t);
      const double scale = max_abs(cov);
      for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(m.mean[i] - mean[i]) <= 1e-12);
        for (int j = 0; j < 4; ++j) CHECK(rel(m.sigma[i][j], cov[i][j], scale) <= 1e-9);
      }
    }
  }

  TEST_CASE("sigma(t) matches a permutation Monte Carlo at n = 12, t = 5") {
    CounterRng rng(12, 0);
    const auto k1 = oracle::random_kernel(12, rng), k2 = oracle::random_rbf_kernel(12, 2, rng);
    const TimeMoments m = time_moments(build_cache(k1, k2), 5);
    const std::size_t draws = 200000;
    std::array<std::vector<double>, 4> x;
    for (auto& v : x) v.reserve(draws);
    CounterRng perm_rng(99, 0);
    for (std::size_t d = 0; d < draws; ++d) {
      const Vec4 a = oracle::direct_processes(k1, k2, random_permutation(12, perm_rng), 5);
      for (int i = 0; i < 4; ++i) x[i].push_back(a[i]);
    }
    for (int i = 0; i < 4; ++i) {
      const double mean = std::accumulate(x[i].begin(), x[i].end(), 0.0) / draws;
      const double sd = std::sqrt(oracle::sample_cov(x[i], x[i]).estimate / draws);
      CHECK(std::abs(mean - m.mean[i]) <= 4 * sd);
      for (int j = i; j < 4; ++j) {
        const auto c = oracle::sample_cov(x[i], x[j]);
        CHECK(std::abs(c.estimate - m.sigma[i][j]) <= 4 * c.se);
      }
    }
  }

  TEST_CASE("orthogonality of W and D and of the c1, c2 directions") {
    CounterRng rng(33, 0);
    for (int draw = 0; draw < 20; ++draw) {
      const std::size_t n = 6 + rng.below(40);
      const auto k1 = oracle::random_kernel(n, rng), k2 = oracle::random_rbf_kernel(n, 3, rng);
      const MomentCache cache = build_cache(k1, k2);
      const ScanProfile prof = scan_statistic(k1, k2, ScanConfig{2, n - 2});
      for (std::size_t t = 2; t + 2 <= n; ++t) {
        const TimeMoments m = time_moments(cache, t);
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b)
            CHECK(std::abs(m.cov_wd(a, b)) <= 1e-9 * std::sqrt(m.var_w(a) * m.var_d(b)));
        const Vec4 w1 = w_coefficients(n, t, 0), w2 = w_coefficients(n, t, 1);
        const Vec4 d1 = d_coefficients(n, t, 0), d2 = d_coefficients(n, t, 1);
        const double c1 = prof.at(t).c1, c2 = prof.at(t).c2;
        const Vec4 wsum{c1 * w1[0], c1 * w1[1], w2[2], w2[3]};
        const Vec4 dsum{c2 * d1[0], c2 * d1[1], d2[2], d2[3]};
        const Vec4 wdiff{w1[0], w1[1], -w2[2], -w2[3]};
        const Vec4 ddiff{d1[0], d1[1], -d2[2], -d2[3]};
        CHECK(std::abs(m.cov(wsum, wdiff)) <= 1e-9 * std::sqrt(m.var(wsum) * m.var(wdiff)));
        CHECK(std::abs(m.cov(dsum, ddiff)) <= 1e-9 * std::sqrt(m.var(dsum) * m.var(ddiff)));
      }
    }
  }

  TEST_CASE("cross-time correlation equals enumeration over all orderings") {
    CounterRng rng(8, 0);
    const auto k1 = oracle::random_kernel(8, rng), k2 = oracle::random_rbf_kernel(8, 2, rng);
    const MomentCache cache = build_cache(k1, k2);
    for (Process p : kAllProcesses)
      for (double r : {0.5, 2.0})
        for (auto [s, t] : {std::pair<std::size_t, std::size_t>{2, 3}, {3, 5}, {2, 6}, {4, 5}, {5, 6}}) {
          const double expect = enumerated_correlation(k1, k2, p, r, s, t);
          CHECK(std::abs(cross_time_correlation(cache, p, r, s, t) - expect) <= 1e-9);
          CHECK(std::abs(finite_sample_slope(cache, p, r, s) -
                         (1 - enumerated_correlation(k1, k2, p, r, s, s + 1))) <= 1e-9);
        }
  }

  TEST_CASE("cross-time correlation matches a permutation Monte Carlo at n = 12, (s, t) = (4, 7)") {
    CounterRng rng(21, 0);
    const auto k1 = oracle::random_kernel(12, rng), k2 = oracle::random_rbf_kernel(12, 2, rng);
    const MomentCache cache = build_cache(k1, k2);
    const std::size_t draws = 200000;
    std::array<std::vector<double>, 4> at4, at7;
    CounterRng perm_rng(5, 0);
    for (std::size_t d = 0; d < draws; ++d) {
      const auto order = random_permutation(12, perm_rng);
      const Vec4 a4 = oracle::direct_processes(k1, k2, order, 4), a7 = oracle::direct_processes(k1, k2, order, 7);
      for (int i = 0; i < 4; ++i) {
        const double r = i < 2 ? 0.5 : 2.0;
        at4[i].push_back(dot(coefficients(kAllProcesses[i], r, 12, 4), a4));
        at7[i].push_back(dot(coefficients(kAllProcesses[i], r, 12, 7), a7));
      }
    }
    for (int i = 0; i < 4; ++i) {
      const double r = i < 2 ? 0.5 : 2.0;
      const auto mc = oracle::sample_corr(at4[i], at7[i]);
      CHECK(std::abs(cross_time_correlation(cache, kAllProcesses[i], r, 4, 7) - mc.estimate) <= 4 * mc.se);
    }
  }

  TEST_CASE("self-correlation and time reversal") {
    CounterRng rng(4, 0);
    const std::size_t n = 13;
    const auto k1 = oracle::random_kernel(n, rng), k2 = oracle::random_rbf_kernel(n, 3, rng);
    const MomentCache cache = build_cache(k1, k2);
    const MomentCache rev = build_cache(reversed(k1), reversed(k2));
    for (std::size_t s = 2; s + 2 <= n; ++s) {
      CHECK(cross_time_correlation(cache, Process::D1, 1.0, s, s) == 1.0);
      for (std::size_t t = s; t + 2 <= n; ++t) {
        for (Process p : {Process::D1, Process::D2})
          CHECK(std::abs(cross_time_correlation(cache, p, 1.0, s, t) -
                         cross_time_correlation(rev, p, 1.0, n - t, n - s)) <= 1e-10);
        // W_r of the reversed sequence at n - t is r W_{1/r} at t.
        CHECK(std::abs(cross_time_correlation(cache, Process::W1R, 0.5, s, t) -
                       cross_time_correlation(rev, Process::W1R, 2.0, n - t, n - s)) <= 1e-10);
      }
    }
  }

  TEST_CASE("slopes are non-negative and finite at the boundary") {
    CounterRng rng(10, 0);
    const std::size_t n = 12;
    const auto k1 = oracle::random_kernel(n, rng), k2 = oracle::random_rbf_kernel(n, 2, rng);
    const MomentCache cache = build_cache(k1, k2);
    for (Process p : kAllProcesses)
      for (double r : {0.5, 2.0})
        for (std::size_t t = 2; t + 2 <= n; ++t) {
          const double c = finite_sample_slope(cache, p, r, t);
          CHECK(std::isfinite(c));
          CHECK(c >= -1e-9);
        }
    CHECK(std::isfinite(finite_sample_slope(cache, Process::D1, 1.0, n - 3)));
  }

  TEST_CASE("degenerate and out-of-range inputs") {
    const auto k = constant_kernel(10, 0.4);
    const MomentCache cache = build_cache(k, k);
    CHECK_THROWS_AS(finite_sample_slope(cache, Process::D1, 1.0, 4), DegeneracyError);
    CHECK_THROWS_AS(cross_time_correlation(cache, Process::W1R, 0.5, 3, 5), DegeneracyError);
    CounterRng rng(1, 0);
    const auto r = oracle::random_kernel(10, rng);
    const MomentCache ok = build_cache(r, r);
    CHECK_THROWS_AS(time_moments(ok, 1), ParameterError);
    CHECK_THROWS_AS(time_moments(ok, 9), ParameterError);
    CHECK_THROWS_AS(cross_time_correlation(ok, Process::W1R, 1.0, 3, 5), ParameterError);
    CHECK_THROWS_AS(build_cache(r, oracle::random_kernel(9, rng)), ParameterError);
  }
}
