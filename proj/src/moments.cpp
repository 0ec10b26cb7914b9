#include <cmath>
#include <string>

#include "kapcpd/errors.hpp"
#include "kapcpd/moments.hpp"

namespace kapcpd {

namespace {

// Neumaier compensated sum.
class Accumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

constexpr double kRelativeFloor = 1e-14;

void check_cut(std::size_t n, std::size_t t) {
  if (t < 2 || t + 2 > n)
    throw ParameterError("cut t = " + std::to_string(t) + " outside [2, n-2] for n = " + std::to_string(n));
}

// Falling-factorial placement weights for the first t (or last n-t) positions.
struct Placement {
  double p1, p2, p3;
};

Placement placement(double n, double m) {
  const double p1 = m * (m - 1.0) / (n * (n - 1.0));
  const double p2 = p1 * (m - 2.0) / (n - 2.0);
  const double p3 = p2 * (m - 3.0) / (n - 3.0);
  return {p1, p2, p3};
}

TimeMoments moments_from(const MomentCache& cache, std::size_t t, bool centered) {
  const double n = static_cast<double>(cache.n());
  const double td = static_cast<double>(t);
  const double sd = n - td;
  const Placement p = placement(n, td);
  const Placement q = placement(n, sd);
  const double alpha_norm = td * td * (td - 1.0) * (td - 1.0);
  const double beta_norm = sd * sd * (sd - 1.0) * (sd - 1.0);
  const double four = n * (n - 1.0) * (n - 2.0) * (n - 3.0);

  TimeMoments m;
  m.t = t;
  m.n = cache.n();
  m.mean = {cache.kbar(0), cache.kbar(0), cache.kbar(1), cache.kbar(1)};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      const PairSums& s = centered ? cache.centered(a, b) : cache.raw(a, b);
      const double shift = centered ? 0.0 : cache.kbar(a) * cache.kbar(b);
      const double aa = (2.0 * s.A * p.p1 + 4.0 * s.B * p.p2 + s.C * p.p3) / alpha_norm - shift;
      const double bb = (2.0 * s.A * q.p1 + 4.0 * s.B * q.p2 + s.C * q.p3) / beta_norm - shift;
      const double ab = s.C / four - shift;
      m.sigma[2 * a][2 * b] = aa;
      m.sigma[2 * a + 1][2 * b + 1] = bb;
      m.sigma[2 * a][2 * b + 1] = ab;
      m.sigma[2 * a + 1][2 * b] = ab;
    }
  return m;
}

// Weight of Gamma_pre(s) and Gamma_suf(s) in a process value at cut s.
std::pair<double, double> gamma_weights(Process p, double r, std::size_t n_, std::size_t s_) {
  const double n = static_cast<double>(n_);
  const double s = static_cast<double>(s_);
  if (is_w_process(p)) return {r / (n * (s - 1.0)), 1.0 / (n * (n - s - 1.0))};
  const double c = 1.0 / (n * (n - 1.0));
  return {c, -c};
}

Vec4 process_coefficients(Process p, double r, std::size_t n, std::size_t t) {
  const std::size_t x = kernel_of(p);
  return is_w_process(p) ? w_coefficients(n, t, x, r) : d_coefficients(n, t, x);
}

double process_covariance(const MomentCache& cache, Process p, double r, std::size_t s, std::size_t t) {
  if (s > t) std::swap(s, t);
  const std::size_t n = cache.n();
  const std::size_t x = kernel_of(p);
  const auto [ps, qs] = gamma_weights(p, r, n, s);
  const auto [pt, qt] = gamma_weights(p, r, n, t);
  return ps * pt * region_covariance(cache, x, x, s, t, s) +
         ps * qt * region_covariance(cache, x, x, s, n - t, 0) +
         qs * pt * region_covariance(cache, x, x, n - s, t, t - s) +
         qs * qt * region_covariance(cache, x, x, n - s, n - t, n - t);
}

}  // namespace

MomentCache build_cache(const KernelMatrix& k1, const KernelMatrix& k2) {
  if (k1.size() != k2.size())
    throw ParameterError("kernel dimension mismatch: " + std::to_string(k1.size()) + " vs " + std::to_string(k2.size()));
  const std::size_t n = k1.size();
  if (n < 4) throw ParameterError("moments need at least 4 observations");
  const KernelMatrix* ks[2] = {&k1, &k2};
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);

  MomentCache cache;
  cache.n_ = n;
  std::array<std::vector<double>, 2> rows, crow;
  std::array<double, 2> total{}, ctotal{};
  for (std::size_t a = 0; a < 2; ++a) {
    const KernelMatrix& k = *ks[a];
    rows[a].assign(n, 0.0);
    Accumulator tot;
    for (std::size_t i = 0; i < n; ++i) {
      Accumulator r;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) r.add(k(i, j));
      rows[a][i] = r.value();
      tot.add(rows[a][i]);
    }
    total[a] = tot.value();
    cache.kbar_[a] = total[a] / pairs;

    crow[a].assign(n, 0.0);
    Accumulator ctot, sq;
    for (std::size_t i = 0; i < n; ++i) {
      Accumulator r;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) {
          const double c = k(i, j) - cache.kbar_[a];
          r.add(c);
          sq.add(c * c);
        }
      crow[a][i] = r.value();
      ctot.add(crow[a][i]);
    }
    ctotal[a] = ctot.value();
    cache.spread_[a] = sq.value() / pairs;
  }

  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = a; b < 2; ++b) {
      Accumulator A, cA, rr, crr;
      for (std::size_t i = 0; i < n; ++i) {
        const auto ra = ks[a]->row(i);
        const auto rb = ks[b]->row(i);
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) {
            A.add(ra[j] * rb[j]);
            cA.add((ra[j] - cache.kbar_[a]) * (rb[j] - cache.kbar_[b]));
          }
        rr.add(rows[a][i] * rows[b][i]);
        crr.add(crow[a][i] * crow[b][i]);
      }
      PairSums raw;
      raw.A = A.value();
      raw.B = rr.value() - raw.A;
      raw.C = total[a] * total[b] - 2.0 * raw.A - 4.0 * raw.B;
      PairSums cen;
      cen.A = cA.value();
      cen.B = crr.value() - cen.A;
      cen.C = ctotal[a] * ctotal[b] - 2.0 * cen.A - 4.0 * cen.B;
      cache.raw_[a][b] = cache.raw_[b][a] = raw;
      cache.centered_[a][b] = cache.centered_[b][a] = cen;
    }
  return cache;
}

Vec4 w_coefficients(std::size_t n_, std::size_t t_, std::size_t x, double r) {
  const double n = static_cast<double>(n_);
  const double t = static_cast<double>(t_);
  Vec4 c{};
  c[2 * x] = r * t / n;
  c[2 * x + 1] = (n - t) / n;
  return c;
}

Vec4 d_coefficients(std::size_t n_, std::size_t t_, std::size_t x) {
  const double n = static_cast<double>(n_);
  const double t = static_cast<double>(t_);
  Vec4 c{};
  c[2 * x] = t * (t - 1.0) / (n * (n - 1.0));
  c[2 * x + 1] = -(n - t) * (n - t - 1.0) / (n * (n - 1.0));
  return c;
}

double TimeMoments::cov(const Vec4& x, const Vec4& y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) s += x[i] * sigma[i][j] * y[j];
  return s;
}

double TimeMoments::mean_of(const Vec4& x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += x[i] * mean[i];
  return s;
}

double TimeMoments::var_w(std::size_t x, double r) const { return var(w_coefficients(n, t, x, r)); }
double TimeMoments::var_d(std::size_t x) const { return var(d_coefficients(n, t, x)); }
double TimeMoments::cov_w12() const { return cov(w_coefficients(n, t, 0), w_coefficients(n, t, 1)); }
double TimeMoments::cov_d12() const { return cov(d_coefficients(n, t, 0), d_coefficients(n, t, 1)); }
double TimeMoments::cov_wd(std::size_t a, std::size_t b) const {
  return cov(w_coefficients(n, t, a), d_coefficients(n, t, b));
}

TimeMoments time_moments(const MomentCache& cache, std::size_t t) {
  check_cut(cache.n(), t);
  return moments_from(cache, t, true);
}

TimeMoments time_moments_uncentered(const MomentCache& cache, std::size_t t) {
  check_cut(cache.n(), t);
  return moments_from(cache, t, false);
}

double region_covariance(const MomentCache& cache, std::size_t a, std::size_t b, std::size_t size1,
                         std::size_t size2, std::size_t overlap) {
  const double n = static_cast<double>(cache.n());
  const double s1 = static_cast<double>(size1);
  const double s2 = static_cast<double>(size2);
  const double m = static_cast<double>(overlap);
  const PairSums& ps = cache.centered(a, b);
  const double n2 = n * (n - 1.0);
  const double n3 = n2 * (n - 2.0);
  const double n4 = n3 * (n - 3.0);

  // Ordered distinct positions: both shared (x,y in R1∩R2), one shared index
  // (x in R1∩R2, y in R1, z in R2, y != z), and four distinct indices.
  const double shared2 = m * (m - 1.0);
  const double shared1 = m * ((s1 - 1.0) * (s2 - 1.0) - (m - 1.0));
  const double distinct = m * (m - 1.0) * (s2 - 2.0) * (s2 - 3.0) + 2.0 * m * (s1 - m) * (s2 - 1.0) * (s2 - 2.0) +
                          (s1 - m) * (s1 - m - 1.0) * s2 * (s2 - 1.0);
  // E[Gamma] vanishes for centered kernels, so this is the covariance.
  return 2.0 * ps.A * shared2 / n2 + 4.0 * ps.B * shared1 / n3 + ps.C * distinct / n4;
}

std::size_t kernel_of(Process p) { return (p == Process::D1 || p == Process::W1R) ? 0 : 1; }
bool is_w_process(Process p) { return p == Process::W1R || p == Process::W2R; }

const char* to_string(Process p) {
  switch (p) {
    case Process::D1: return "D1";
    case Process::D2: return "D2";
    case Process::W1R: return "W1r";
    case Process::W2R: return "W2r";
  }
  return "?";
}

double variance_floor(const MomentCache& cache, const Vec4& coeffs) {
  double f = 0.0;
  for (std::size_t a = 0; a < 2; ++a) {
    const double scale = cache.kbar(a) * cache.kbar(a) + cache.spread(a);
    f += scale * (coeffs[2 * a] * coeffs[2 * a] + coeffs[2 * a + 1] * coeffs[2 * a + 1]);
  }
  return kRelativeFloor * f;
}

double process_variance(const MomentCache& cache, Process p, double r, std::size_t t) {
  check_cut(cache.n(), t);
  return process_covariance(cache, p, r, t, t);
}

double cross_time_correlation(const MomentCache& cache, Process p, double r, std::size_t s, std::size_t t) {
  const std::size_t n = cache.n();
  check_cut(n, s);
  check_cut(n, t);
  if (is_w_process(p) && r == 1.0) throw ParameterError("W_r process requires r != 1");
  const double vs = process_covariance(cache, p, r, s, s);
  const double vt = s == t ? vs : process_covariance(cache, p, r, t, t);
  for (auto [v, cut] : {std::pair{vs, s}, std::pair{vt, t}}) {
    // Floor scaled to the alpha/beta coefficients of the process at that cut.
    if (!(v > variance_floor(cache, process_coefficients(p, r, n, cut))))
      throw DegeneracyError(std::string("process ") + to_string(p) + " has zero permutation variance at t = " +
                                std::to_string(cut),
                            static_cast<long>(cut));
  }
  if (s == t) return 1.0;
  return process_covariance(cache, p, r, s, t) / std::sqrt(vs * vt);
}

double finite_sample_slope(const MomentCache& cache, Process p, double r, std::size_t t) {
  const std::size_t n = cache.n();
  check_cut(n, t);
  if (t + 2 == n) {
    if (t < 3) throw ParameterError("finite_sample_slope needs n >= 5");
    return 1.0 - cross_time_correlation(cache, p, r, t - 1, t);
  }
  return 1.0 - cross_time_correlation(cache, p, r, t, t + 1);
}

}  // namespace kapcpd
