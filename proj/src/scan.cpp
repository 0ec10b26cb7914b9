#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <numeric>

#include "kapcpd/errors.hpp"
#include "kapcpd/scan.hpp"

namespace kapcpd {

namespace {

// Relative tolerance of the singularity checks on the covariance.
constexpr double kCorrelationTolerance = 1e-10;
// Below this fraction of var(W1+W2) the c1 denominator is treated as zero.
constexpr double kSwapTolerance = 1e-12;

Vec4 sub(const Vec4& a, const Vec4& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]}; }
Vec4 add(const Vec4& a, const Vec4& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }
Vec4 scale(const Vec4& a, double s) { return {a[0] * s, a[1] * s, a[2] * s, a[3] * s}; }
double dot(const Vec4& a, const Vec4& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]; }

[[noreturn]] void degenerate(std::size_t t, const std::string& condition) {
  throw DegeneracyError("S(t) is undefined at t = " + std::to_string(t) + ": " + condition, static_cast<long>(t));
}

// Unit-variance functional along coefficient vector `c`.
Vec4 standardize(const MomentCache& cache, const TimeMoments& m, const Vec4& c, const std::string& name) {
  const double v = m.var(c);
  if (!(v > variance_floor(cache, c))) degenerate(m.t, "var(" + name + ") = 0");
  return scale(c, 1.0 / std::sqrt(v));
}

// Orthogonal "sum" direction for a pair (X1, X2): c*X1 + X2 with
// cov(c*X1 + X2, X1 - X2) = 0. Returns the coefficient vector and the reported c.
std::pair<Vec4, double> sum_direction(const TimeMoments& m, const Vec4& x1, const Vec4& x2) {
  const double v1 = m.var(x1);
  const double v2 = m.var(x2);
  const double c12 = m.cov(x1, x2);
  const double total = v1 + v2 + 2.0 * c12;
  const double denom = v1 - c12;
  if (std::abs(denom) < kSwapTolerance * total) {
    // X1 is (numerically) orthogonal to X1 - X2; solve for the weight on X2 instead.
    const double c0 = denom / (v2 - c12);
    return {add(x1, scale(x2, c0)), std::numeric_limits<double>::infinity()};
  }
  const double c = (v2 - c12) / denom;
  return {add(scale(x1, c), x2), c};
}

void check_pair(const MomentCache& cache, const TimeMoments& m, const Vec4& x1, const Vec4& x2, const char* name) {
  const std::string s1 = std::string(name) + "1";
  const std::string s2 = std::string(name) + "2";
  const double v1 = m.var(x1);
  const double v2 = m.var(x2);
  const double c12 = m.cov(x1, x2);
  const Vec4 both = add(x1, x2);
  if (!(m.var(both) > variance_floor(cache, both))) degenerate(m.t, "var(" + s1 + " + " + s2 + ") = 0");
  if (!(v1 * v2 - c12 * c12 > kCorrelationTolerance * v1 * v2))
    degenerate(m.t, "var(" + s1 + ") var(" + s2 + ") = cov(" + s1 + ", " + s2 +
                        ")^2 (the two kernels are perfectly linearly correlated)");
}

}  // namespace

ScanConfig default_scan_config(std::size_t n, double n0_frac, double n1_frac) {
  if (n < 4) throw ParameterError("scan needs n >= 4");
  if (!(n0_frac >= 0.0 && n1_frac <= 1.0 && n0_frac <= n1_frac))
    throw ParameterError("scan fractions must satisfy 0 <= n0 <= n1 <= 1");
  const double nd = static_cast<double>(n);
  auto n0 = static_cast<std::size_t>(std::ceil(n0_frac * nd - 1e-9));
  auto n1 = static_cast<std::size_t>(std::floor(n1_frac * nd + 1e-9));
  n0 = std::max<std::size_t>(n0, 2);
  n1 = std::min<std::size_t>(n1, n - 2);
  if (n0 > n1) throw ParameterError("empty scan range for n = " + std::to_string(n));
  return {n0, n1};
}

void validate(const ScanConfig& cfg, std::size_t n) {
  if (cfg.n0 < 2 || cfg.n0 > cfg.n1 || cfg.n1 + 2 > n)
    throw ParameterError("scan range must satisfy 2 <= n0 <= n1 <= n-2 (got n0 = " + std::to_string(cfg.n0) +
                         ", n1 = " + std::to_string(cfg.n1) + ", n = " + std::to_string(n) + ")");
}

CenteredPair::CenteredPair(const KernelMatrix& k1, const KernelMatrix& k2)
    : n_(k1.size()), entries_(2 * k1.size() * k1.size(), 0.0), row_sums_(2 * k1.size(), 0.0) {
  if (k1.size() != k2.size()) throw ParameterError("kernel dimension mismatch");
  const KernelMatrix* ks[2] = {&k1, &k2};
  const double pairs = static_cast<double>(n_) * static_cast<double>(n_ - 1);
  for (std::size_t x = 0; x < 2; ++x) {
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (i != j) total += (*ks[x])(i, j);
    kbar_[x] = total / pairs;
    for (std::size_t i = 0; i < n_; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < n_; ++j)
        if (i != j) {
          const double c = (*ks[x])(i, j) - kbar_[x];
          entries_[2 * (i * n_ + j) + x] = c;
          r += c;
        }
      row_sums_[2 * i + x] = r;
    }
  }
}

void CenteredPair::sweep(std::span<const std::size_t> order, std::size_t lo, std::size_t hi,
                         std::vector<Vec4>& out) const {
  const std::size_t n = n_;
  std::vector<std::size_t> identity;
  if (order.empty()) {
    identity.resize(n);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    order = identity;
  }
  // prefix[t] = Gamma over pairs in positions [0, t); suffix[t] over [t, n).
  std::vector<double> prefix(2 * (n + 1), 0.0), suffix(2 * (n + 1), 0.0);
  std::vector<double> upper(2 * n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    const double* row = entries_.data() + 2 * order[m] * n;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* e = row + 2 * order[i];
      s1 += e[0];
      s2 += e[1];
    }
    prefix[2 * (m + 1)] = prefix[2 * m] + 2.0 * s1;
    prefix[2 * (m + 1) + 1] = prefix[2 * m + 1] + 2.0 * s2;
    upper[2 * m] = row_sums_[2 * order[m]] - s1;
    upper[2 * m + 1] = row_sums_[2 * order[m] + 1] - s2;
  }
  for (std::size_t m = n; m-- > 0;) {
    suffix[2 * m] = suffix[2 * (m + 1)] + 2.0 * upper[2 * m];
    suffix[2 * m + 1] = suffix[2 * (m + 1) + 1] + 2.0 * upper[2 * m + 1];
  }
  out.resize(hi - lo + 1);
  const double nd = static_cast<double>(n);
  for (std::size_t t = lo; t <= hi; ++t) {
    const double td = static_cast<double>(t);
    const double inv_a = 1.0 / (td * (td - 1.0));
    const double inv_b = 1.0 / ((nd - td) * (nd - td - 1.0));
    out[t - lo] = {prefix[2 * t] * inv_a, suffix[2 * t] * inv_b, prefix[2 * t + 1] * inv_a, suffix[2 * t + 1] * inv_b};
  }
}

Vec4 CenteredPair::at(std::span<const std::size_t> order, std::size_t t) const {
  const std::size_t n = n_;
  auto pos = [&](std::size_t k) { return order.empty() ? k : order[k]; };
  Vec4 sums{};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double* e = entries_.data() + 2 * (pos(i) * n + pos(j));
      if (i < t && j < t) {
        sums[kAlpha1] += e[0];
        sums[kAlpha2] += e[1];
      } else if (i >= t && j >= t) {
        sums[kBeta1] += e[0];
        sums[kBeta2] += e[1];
      }
    }
  const double td = static_cast<double>(t);
  const double sd = static_cast<double>(n - t);
  return {sums[0] / (td * (td - 1.0)), sums[1] / (sd * (sd - 1.0)), sums[2] / (td * (td - 1.0)),
          sums[3] / (sd * (sd - 1.0))};
}

ScanPlan ScanPlan::aggregated(const MomentCache& cache, const ScanConfig& cfg) {
  validate(cfg, cache.n());
  ScanPlan plan;
  plan.kind_ = Kind::AGGREGATED;
  plan.n_ = cache.n();
  plan.cfg_ = cfg;
  plan.components_ = 4;
  const std::size_t count = cfg.n1 - cfg.n0 + 1;
  plan.weights_.reserve(4 * count);
  plan.c1_.reserve(count);
  plan.c2_.reserve(count);
  for (std::size_t t = cfg.n0; t <= cfg.n1; ++t) {
    const TimeMoments m = time_moments(cache, t);
    const Vec4 w1 = w_coefficients(plan.n_, t, 0), w2 = w_coefficients(plan.n_, t, 1);
    const Vec4 d1 = d_coefficients(plan.n_, t, 0), d2 = d_coefficients(plan.n_, t, 1);
    check_pair(cache, m, w1, w2, "W");
    check_pair(cache, m, d1, d2, "D");
    const auto [wsum, c1] = sum_direction(m, w1, w2);
    const auto [dsum, c2] = sum_direction(m, d1, d2);
    plan.weights_.push_back(standardize(cache, m, sub(w1, w2), "W1 - W2"));
    plan.weights_.push_back(standardize(cache, m, sub(d1, d2), "D1 - D2"));
    plan.weights_.push_back(standardize(cache, m, wsum, "c1 W1 + W2"));
    plan.weights_.push_back(standardize(cache, m, dsum, "c2 D1 + D2"));
    plan.c1_.push_back(c1);
    plan.c2_.push_back(c2);
  }
  return plan;
}

ScanPlan ScanPlan::single_kernel(const MomentCache& cache, std::size_t x, const ScanConfig& cfg) {
  validate(cfg, cache.n());
  if (x > 1) throw ParameterError("kernel index must be 0 or 1");
  ScanPlan plan;
  plan.kind_ = Kind::SINGLE_KERNEL;
  plan.n_ = cache.n();
  plan.cfg_ = cfg;
  plan.components_ = 2;
  for (std::size_t t = cfg.n0; t <= cfg.n1; ++t) {
    const TimeMoments m = time_moments(cache, t);
    plan.weights_.push_back(standardize(cache, m, w_coefficients(plan.n_, t, x), "W"));
    plan.weights_.push_back(standardize(cache, m, d_coefficients(plan.n_, t, x), "D"));
    plan.c1_.push_back(std::numeric_limits<double>::quiet_NaN());
    plan.c2_.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  return plan;
}

double ScanPlan::statistic(std::size_t t, const Vec4& centered) const {
  double s = 0.0;
  for (const Vec4& g : weights(t)) {
    const double z = dot(g, centered);
    s += z * z;
  }
  return s;
}

std::pair<double, std::size_t> ScanPlan::maximize(std::span<const Vec4> sweep) const {
  double best = -1.0;
  std::size_t arg = cfg_.n0;
  for (std::size_t t = cfg_.n0; t <= cfg_.n1; ++t) {
    const double s = statistic(t, sweep[t - cfg_.n0]);
    if (s > best) {
      best = s;
      arg = t;
    }
  }
  return {best, arg};
}

Vec4 raw_processes(const KernelMatrix& k1, const KernelMatrix& k2, std::size_t t) {
  if (k1.size() != k2.size()) throw ParameterError("kernel dimension mismatch");
  const std::size_t n = k1.size();
  if (t < 2 || t + 2 > n) throw ParameterError("cut t outside [2, n-2]");
  Vec4 sums{};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (i < t && j < t) {
        sums[kAlpha1] += k1(i, j);
        sums[kAlpha2] += k2(i, j);
      } else if (i >= t && j >= t) {
        sums[kBeta1] += k1(i, j);
        sums[kBeta2] += k2(i, j);
      }
    }
  const double td = static_cast<double>(t);
  const double sd = static_cast<double>(n - t);
  return {sums[0] / (td * (td - 1.0)), sums[1] / (sd * (sd - 1.0)), sums[2] / (td * (td - 1.0)),
          sums[3] / (sd * (sd - 1.0))};
}

double quadratic_form_statistic(const TimeMoments& m, const Vec4& centered) {
  Eigen::Matrix4d sigma;
  Eigen::Vector4d a;
  for (int i = 0; i < 4; ++i) {
    a(i) = centered[static_cast<std::size_t>(i)];
    for (int j = 0; j < 4; ++j) sigma(i, j) = m.sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::Vector4d y = sigma.fullPivLu().solve(a);
  return a.dot(y);
}

ScanProfile scan_statistic(const MomentCache& cache, const CenteredPair& pair, const ScanConfig& cfg, bool verify) {
  const ScanPlan plan = ScanPlan::aggregated(cache, cfg);
  std::vector<Vec4> sweep;
  pair.sweep({}, cfg.n0, cfg.n1, sweep);

  ScanProfile profile;
  profile.n = cache.n();
  profile.cfg = cfg;
  profile.points.reserve(sweep.size());
  const Vec4 mean{pair.kbar(0), pair.kbar(0), pair.kbar(1), pair.kbar(1)};
  for (std::size_t t = cfg.n0; t <= cfg.n1; ++t) {
    const Vec4& c = sweep[t - cfg.n0];
    const Vec4 raw = add(c, mean);
    ScanPoint p;
    p.t = t;
    p.alpha1 = raw[kAlpha1];
    p.beta1 = raw[kBeta1];
    p.alpha2 = raw[kAlpha2];
    p.beta2 = raw[kBeta2];
    p.w1 = dot(w_coefficients(profile.n, t, 0), raw);
    p.w2 = dot(w_coefficients(profile.n, t, 1), raw);
    p.d1 = dot(d_coefficients(profile.n, t, 0), raw);
    p.d2 = dot(d_coefficients(profile.n, t, 1), raw);
    p.c1 = plan.c1(t);
    p.c2 = plan.c2(t);
    const auto g = plan.weights(t);
    p.z_wdiff = dot(g[0], c);
    p.z_ddiff = dot(g[1], c);
    p.z_wsum = dot(g[2], c);
    p.z_dsum = dot(g[3], c);
    p.s = p.z_wdiff * p.z_wdiff + p.z_ddiff * p.z_ddiff + p.z_wsum * p.z_wsum + p.z_dsum * p.z_dsum;
    if (verify) p.s_quadform = quadratic_form_statistic(time_moments(cache, t), c);
    profile.points.push_back(p);
  }
  const auto [best, arg] = plan.maximize(sweep);
  profile.s_star = best;
  profile.tau_hat = arg;
  return profile;
}

ScanProfile scan_statistic(const KernelMatrix& k1, const KernelMatrix& k2, const ScanConfig& cfg, bool verify) {
  const MomentCache cache = build_cache(k1, k2);
  return scan_statistic(cache, CenteredPair(k1, k2), cfg, verify);
}

double fixed_split_statistic(const KernelMatrix& k1, const KernelMatrix& k2, std::size_t tau) {
  const MomentCache cache = build_cache(k1, k2);
  const ScanConfig cfg{tau, tau};
  const ScanPlan plan = ScanPlan::aggregated(cache, cfg);
  std::vector<Vec4> sweep;
  CenteredPair(k1, k2).sweep({}, tau, tau, sweep);
  return plan.statistic(tau, sweep[0]);
}

std::string format_profile_csv(const ScanProfile& profile) {
  std::string out = "t,S,Z_Wdiff,Z_Ddiff,Z_Wsum,Z_Dsum\n";
  char buf[64];
  auto num = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    out.append(buf, ptr);
  };
  for (const auto& p : profile.points) {
    out += std::to_string(p.t);
    for (double v : {p.s, p.z_wdiff, p.z_ddiff, p.z_wsum, p.z_dsum}) {
      out += ',';
      num(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace kapcpd
