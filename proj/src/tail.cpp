#include <algorithm>
#include <cmath>
#include <numbers>

#include "kapcpd/errors.hpp"
#include "kapcpd/tail.hpp"

namespace kapcpd {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double nu_approx(double s) {
  if (std::isnan(s) || s < 0.0) throw ParameterError("nu(s) requires s >= 0");
  if (s == 0.0) return 1.0;
  const double h = 0.5 * s;
  // Phi(h) - 1/2 via erf keeps full precision as s -> 0.
  const double centered = 0.5 * std::erf(h / std::numbers::sqrt2);
  const double cdf = 0.5 + centered;
  return (2.0 / s) * centered / (h * cdf + normal_pdf(h));
}

std::vector<double> slope_profile(const MomentCache& cache, Process p, double r, const ScanConfig& cfg) {
  validate(cfg, cache.n());
  if (is_w_process(p) && r == 1.0) throw ParameterError("W_r process requires r != 1");
  std::vector<double> out;
  out.reserve(cfg.n1 - cfg.n0 + 1);
  for (std::size_t t = cfg.n0; t <= cfg.n1; ++t)
    out.push_back(std::max(0.0, finite_sample_slope(cache, p, r, t)));
  return out;
}

double tail_sum(const std::vector<double>& slopes, double b, double factor) {
  if (!(b > 0.0)) throw ParameterError("tail probability needs b > 0");
  double sum = 0.0;
  for (double c : slopes) sum += c * nu_approx(b * std::sqrt(2.0 * c));
  const double p = factor * b * normal_pdf(b) * sum;
  return std::clamp(p, 0.0, 1.0);
}

double tail_probability_D(const MomentCache& cache, std::size_t x, double b, const ScanConfig& cfg) {
  if (x > 1) throw ParameterError("kernel index must be 0 or 1");
  return tail_sum(slope_profile(cache, x == 0 ? Process::D1 : Process::D2, 1.0, cfg), b, kTwoSidedFactor);
}

double tail_probability_W(const MomentCache& cache, std::size_t x, double r, double b, const ScanConfig& cfg) {
  if (x > 1) throw ParameterError("kernel index must be 0 or 1");
  if (r == 1.0) throw ParameterError("W_r tail requires r != 1");
  return tail_sum(slope_profile(cache, x == 0 ? Process::W1R : Process::W2R, r, cfg), b, kOneSidedFactor);
}

double critical_value(const std::vector<double>& slopes, double level, double factor) {
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("level must lie in (0, 1)");
  double lo = kBracketLow, hi = kBracketHigh;
  if (tail_sum(slopes, lo, factor) <= level) return lo;
  if (tail_sum(slopes, hi, factor) > level) return hi;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (tail_sum(slopes, mid, factor) > level) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double tail_p_value(const std::vector<double>& slopes, double observed, double factor) {
  if (std::isnan(observed)) throw ParameterError("observed maximum is NaN");
  if (observed < kBracketLow) return 1.0;
  if (observed > kBracketHigh) return kPValueFloor;
  return std::max(kPValueFloor, tail_sum(slopes, observed, factor));
}

}  // namespace kapcpd
