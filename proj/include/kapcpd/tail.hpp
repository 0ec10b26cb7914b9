#pragma once

#include <cstddef>
#include <vector>

#include "kapcpd/moments.hpp"
#include "kapcpd/scan.hpp"

namespace kapcpd {

/// (2/s)(Phi(s/2) - 1/2) / ((s/2) Phi(s/2) + phi(s/2)), with nu(0) = 1.
double nu_approx(double s);

double normal_pdf(double x);

/// Per-cut slopes C(t) for t in [n0, n1]. Small negative round-off is clamped to 0.
std::vector<double> slope_profile(const MomentCache& cache, Process p, double r, const ScanConfig& cfg);

/// factor * b phi(b) * sum_t C(t) nu(b sqrt(2 C(t))), clamped to [0, 1].
double tail_sum(const std::vector<double>& slopes, double b, double factor);

/// Leading factor for the two-sided |Z_D| maximum.
inline constexpr double kTwoSidedFactor = 2.0;
/// Leading factor used for the one-sided W_r maximum (see README).
inline constexpr double kOneSidedFactor = 1.0;

/// P(max_t |Z_Dx(t)| > b); x in {0, 1}.
double tail_probability_D(const MomentCache& cache, std::size_t x, double b, const ScanConfig& cfg);
/// P(max_t Z_{Wx,r}(t) > b); x in {0, 1}, r != 1.
double tail_probability_W(const MomentCache& cache, std::size_t x, double r, double b, const ScanConfig& cfg);

/// Bracket for critical values and p-value inversion.
inline constexpr double kBracketLow = 0.5;
inline constexpr double kBracketHigh = 12.0;
inline constexpr double kPValueFloor = 1e-300;

/// b with tail_sum(slopes, b, factor) = level, by bisection on [0.5, 12] to 1e-6.
double critical_value(const std::vector<double>& slopes, double level, double factor);

/// Tail probability at an observed maximum: 1 below the bracket, the floor
/// above it, otherwise the approximation floored at 1e-300.
double tail_p_value(const std::vector<double>& slopes, double observed, double factor);

}  // namespace kapcpd
