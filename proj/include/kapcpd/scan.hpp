#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kapcpd/kernels.hpp"
#include "kapcpd/moments.hpp"

namespace kapcpd {

/// Candidate cuts n0 <= t <= n1 (t = size of the first segment).
struct ScanConfig {
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

/// n0 = ceil(n0_frac * n), n1 = floor(n1_frac * n), clamped into [2, n-2].
ScanConfig default_scan_config(std::size_t n, double n0_frac = 0.05, double n1_frac = 0.95);
void validate(const ScanConfig& cfg, std::size_t n);

/// Off-diagonal-centered copies of both kernels, interleaved for the sweep.
class CenteredPair {
 public:
  CenteredPair(const KernelMatrix& k1, const KernelMatrix& k2);

  std::size_t n() const noexcept { return n_; }
  double kbar(std::size_t x) const { return kbar_[x]; }

  /// Centered [alpha1, beta1, alpha2, beta2] for every cut t in [lo, hi] of
  /// the sequence reordered by `order` (position k holds observation
  /// order[k]; empty = identity). out[t - lo]. O(n^2) total.
  void sweep(std::span<const std::size_t> order, std::size_t lo, std::size_t hi, std::vector<Vec4>& out) const;

  /// Same quantity at one cut by direct block summation.
  Vec4 at(std::span<const std::size_t> order, std::size_t t) const;

 private:
  std::size_t n_;
  std::array<double, 2> kbar_{};
  std::vector<double> entries_;   // [k1, k2] interleaved, diagonal zero
  std::vector<double> row_sums_;  // [r1, r2] interleaved
};

/// Per-cut linear functionals whose squared sum is the statistic:
/// S(t) = sum_k (g_k(t) . a~(t))^2 with a~ the centered observation vector.
class ScanPlan {
 public:
  enum class Kind { AGGREGATED, SINGLE_KERNEL };

  /// Four orthogonal components Z_Wdiff, Z_Ddiff, Z_Wsum, Z_Dsum.
  /// Throws DegeneracyError naming t and the failing condition.
  static ScanPlan aggregated(const MomentCache& cache, const ScanConfig& cfg);
  /// Z_W^2 + Z_D^2 of kernel x alone.
  static ScanPlan single_kernel(const MomentCache& cache, std::size_t x, const ScanConfig& cfg);

  Kind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }
  const ScanConfig& config() const noexcept { return cfg_; }
  std::size_t components() const noexcept { return components_; }

  std::span<const Vec4> weights(std::size_t t) const {
    return {weights_.data() + (t - cfg_.n0) * components_, components_};
  }
  double c1(std::size_t t) const { return c1_[t - cfg_.n0]; }
  double c2(std::size_t t) const { return c2_[t - cfg_.n0]; }

  double statistic(std::size_t t, const Vec4& centered) const;

  /// max_t S(t) over a sweep (out[t - n0]) with the smallest maximizing t.
  std::pair<double, std::size_t> maximize(std::span<const Vec4> sweep) const;

 private:
  Kind kind_ = Kind::AGGREGATED;
  std::size_t n_ = 0;
  ScanConfig cfg_;
  std::size_t components_ = 0;
  std::vector<Vec4> weights_;
  std::vector<double> c1_, c2_;
};

struct ScanPoint {
  std::size_t t = 0;
  double alpha1 = 0, beta1 = 0, alpha2 = 0, beta2 = 0;
  double w1 = 0, w2 = 0, d1 = 0, d2 = 0;
  double c1 = 0, c2 = 0;
  double z_wdiff = 0, z_ddiff = 0, z_wsum = 0, z_dsum = 0;
  double s = 0;
  /// Explicit Sigma(t)^-1 quadratic form; NaN unless verification was requested.
  double s_quadform = std::numeric_limits<double>::quiet_NaN();
};

struct ScanProfile {
  std::size_t n = 0;
  ScanConfig cfg;
  std::vector<ScanPoint> points;  // points[t - n0]
  double s_star = 0.0;
  std::size_t tau_hat = 0;

  const ScanPoint& at(std::size_t t) const { return points.at(t - cfg.n0); }
};

/// Raw alpha_x(t), beta_x(t) at one cut (double loop over the blocks).
Vec4 raw_processes(const KernelMatrix& k1, const KernelMatrix& k2, std::size_t t);

/// S(t) for every candidate cut via the orthogonal decomposition; `verify`
/// additionally evaluates the explicit 4x4 quadratic form per cut.
ScanProfile scan_statistic(const KernelMatrix& k1, const KernelMatrix& k2, const ScanConfig& cfg, bool verify = false);
ScanProfile scan_statistic(const MomentCache& cache, const CenteredPair& pair, const ScanConfig& cfg,
                           bool verify = false);

/// a~' Sigma(t)^-1 a~ by a full-pivot LU solve.
double quadratic_form_statistic(const TimeMoments& m, const Vec4& centered);

/// S(tau) for the fixed-split two-sample variant.
double fixed_split_statistic(const KernelMatrix& k1, const KernelMatrix& k2, std::size_t tau);

/// CSV with columns t,S,Z_Wdiff,Z_Ddiff,Z_Wsum,Z_Dsum.
std::string format_profile_csv(const ScanProfile& profile);

}  // namespace kapcpd
