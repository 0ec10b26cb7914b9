#pragma once

#include <array>
#include <cstddef>

#include "kapcpd/kernels.hpp"

namespace kapcpd {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<Vec4, 4>;

/// Indices into the observation vector [alpha1, beta1, alpha2, beta2].
enum : std::size_t { kAlpha1 = 0, kBeta1 = 1, kAlpha2 = 2, kBeta2 = 3 };

/// Per kernel pair (a,b): the sums entering the permutation moments of
/// alpha/beta.
///   A = sum_{i!=j} k_aij k_bij
///   B = sum_{i!=j, u!=i,j} k_aij k_biu
///   C = sum over i,j,u,v all distinct of k_aij k_buv
struct PairSums {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

/// Permutation-invariant summary of a kernel pair. Built once in O(n^2);
/// every moment below is O(1) from it.
///
/// Two copies of the sums are kept: `raw` on the kernels as given, and
/// `centered` on the off-diagonal entries shifted by kbar. Covariances of
/// alpha/beta are shift invariant; all moments are evaluated from `centered`.
class MomentCache {
 public:
  std::size_t n() const noexcept { return n_; }
  double kbar(std::size_t a) const { return kbar_[a]; }
  const PairSums& raw(std::size_t a, std::size_t b) const { return raw_[a][b]; }
  const PairSums& centered(std::size_t a, std::size_t b) const { return centered_[a][b]; }
  /// Mean squared centered off-diagonal entry of kernel a (scale for floors).
  double spread(std::size_t a) const { return spread_[a]; }

  friend MomentCache build_cache(const KernelMatrix& k1, const KernelMatrix& k2);

 private:
  std::size_t n_ = 0;
  std::array<double, 2> kbar_{};
  std::array<double, 2> spread_{};
  std::array<std::array<PairSums, 2>, 2> raw_{};
  std::array<std::array<PairSums, 2>, 2> centered_{};
};

MomentCache build_cache(const KernelMatrix& k1, const KernelMatrix& k2);

/// Linear coefficients on [alpha1, beta1, alpha2, beta2] for the derived processes.
Vec4 w_coefficients(std::size_t n, std::size_t t, std::size_t x, double r = 1.0);
Vec4 d_coefficients(std::size_t n, std::size_t t, std::size_t x);

/// Mean and covariance of [alpha1, beta1, alpha2, beta2] at cut t.
struct TimeMoments {
  std::size_t n = 0;
  std::size_t t = 0;
  Vec4 mean{};
  Mat4 sigma{};

  double cov(const Vec4& x, const Vec4& y) const;
  double var(const Vec4& x) const { return cov(x, x); }
  double mean_of(const Vec4& x) const;

  // W_x, D_x with x in {0, 1} (kernel 1, kernel 2).
  double var_w(std::size_t x, double r = 1.0) const;
  double var_d(std::size_t x) const;
  double cov_w12() const;
  double cov_d12() const;
  double cov_wd(std::size_t a, std::size_t b) const;
};

/// Exact same-time permutation moments. Requires 2 <= t <= n-2.
TimeMoments time_moments(const MomentCache& cache, std::size_t t);

/// Same quantities from the raw (uncentered) sums, exactly as the closed form
/// reads: E[XY] - kbar_a kbar_b. Kept as an independent route for tests.
TimeMoments time_moments_uncentered(const MomentCache& cache, std::size_t t);

/// cov(Gamma_R1(kernel a), Gamma_R2(kernel b)) where Gamma_R sums k over ordered
/// pairs whose positions both fall in R, and R1, R2 are position sets of sizes
/// size1, size2 sharing `overlap` positions. Uses the centered sums.
double region_covariance(const MomentCache& cache, std::size_t a, std::size_t b, std::size_t size1,
                         std::size_t size2, std::size_t overlap);

enum class Process { D1, D2, W1R, W2R };

std::size_t kernel_of(Process p);
bool is_w_process(Process p);
const char* to_string(Process p);

/// Permutation-null variance of a process at cut t.
double process_variance(const MomentCache& cache, Process p, double r, std::size_t t);

/// Exact correlation of the standardized process at cuts s <= t, from joint
/// placement probabilities of index patterns straddling both cuts.
/// Throws DegeneracyError on a (numerically) zero variance.
double cross_time_correlation(const MomentCache& cache, Process p, double r, std::size_t s, std::size_t t);

/// C(t) = rho(t,t) - rho(t,t+1), the per-step decay of the correlation.
/// At t = n-2 the backward step rho(t-1,t) is used.
double finite_sample_slope(const MomentCache& cache, Process p, double r, std::size_t t);

/// Variances below this are treated as zero for a combination with the given coefficients.
double variance_floor(const MomentCache& cache, const Vec4& coeffs);

}  // namespace kapcpd
