#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kapcpd/graphs.hpp"

namespace kapcpd {

enum class KernelKind { GAUSSIAN, GRAPHLET, EXTERNAL };

std::string to_string(KernelKind k);

/// Symmetric n x n similarity matrix over the observations of a sequence.
/// Only off-diagonal entries enter the statistics; the diagonal is kept for
/// export and is 1 for the built-in kernels.
class KernelMatrix {
 public:
  /// Validates shape, finiteness and symmetry (tolerance 1e-9).
  KernelMatrix(std::size_t n, std::vector<double> entries, KernelKind kind = KernelKind::EXTERNAL,
               std::optional<double> bandwidth = std::nullopt);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * n_, n_}; }
  const std::vector<double>& entries() const noexcept { return entries_; }
  KernelKind kind() const noexcept { return kind_; }
  std::optional<double> bandwidth() const noexcept { return bandwidth_; }

  /// K'(a,b) = K(order[a], order[b]): the kernel of the reordered sequence.
  KernelMatrix permuted(std::span<const std::size_t> order) const;
  /// Principal sub-block [first, last).
  KernelMatrix slice(std::size_t first, std::size_t last) const;

 private:
  std::size_t n_;
  std::vector<double> entries_;
  KernelKind kind_;
  std::optional<double> bandwidth_;
};

/// Euclidean distances between all pairs of rows, i<j, row-major.
std::vector<double> pairwise_distances(std::span<const std::vector<double>> points);
/// Lower median of a multiset (element (m-1)/2 of the sorted values).
double lower_median(std::vector<double> values);

/// Gaussian RBF on upper-triangle weight vectors, exp(-d^2 / (2 sigma^2)),
/// sigma = lower median of pairwise distances. Throws DegeneracyError on sigma = 0.
KernelMatrix gaussian_kernel(const GraphSequence& seq);
KernelMatrix gaussian_kernel(std::span<const std::vector<double>> points);

/// Laplacian kernel exp(-|x-y|_1 / sigma) with sigma the lower median L1
/// distance. Kind EXTERNAL: used for vector data only.
KernelMatrix laplacian_kernel(std::span<const std::vector<double>> points);

/// Counts of the four 3-node induced subgraph classes over all C(N,3) triples.
struct GraphletProfile {
  std::array<std::uint64_t, 4> counts{};  // empty, one edge, two-edge path, triangle

  std::array<double, 4> frequencies() const;
  friend bool operator==(const GraphletProfile&, const GraphletProfile&) = default;
};

/// Closed-form counts from edge count, degrees and triangle count.
GraphletProfile graphlet_profile(const GraphSnapshot& g);

/// Cosine similarity of graphlet frequency vectors. Requires binary snapshots.
KernelMatrix graphlet_kernel(const GraphSequence& seq);

/// How to obtain a kernel from a sequence. Weighted graphs are thresholded at
/// `threshold` before graphlet counting.
struct KernelSource {
  KernelKind kind = KernelKind::GAUSSIAN;
  double threshold = 0.5;
  std::filesystem::path file;  // EXTERNAL

  KernelMatrix build(const GraphSequence& seq) const;
  std::string describe() const;
};

/// Parses "gaussian", "graphlet" or "file:PATH".
KernelSource parse_kernel_source(const std::string& text, double threshold = 0.5);

// Kernel CSV: n rows of n comma-separated decimals, no header.
KernelMatrix read_kernel(const std::filesystem::path& path);
KernelMatrix parse_kernel(const std::string& text);
void write_kernel(const KernelMatrix& k, const std::filesystem::path& path);
std::string format_kernel(const KernelMatrix& k);

}  // namespace kapcpd
