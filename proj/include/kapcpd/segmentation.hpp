#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kapcpd/inference.hpp"

namespace kapcpd {

enum class Engine { KAP_PERM, KAPF_ANALYTIC };

std::string to_string(Engine e);
Engine engine_from_string(const std::string& name);

struct SegmentationConfig {
  double alpha = 0.05;
  std::size_t min_separation = 6;
  std::optional<std::size_t> min_segment;  // default max(2 * min_separation, 20)
  Engine engine = Engine::KAP_PERM;
  double n0_frac = 0.05;
  double n1_frac = 0.95;
  PermConfig perm;
  double r1 = 0.5;
  double r2 = 2.0;

  std::size_t effective_min_segment() const;
};

/// Kernels for the snapshots [first, last) of the full sequence.
using KernelBuilder = std::function<std::pair<KernelMatrix, KernelMatrix>(std::size_t first, std::size_t last)>;

/// Builds both kernels from the sub-sequence itself, so bandwidths are
/// segment-local. EXTERNAL sources are loaded once and sliced.
KernelBuilder make_kernel_builder(const GraphSequence& seq, const KernelSource& s1, const KernelSource& s2);

// Segments are 1-based inclusive intervals [start, end]; a change point tau
// splits them into [start, tau] and [tau + 1, end].
struct ChangePoint {
  std::size_t tau = 0;
  double p_value = 1.0;
  double s_star = 0.0;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct SegmentNode {
  enum class Status { SPLIT, NOT_SIGNIFICANT, TOO_SHORT, DEGENERATE, SUPPRESSED };
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t depth = 0;
  Status status = Status::TOO_SHORT;
  std::optional<std::size_t> tau;
  std::optional<double> p_value;
  std::string note;
};

struct SegmentationResult {
  std::vector<ChangePoint> change_points;  // strictly increasing tau
  std::vector<SegmentNode> trace;          // depth-first, left segment first

  std::string format_trace() const;
};

SegmentationResult binary_segmentation(std::size_t n, const KernelBuilder& kernels, const SegmentationConfig& cfg);
SegmentationResult binary_segmentation(const GraphSequence& seq, const KernelSource& s1, const KernelSource& s2,
                                       const SegmentationConfig& cfg);

const char* to_string(SegmentNode::Status s);

}  // namespace kapcpd
