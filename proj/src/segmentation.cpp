#include <algorithm>
#include <memory>
#include <sstream>

#include "kapcpd/errors.hpp"
#include "kapcpd/segmentation.hpp"

namespace kapcpd {

std::string to_string(Engine e) { return e == Engine::KAP_PERM ? "KAP_PERM" : "KAPF_ANALYTIC"; }

Engine engine_from_string(const std::string& name) {
  if (name == "perm" || name == "KAP_PERM" || name == "kap") return Engine::KAP_PERM;
  if (name == "fast" || name == "KAPF_ANALYTIC" || name == "kapf") return Engine::KAPF_ANALYTIC;
  throw ParameterError("unknown engine '" + name + "' (expected perm or fast)");
}

const char* to_string(SegmentNode::Status s) {
  switch (s) {
    case SegmentNode::Status::SPLIT: return "split";
    case SegmentNode::Status::NOT_SIGNIFICANT: return "not significant";
    case SegmentNode::Status::TOO_SHORT: return "too short";
    case SegmentNode::Status::DEGENERATE: return "degenerate";
    case SegmentNode::Status::SUPPRESSED: return "suppressed";
  }
  return "?";
}

std::size_t SegmentationConfig::effective_min_segment() const {
  return min_segment.value_or(std::max<std::size_t>(2 * min_separation, 20));
}

KernelBuilder make_kernel_builder(const GraphSequence& seq, const KernelSource& s1, const KernelSource& s2) {
  std::shared_ptr<const KernelMatrix> f1, f2;
  if (s1.kind == KernelKind::EXTERNAL) f1 = std::make_shared<const KernelMatrix>(s1.build(seq));
  if (s2.kind == KernelKind::EXTERNAL) f2 = std::make_shared<const KernelMatrix>(s2.build(seq));
  return [&seq, s1, s2, f1, f2](std::size_t first, std::size_t last) {
    const GraphSequence part = seq.slice(first, last);
    KernelMatrix k1 = f1 ? f1->slice(first, last) : s1.build(part);
    KernelMatrix k2 = f2 ? f2->slice(first, last) : s2.build(part);
    return std::pair{std::move(k1), std::move(k2)};
  };
}

namespace {

struct Segmenter {
  const KernelBuilder& kernels;
  const SegmentationConfig& cfg;
  SegmentationResult result;

  void run(std::size_t start, std::size_t end, std::size_t depth) {
    const std::size_t index = result.trace.size();
    result.trace.push_back({start, end, depth, SegmentNode::Status::TOO_SHORT, std::nullopt, std::nullopt, ""});
    const std::size_t len = end - start + 1;
    if (len < cfg.effective_min_segment()) return;

    TestOutcome outcome;
    try {
      auto [k1, k2] = kernels(start - 1, end);
      const ScanConfig scan = default_scan_config(len, cfg.n0_frac, cfg.n1_frac);
      if (cfg.engine == Engine::KAP_PERM) {
        PermConfig perm = cfg.perm;
        // Seed depends only on the interval, so the trace is order independent.
        perm.seed = CounterRng(cfg.perm.seed, (static_cast<std::uint64_t>(start) << 32) | end)();
        outcome = permutation_test(k1, k2, scan, perm);
      } else {
        outcome = fast_test(k1, k2, FastConfig{cfg.r1, cfg.r2, scan});
      }
    } catch (const DegeneracyError& e) {
      log_warning("segment [" + std::to_string(start) + ", " + std::to_string(end) + "] skipped: " + e.what());
      result.trace[index].status = SegmentNode::Status::DEGENERATE;
      result.trace[index].note = e.what();
      return;
    }

    auto& node = result.trace[index];
    node.p_value = outcome.p_value;
    const std::size_t tau = start - 1 + *outcome.tau_hat;
    node.tau = tau;
    if (outcome.p_value > cfg.alpha) {
      node.status = SegmentNode::Status::NOT_SIGNIFICANT;
      return;
    }
    node.status = SegmentNode::Status::SPLIT;
    result.change_points.push_back({tau, outcome.p_value, outcome.s_star, start, end});
    run(start, tau, depth + 1);
    run(tau + 1, end, depth + 1);
  }

  void enforce_separation() {
    auto& cps = result.change_points;
    std::sort(cps.begin(), cps.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });
    for (;;) {
      std::size_t worst = cps.size();
      for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
        if (cps[i + 1].tau - cps[i].tau >= cfg.min_separation) continue;
        worst = cps[i].s_star < cps[i + 1].s_star ? i : i + 1;
        break;
      }
      if (worst == cps.size()) break;
      for (auto& node : result.trace)
        if (node.status == SegmentNode::Status::SPLIT && node.start == cps[worst].start && node.end == cps[worst].end) {
          node.status = SegmentNode::Status::SUPPRESSED;
          node.note = "within min_separation of a stronger change point";
        }
      cps.erase(cps.begin() + static_cast<std::ptrdiff_t>(worst));
    }
  }
};

}  // namespace

SegmentationResult binary_segmentation(std::size_t n, const KernelBuilder& kernels, const SegmentationConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (cfg.min_separation < 1) throw ParameterError("min_separation must be at least 1");
  if (cfg.effective_min_segment() < 4) throw ParameterError("min_segment must be at least 4");
  if (n < cfg.effective_min_segment())
    throw ParameterError("sequence of length " + std::to_string(n) + " is shorter than min_segment = " +
                         std::to_string(cfg.effective_min_segment()));
  Segmenter seg{kernels, cfg, {}};
  seg.run(1, n, 0);
  seg.enforce_separation();
  return std::move(seg.result);
}

SegmentationResult binary_segmentation(const GraphSequence& seq, const KernelSource& s1, const KernelSource& s2,
                                       const SegmentationConfig& cfg) {
  return binary_segmentation(seq.size(), make_kernel_builder(seq, s1, s2), cfg);
}

std::string SegmentationResult::format_trace() const {
  std::ostringstream os;
  for (const auto& node : trace) {
    os << std::string(2 * node.depth, ' ') << '[' << node.start << ", " << node.end << "] " << to_string(node.status);
    if (node.tau) os << " tau=" << *node.tau;
    if (node.p_value) os << " p=" << *node.p_value;
    if (!node.note.empty()) os << " (" << node.note << ')';
    os << '\n';
  }
  return os.str();
}

}  // namespace kapcpd
