#include <algorithm>
#include <cmath>

#include "kapcpd/errors.hpp"
#include "kapcpd/graphs.hpp"

namespace kapcpd {

GraphSnapshot::GraphSnapshot(std::size_t n_nodes) : n_(n_nodes), adj_(n_nodes * n_nodes, 0.0) {
  if (n_nodes == 0) throw ParameterError("graph must have at least one node");
}

void GraphSnapshot::set_weight(std::size_t i, std::size_t j, double w) {
  if (i >= n_ || j >= n_) throw ParameterError("node index out of range");
  if (i == j) throw ParameterError("self-loops are not allowed");
  if (!std::isfinite(w)) throw ParameterError("edge weight must be finite");
  adj_[i * n_ + j] = w;
  adj_[j * n_ + i] = w;
}

bool GraphSnapshot::is_binary() const noexcept {
  return std::all_of(adj_.begin(), adj_.end(), [](double w) { return w == 0.0 || w == 1.0; });
}

std::size_t GraphSnapshot::edge_count() const noexcept {
  std::size_t m = 0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) m += adj_[i * n_ + j] != 0.0;
  return m;
}

double GraphSnapshot::density() const noexcept {
  if (n_ < 2) return 0.0;
  return static_cast<double>(edge_count()) / (static_cast<double>(n_) * static_cast<double>(n_ - 1) / 2.0);
}

std::vector<double> GraphSnapshot::upper_triangle() const {
  std::vector<double> out;
  out.reserve(n_ * (n_ - 1) / 2);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) out.push_back(adj_[i * n_ + j]);
  return out;
}

GraphSequence::GraphSequence(std::vector<GraphSnapshot> snapshots) : snapshots_(std::move(snapshots)) {
  if (snapshots_.size() < 4) throw ParameterError("a graph sequence needs at least 4 snapshots");
  const std::size_t n_nodes = snapshots_.front().n_nodes();
  for (const auto& g : snapshots_)
    if (g.n_nodes() != n_nodes) throw ParameterError("all snapshots must share the same node count");
}

bool GraphSequence::is_binary() const noexcept {
  return std::all_of(snapshots_.begin(), snapshots_.end(), [](const GraphSnapshot& g) { return g.is_binary(); });
}

GraphSequence GraphSequence::slice(std::size_t first, std::size_t last) const {
  if (first > last || last > snapshots_.size()) throw ParameterError("slice out of range");
  return GraphSequence({snapshots_.begin() + static_cast<std::ptrdiff_t>(first),
                        snapshots_.begin() + static_cast<std::ptrdiff_t>(last)});
}

GraphSequence GraphSequence::permuted(std::span<const std::size_t> order) const {
  if (order.size() != snapshots_.size()) throw ParameterError("permutation length mismatch");
  std::vector<GraphSnapshot> out;
  out.reserve(order.size());
  for (std::size_t k : order) out.push_back(snapshots_.at(k));
  return GraphSequence(std::move(out));
}

GraphSnapshot threshold_binarize(const GraphSnapshot& g, double cutoff) {
  if (!(cutoff > 0.0)) throw ParameterError("threshold cutoff must be positive");
  GraphSnapshot out(g.n_nodes());
  for (std::size_t i = 0; i < g.n_nodes(); ++i)
    for (std::size_t j = i + 1; j < g.n_nodes(); ++j)
      if (std::abs(g.weight(i, j)) >= cutoff) out.set_weight(i, j, 1.0);
  return out;
}

GraphSequence threshold_binarize(const GraphSequence& seq, double cutoff) {
  std::vector<GraphSnapshot> out;
  out.reserve(seq.size());
  for (const auto& g : seq) out.push_back(threshold_binarize(g, cutoff));
  return GraphSequence(std::move(out));
}

}  // namespace kapcpd
