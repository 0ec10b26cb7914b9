#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kapcpd/rng.hpp"

namespace kapcpd {

/// One undirected network observation. Dense symmetric weight matrix with a
/// zero diagonal; 0 means "no edge".
class GraphSnapshot {
 public:
  explicit GraphSnapshot(std::size_t n_nodes);

  std::size_t n_nodes() const noexcept { return n_; }
  double weight(std::size_t i, std::size_t j) const { return adj_[i * n_ + j]; }
  bool has_edge(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0.0; }

  /// Sets both (i,j) and (j,i). Throws ParameterError on i == j or out of range.
  void set_weight(std::size_t i, std::size_t j, double w);

  /// True when every weight is 0 or 1.
  bool is_binary() const noexcept;
  std::size_t edge_count() const noexcept;
  /// Edge density over the N(N-1)/2 dyads.
  double density() const noexcept;

  /// Upper-triangle weights in row-major (i<j) order.
  std::vector<double> upper_triangle() const;

  std::span<const double> row(std::size_t i) const { return {adj_.data() + i * n_, n_}; }

  friend bool operator==(const GraphSnapshot&, const GraphSnapshot&) = default;

 private:
  std::size_t n_;
  std::vector<double> adj_;
};

/// Ordered snapshots sharing one node count; n >= 4 (needed for 2 <= t <= n-2).
class GraphSequence {
 public:
  explicit GraphSequence(std::vector<GraphSnapshot> snapshots);

  std::size_t size() const noexcept { return snapshots_.size(); }
  std::size_t n_nodes() const noexcept { return snapshots_.front().n_nodes(); }
  const GraphSnapshot& operator[](std::size_t t) const { return snapshots_[t]; }
  const std::vector<GraphSnapshot>& snapshots() const noexcept { return snapshots_; }
  bool is_binary() const noexcept;

  auto begin() const { return snapshots_.begin(); }
  auto end() const { return snapshots_.end(); }

  /// Snapshots [first, last) as a new sequence (used by binary segmentation).
  GraphSequence slice(std::size_t first, std::size_t last) const;
  /// Snapshot order[k] placed at position k.
  GraphSequence permuted(std::span<const std::size_t> order) const;

  friend bool operator==(const GraphSequence&, const GraphSequence&) = default;

 private:
  std::vector<GraphSnapshot> snapshots_;
};

enum class Model { ER, SBM, SPARSE_SBM, DCSBM_DEGREE, DCSBM_HUB, DCSBM_BLOCK, RGG, ERGM };

std::string to_string(Model m);
Model model_from_string(const std::string& name);

/// Model-specific parameters; only the fields relevant to the model are read.
struct ModelParams {
  double p = 0.0;                               // ER
  std::vector<std::vector<double>> block;       // SBM / DCSBM block matrix
  std::vector<std::size_t> labels;              // community of each node; empty = contiguous blocks
  std::vector<double> theta;                    // DCSBM degree parameters; empty = all ones
  double radius = 0.0;                          // RGG
  double ergm_edge = 0.0;                       // ERGM coefficients
  double ergm_triangle = 0.0;
};

struct GeneratorSpec {
  Model model = Model::ER;
  std::size_t n_nodes = 0;
  std::size_t n = 0;                // sequence length
  std::optional<std::size_t> tau;   // snapshots 1..tau use `params`, tau+1..n use `post`
  ModelParams params;
  ModelParams post;
  std::uint64_t seed = 0;
};

/// Contiguous balanced communities: block size floor(N/K), remainder in the last block.
std::vector<std::size_t> contiguous_labels(std::size_t n_nodes, std::size_t k);

/// Throws ParameterError when the spec violates its invariants.
void validate(const GeneratorSpec& spec);

/// Independent snapshots; snapshot t draws from substream (seed, t).
GraphSequence generate_sequence(const GeneratorSpec& spec);

/// One snapshot from the given parameters (exposed for tests and the oracle chain).
GraphSnapshot generate_snapshot(Model model, std::size_t n_nodes, const ModelParams& params, CounterRng& rng);

/// Single-site Gibbs sampler for the edge + triangle ERGM. Each step picks a
/// uniformly random dyad and resamples it from its conditional distribution,
/// whose log-odds are edge + triangle * (common neighbours).
class ErgmGibbs {
 public:
  ErgmGibbs(std::size_t n_nodes, double edge, double triangle, CounterRng rng);

  void step();
  void run(std::size_t steps);
  std::size_t edge_count() const noexcept { return edges_; }
  double density() const noexcept;
  GraphSnapshot graph() const;

 private:
  std::size_t common_neighbours(std::size_t i, std::size_t j) const;
  void toggle(std::size_t i, std::size_t j, bool on);

  std::size_t n_;
  std::size_t words_;
  double edge_;
  double triangle_;
  CounterRng rng_;
  std::vector<std::uint64_t> bits_;
  std::size_t edges_ = 0;
};

/// Burn-in length per ERGM snapshot.
std::size_t ergm_burn_in(std::size_t n_nodes);

/// adjacency = 1 iff |w| >= cutoff. cutoff must be positive.
GraphSnapshot threshold_binarize(const GraphSnapshot& g, double cutoff);
GraphSequence threshold_binarize(const GraphSequence& seq, double cutoff);

// GSEQ v1 text format.
GraphSequence read_sequence(const std::filesystem::path& path);
GraphSequence parse_sequence(const std::string& text);
void write_sequence(const GraphSequence& seq, const std::filesystem::path& path);
std::string format_sequence(const GraphSequence& seq);

}  // namespace kapcpd
