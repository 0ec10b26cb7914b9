#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "kapcpd/errors.hpp"
#include "kapcpd/graphs.hpp"
#include "kapcpd/parallel.hpp"

namespace kapcpd {

namespace {

bool is_block_model(Model m) {
  return m == Model::SBM || m == Model::SPARSE_SBM || m == Model::DCSBM_DEGREE || m == Model::DCSBM_HUB ||
         m == Model::DCSBM_BLOCK;
}

bool is_dcsbm(Model m) { return m == Model::DCSBM_DEGREE || m == Model::DCSBM_HUB || m == Model::DCSBM_BLOCK; }

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void validate_params(Model model, std::size_t n_nodes, const ModelParams& prm, const char* which) {
  const std::string where = std::string(" (") + which + " parameters)";
  switch (model) {
    case Model::ER:
      if (!is_probability(prm.p)) throw ParameterError("ER probability must lie in [0,1]" + where);
      break;
    case Model::RGG:
      if (!std::isfinite(prm.radius) || prm.radius <= 0.0) throw ParameterError("RGG radius must be positive" + where);
      break;
    case Model::ERGM:
      if (!std::isfinite(prm.ergm_edge) || !std::isfinite(prm.ergm_triangle))
        throw ParameterError("ERGM coefficients must be finite" + where);
      break;
    default: {
      const std::size_t k = prm.block.size();
      if (k == 0) throw ParameterError("block matrix is empty" + where);
      if (k > n_nodes) throw ParameterError("more communities than nodes" + where);
      for (std::size_t a = 0; a < k; ++a) {
        if (prm.block[a].size() != k) throw ParameterError("block matrix must be square" + where);
        for (std::size_t b = 0; b < k; ++b) {
          if (!is_probability(prm.block[a][b])) throw ParameterError("block entries must lie in [0,1]" + where);
          if (b < a && prm.block[a][b] != prm.block[b][a]) throw ParameterError("block matrix must be symmetric" + where);
        }
      }
      if (!prm.labels.empty()) {
        if (prm.labels.size() != n_nodes) throw ParameterError("labels must have one entry per node" + where);
        for (auto z : prm.labels)
          if (z >= k) throw ParameterError("community label out of range" + where);
      }
      if (!prm.theta.empty()) {
        if (!is_dcsbm(model)) throw ParameterError("degree parameters are only valid for DCSBM models" + where);
        if (prm.theta.size() != n_nodes) throw ParameterError("theta must have one entry per node" + where);
        for (double th : prm.theta)
          if (!std::isfinite(th) || th <= 0.0) throw ParameterError("theta entries must be positive" + where);
      }
    }
  }
}

// Largest theta_i theta_j Lambda product; > 1 means clamping will happen.
double max_dcsbm_probability(std::size_t n_nodes, const ModelParams& prm) {
  const auto labels = prm.labels.empty() ? contiguous_labels(n_nodes, prm.block.size()) : prm.labels;
  double best = 0.0;
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 1; j < n_nodes; ++j) {
      const double th = prm.theta.empty() ? 1.0 : prm.theta[i] * prm.theta[j];
      best = std::max(best, th * prm.block[labels[i]][labels[j]]);
    }
  return best;
}

GraphSnapshot sample_independent_edges(std::size_t n_nodes, const ModelParams& prm, CounterRng& rng) {
  const auto labels = prm.labels.empty() ? contiguous_labels(n_nodes, prm.block.size()) : prm.labels;
  GraphSnapshot g(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 1; j < n_nodes; ++j) {
      double p = prm.block[labels[i]][labels[j]];
      if (!prm.theta.empty()) p = std::clamp(prm.theta[i] * prm.theta[j] * p, 0.0, 1.0);
      if (rng.uniform() < p) g.set_weight(i, j, 1.0);
    }
  return g;
}

GraphSnapshot sample_er(std::size_t n_nodes, double p, CounterRng& rng) {
  GraphSnapshot g(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 1; j < n_nodes; ++j)
      if (rng.uniform() < p) g.set_weight(i, j, 1.0);
  return g;
}

GraphSnapshot sample_rgg(std::size_t n_nodes, double radius, CounterRng& rng) {
  std::vector<double> x(n_nodes), y(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform();
  }
  GraphSnapshot g(n_nodes);
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 1; j < n_nodes; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx * dx + dy * dy <= r2) g.set_weight(i, j, 1.0);
    }
  return g;
}

}  // namespace

std::string to_string(Model m) {
  switch (m) {
    case Model::ER: return "ER";
    case Model::SBM: return "SBM";
    case Model::SPARSE_SBM: return "SPARSE_SBM";
    case Model::DCSBM_DEGREE: return "DCSBM_DEGREE";
    case Model::DCSBM_HUB: return "DCSBM_HUB";
    case Model::DCSBM_BLOCK: return "DCSBM_BLOCK";
    case Model::RGG: return "RGG";
    case Model::ERGM: return "ERGM";
  }
  return "?";
}

Model model_from_string(const std::string& name) {
  for (Model m : {Model::ER, Model::SBM, Model::SPARSE_SBM, Model::DCSBM_DEGREE, Model::DCSBM_HUB, Model::DCSBM_BLOCK,
                  Model::RGG, Model::ERGM})
    if (to_string(m) == name) return m;
  throw ParameterError("unknown model '" + name + "'");
}

std::vector<std::size_t> contiguous_labels(std::size_t n_nodes, std::size_t k) {
  if (k == 0 || k > n_nodes) throw ParameterError("community count must be in [1, N]");
  const std::size_t size = n_nodes / k;
  std::vector<std::size_t> labels(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) labels[i] = std::min(i / size, k - 1);
  return labels;
}

void validate(const GeneratorSpec& spec) {
  if (spec.n_nodes < 2) throw ParameterError("graphs need at least 2 nodes");
  if (spec.n < 4) throw ParameterError("sequence length must be at least 4");
  validate_params(spec.model, spec.n_nodes, spec.params, "pre-change");
  if (spec.tau) {
    if (*spec.tau < 1 || *spec.tau >= spec.n) throw ParameterError("change index tau must satisfy 1 <= tau < n");
    validate_params(spec.model, spec.n_nodes, spec.post, "post-change");
  }
}

GraphSnapshot generate_snapshot(Model model, std::size_t n_nodes, const ModelParams& params, CounterRng& rng) {
  if (model == Model::ER) return sample_er(n_nodes, params.p, rng);
  if (model == Model::RGG) return sample_rgg(n_nodes, params.radius, rng);
  if (model == Model::ERGM) {
    ErgmGibbs chain(n_nodes, params.ergm_edge, params.ergm_triangle, rng);
    chain.run(ergm_burn_in(n_nodes));
    return chain.graph();
  }
  return sample_independent_edges(n_nodes, params, rng);
}

GraphSequence generate_sequence(const GeneratorSpec& spec) {
  validate(spec);
  if (is_block_model(spec.model)) {
    const bool clamps = max_dcsbm_probability(spec.n_nodes, spec.params) > 1.0 ||
                        (spec.tau && max_dcsbm_probability(spec.n_nodes, spec.post) > 1.0);
    if (clamps) log_warning("DCSBM edge probabilities theta_i*theta_j*Lambda exceed 1 and are clamped");
  }
  std::vector<std::optional<GraphSnapshot>> slots(spec.n);
  parallel_for(spec.n, resolve_workers(), [&](std::size_t k) {
    const std::size_t t = k + 1;
    CounterRng rng(spec.seed, t);
    const ModelParams& prm = (spec.tau && t > *spec.tau) ? spec.post : spec.params;
    slots[k] = generate_snapshot(spec.model, spec.n_nodes, prm, rng);
  });
  std::vector<GraphSnapshot> out;
  out.reserve(spec.n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return GraphSequence(std::move(out));
}

std::size_t ergm_burn_in(std::size_t n_nodes) { return 20 * n_nodes * n_nodes; }

ErgmGibbs::ErgmGibbs(std::size_t n_nodes, double edge, double triangle, CounterRng rng)
    : n_(n_nodes), words_((n_nodes + 63) / 64), edge_(edge), triangle_(triangle), rng_(rng),
      bits_(n_nodes * words_, 0) {
  if (n_nodes < 2) throw ParameterError("ERGM needs at least 2 nodes");
}

std::size_t ErgmGibbs::common_neighbours(std::size_t i, std::size_t j) const {
  const std::uint64_t* ri = bits_.data() + i * words_;
  const std::uint64_t* rj = bits_.data() + j * words_;
  std::size_t c = 0;
  for (std::size_t w = 0; w < words_; ++w) c += static_cast<std::size_t>(std::popcount(ri[w] & rj[w]));
  return c;
}

void ErgmGibbs::toggle(std::size_t i, std::size_t j, bool on) {
  const std::uint64_t mi = std::uint64_t{1} << (j % 64);
  const std::uint64_t mj = std::uint64_t{1} << (i % 64);
  std::uint64_t& wi = bits_[i * words_ + j / 64];
  std::uint64_t& wj = bits_[j * words_ + i / 64];
  const bool was = (wi & mi) != 0;
  if (was == on) return;
  if (on) {
    wi |= mi;
    wj |= mj;
    ++edges_;
  } else {
    wi &= ~mi;
    wj &= ~mj;
    --edges_;
  }
}

void ErgmGibbs::step() {
  // Uniform dyad i < j.
  std::size_t i = rng_.below(n_);
  std::size_t j = rng_.below(n_ - 1);
  if (j >= i) ++j;
  if (j < i) std::swap(i, j);
  const double log_odds = edge_ + triangle_ * static_cast<double>(common_neighbours(i, j));
  const double p_on = 1.0 / (1.0 + std::exp(-log_odds));
  toggle(i, j, rng_.uniform() < p_on);
}

void ErgmGibbs::run(std::size_t steps) {
  for (std::size_t s = 0; s < steps; ++s) step();
}

double ErgmGibbs::density() const noexcept {
  return static_cast<double>(edges_) / (static_cast<double>(n_) * static_cast<double>(n_ - 1) / 2.0);
}

GraphSnapshot ErgmGibbs::graph() const {
  GraphSnapshot g(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if ((bits_[i * words_ + j / 64] >> (j % 64)) & 1U) g.set_weight(i, j, 1.0);
  return g;
}

}  // namespace kapcpd
