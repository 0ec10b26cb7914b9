#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kapcpd/bench.hpp"
#include "kapcpd/errors.hpp"
#include "kapcpd/graphs.hpp"
#include "oracles.hpp"

using namespace kapcpd;

namespace {

GraphSequence small_sequence(std::size_t n, std::size_t N, std::uint64_t seed) {
  GeneratorSpec g;
  g.model = Model::ER;
  g.n_nodes = N;
  g.n = n;
  g.params.p = 0.4;
  g.seed = seed;
  return generate_sequence(g);
}

double mean_density(const GraphSequence& seq, std::size_t first, std::size_t last) {
  double s = 0;
  for (std::size_t t = first; t < last; ++t) s += seq[t].density();
  return s / static_cast<double>(last - first);
}

// Edge density among node pairs with the given block membership pattern.
double block_density(const GraphSequence& seq, std::size_t first, std::size_t last, bool within) {
  const std::size_t N = seq.n_nodes();
  const auto labels = contiguous_labels(N, 2);
  double edges = 0, pairs = 0;
  for (std::size_t t = first; t < last; ++t)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j)
        if ((labels[i] == labels[j]) == within) {
          edges += seq[t].weight(i, j);
          pairs += 1;
        }
  return edges / pairs;
}

}  // namespace

TEST_SUITE("graphs") {
  TEST_CASE("snapshot keeps a symmetric zero-diagonal adjacency") {
    GraphSnapshot g(4);
    g.set_weight(0, 2, 0.7);
    CHECK(g.weight(2, 0) == 0.7);
    CHECK(g.weight(0, 0) == 0.0);
    CHECK_THROWS_AS(g.set_weight(1, 1, 1.0), ParameterError);
    CHECK_THROWS_AS(g.set_weight(0, 4, 1.0), ParameterError);
    CHECK_FALSE(g.is_binary());
    CHECK(g.edge_count() == 1);
  }

  TEST_CASE("sequence invariants") {
    std::vector<GraphSnapshot> three(3, GraphSnapshot(5));
    CHECK_THROWS_AS(GraphSequence{three}, ParameterError);
    std::vector<GraphSnapshot> mixed(4, GraphSnapshot(5));
    mixed[2] = GraphSnapshot(6);
    CHECK_THROWS_AS(GraphSequence{mixed}, ParameterError);
  }

  TEST_CASE("ER density matches p within three standard errors") {
    GeneratorSpec g;
    g.model = Model::ER;
    g.n_nodes = 50;
    g.n = 100;
    g.params.p = 0.5;
    g.seed = 11;
    const auto seq = generate_sequence(g);
    REQUIRE(seq.size() == 100);
    const double dyads = 100.0 * 50 * 49 / 2;
    CHECK(std::abs(mean_density(seq, 0, 100) - 0.5) <= 3 * std::sqrt(0.25 / dyads));
  }

  TEST_CASE("sparse SBM block matrix changes at tau") {
    GeneratorSpec g;
    g.model = Model::SPARSE_SBM;
    g.n_nodes = 100;
    g.n = 100;
    g.tau = 50;
    g.params.block = {{0.05, 0.03}, {0.03, 0.05}};
    g.post.block = {{0.06, 0.02}, {0.02, 0.06}};
    g.seed = 5;
    const auto seq = generate_sequence(g);
    // within pairs per snapshot: 2 * C(50,2) = 2450; across: 2500
    auto close = [](double observed, double p, double pairs) {
      return std::abs(observed - p) <= 4 * std::sqrt(p * (1 - p) / pairs);
    };
    CHECK(close(block_density(seq, 0, 50, true), 0.05, 50 * 2450.0));
    CHECK(close(block_density(seq, 0, 50, false), 0.03, 50 * 2500.0));
    CHECK(close(block_density(seq, 50, 100, true), 0.06, 50 * 2450.0));
    CHECK(close(block_density(seq, 50, 100, false), 0.02, 50 * 2500.0));
  }

  TEST_CASE("ERGM snapshots agree with an independent long-run chain") {
    GeneratorSpec g;
    g.model = Model::ERGM;
    g.n_nodes = 50;
    g.n = 40;
    g.params.ergm_edge = -2.0;
    g.params.ergm_triangle = 0.1;
    g.seed = 21;
    const auto seq = generate_sequence(g);
    std::vector<double> dens;
    for (const auto& s : seq) dens.push_back(s.density());
    const double m = std::accumulate(dens.begin(), dens.end(), 0.0) / dens.size();
    double v = 0;
    for (double d : dens) v += (d - m) * (d - m);
    const double se_snap = std::sqrt(v / (dens.size() - 1) / dens.size());

    ErgmGibbs chain(50, -2.0, 0.1, CounterRng(987654321, 0));
    chain.run(ergm_burn_in(50));
    std::vector<double> long_run;
    for (int k = 0; k < 400; ++k) {
      chain.run(50 * 49);
      long_run.push_back(chain.density());
    }
    const double ml = std::accumulate(long_run.begin(), long_run.end(), 0.0) / long_run.size();
    // Thinned chain samples are close to independent at this spacing; allow a wide band.
    double vl = 0;
    for (double d : long_run) vl += (d - ml) * (d - ml);
    const double se_long = std::sqrt(vl / (long_run.size() - 1) / long_run.size()) * 3;
    CHECK(std::abs(m - ml) <= 4 * std::hypot(se_snap, se_long));
  }

  TEST_CASE("RGG adjacency is exactly the distance rule") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const std::size_t N = 5 + s % 16;
      ModelParams prm;
      prm.radius = 0.3;
      CounterRng rng(s, 1);
      CounterRng replay = rng;
      const GraphSnapshot g = generate_snapshot(Model::RGG, N, prm, rng);
      std::vector<double> x(N), y(N);
      for (std::size_t i = 0; i < N; ++i) {
        x[i] = replay.uniform();
        y[i] = replay.uniform();
      }
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
          CHECK(g.has_edge(i, j) == (std::hypot(x[i] - x[j], y[i] - y[j]) <= 0.3 + 1e-15));
    }
  }

  TEST_CASE("DCSBM block-scenario theta has mean one") {
    CounterRng rng(3, 0);
    const auto theta = lognormal_theta(60, 0.25, rng);
    const double m = std::accumulate(theta.begin(), theta.end(), 0.0) / theta.size();
    CHECK(m == doctest::Approx(1.0).epsilon(1e-14));
    for (double t : theta) CHECK(t > 0.0);
  }

  TEST_CASE("hub scenario raises theta of the first hub_size nodes") {
    BenchSpec b;
    b.scenario = "DCSBM_HUB";
    const auto g = scenario_spec(b, 4, 1);
    REQUIRE(g.post.theta.size() == 50);
    CHECK(g.post.theta[3] == 1.3);
    CHECK(g.post.theta[4] == 1.0);
    CHECK(g.params.theta.empty());
  }

  TEST_CASE("identical specs give identical sequences") {
    CHECK(small_sequence(10, 12, 77) == small_sequence(10, 12, 77));
    CHECK_FALSE(small_sequence(10, 12, 77) == small_sequence(10, 12, 78));
  }

  TEST_CASE("generator parameter validation") {
    GeneratorSpec g;
    g.model = Model::ER;
    g.n_nodes = 10;
    g.n = 10;
    g.params.p = 1.5;
    CHECK_THROWS_AS(generate_sequence(g), ParameterError);
    g.params.p = 0.5;
    g.tau = 10;
    CHECK_THROWS_AS(generate_sequence(g), ParameterError);
    g.tau.reset();
    g.model = Model::RGG;
    g.params.radius = -1;
    CHECK_THROWS_AS(generate_sequence(g), ParameterError);
  }

  TEST_CASE("DCSBM probabilities above one are clamped") {
    GeneratorSpec g;
    g.model = Model::DCSBM_DEGREE;
    g.n_nodes = 10;
    g.n = 4;
    g.params.block = {{0.9, 0.9}, {0.9, 0.9}};
    g.params.theta.assign(10, 2.0);
    set_warnings_enabled(false);
    const auto seq = generate_sequence(g);
    set_warnings_enabled(true);
    for (const auto& s : seq) CHECK(s.edge_count() == 45);
  }

  TEST_CASE("threshold_binarize") {
    GraphSnapshot g(3);
    g.set_weight(0, 1, 0.5);
    g.set_weight(0, 2, -0.6);
    g.set_weight(1, 2, 0.2);
    const auto b = threshold_binarize(g, 0.5);
    CHECK(b.weight(0, 1) == 1.0);
    CHECK(b.weight(0, 2) == 1.0);
    CHECK(b.weight(1, 2) == 0.0);
    CHECK(threshold_binarize(GraphSnapshot(4), 0.5) == GraphSnapshot(4));
    CHECK_THROWS_AS(threshold_binarize(g, 0.0), ParameterError);
  }

  TEST_CASE("GSEQ round trip") {
    std::vector<GraphSnapshot> snaps;
    CounterRng rng(9, 0);
    for (int t = 0; t < 4; ++t) {
      GraphSnapshot g(6);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i + 1; j < 6; ++j)
          if (rng.uniform() < 0.5) g.set_weight(i, j, rng.uniform() * 3 - 1.5);
      snaps.push_back(g);
    }
    const GraphSequence seq(snaps);
    CHECK(parse_sequence(format_sequence(seq)) == seq);
    const auto binary = small_sequence(5, 7, 3);
    CHECK(parse_sequence(format_sequence(binary)) == binary);
    const auto path = std::filesystem::temp_directory_path() / "kapcpd_roundtrip.gseq";
    write_sequence(seq, path);
    CHECK(read_sequence(path) == seq);
    std::filesystem::remove(path);
  }

  TEST_CASE("GSEQ format errors carry line numbers") {
    auto line_of = [](const std::string& text) -> std::size_t {
      try {
        parse_sequence(text);
      } catch (const FormatError& e) {
        return e.line();
      }
      return 0;
    };
    CHECK_THROWS_WITH_AS(parse_sequence(""), doctest::Contains("missing header"), FormatError);
    const std::string base = "GSEQ 1 4 3 binary\nT 1 1\n0 1 1\nT 2 0\nT 3 0\nT 4 0\n";
    CHECK_NOTHROW(parse_sequence(base));
    CHECK(line_of("GSEQ 1 4 3 binary\nT 1 1\n0 3 1\nT 2 0\nT 3 0\nT 4 0\n") == 3);
    CHECK(line_of("GSEQ 1 4 3 binary\nT 1 1\n1 0 1\nT 2 0\nT 3 0\nT 4 0\n") == 3);
    CHECK(line_of("GSEQ 1 4 3 binary\nT 1 1\n0 1 0.5\nT 2 0\nT 3 0\nT 4 0\n") == 3);
    CHECK(line_of("GSEQ 1 4 3 binary\nT 1 2\n0 1 1\n0 1 1\nT 2 0\nT 3 0\nT 4 0\n") == 4);
    CHECK(line_of("GSEQ 1 4 3 binary\nT 2 0\nT 1 0\nT 3 0\nT 4 0\n") == 2);
    CHECK(line_of(base + "junk\n") == 7);
    CHECK(line_of("GSEQ 1 3 3 binary\nT 1 0\nT 2 0\nT 3 0\n") == 1);
    CHECK(line_of("GSEQ 1 4 3 binary\nT 1 0\n") == 3);
  }

  TEST_CASE("slice and permuted") {
    const auto seq = small_sequence(8, 6, 1);
    const auto s = seq.slice(2, 7);
    CHECK(s.size() == 5);
    CHECK(s[0] == seq[2]);
    const std::vector<std::size_t> order{7, 6, 5, 4, 3, 2, 1, 0};
    CHECK(seq.permuted(order)[0] == seq[7]);
  }
}
