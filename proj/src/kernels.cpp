#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kapcpd/errors.hpp"
#include "kapcpd/kernels.hpp"
#include "kapcpd/parallel.hpp"

namespace kapcpd {

namespace {

constexpr double kSymmetryTolerance = 1e-9;

std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

// Builds a kernel from a pairwise distance list (i<j row-major) with k = f(d).
template <typename F>
KernelMatrix kernel_from_distances(std::size_t n, const std::vector<double>& dist, KernelKind kind, double bandwidth,
                                   F&& f) {
  std::vector<double> entries(n * n, 0.0);
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    entries[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      const double k = f(dist[p]);
      entries[i * n + j] = k;
      entries[j * n + i] = k;
    }
  }
  return KernelMatrix(n, std::move(entries), kind, bandwidth);
}

std::vector<double> pairwise_l1(std::span<const std::vector<double>> points) {
  const std::size_t n = points.size();
  std::vector<double> out(pair_count(n));
  parallel_for(n, resolve_workers(), [&](std::size_t i) {
    std::size_t p = i * n - i * (i + 1) / 2;
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      double s = 0.0;
      for (std::size_t d = 0; d < points[i].size(); ++d) s += std::abs(points[i][d] - points[j][d]);
      out[p] = s;
    }
  });
  return out;
}

void check_points(std::span<const std::vector<double>> points) {
  if (points.size() < 2) throw ParameterError("kernel needs at least 2 observations");
  for (const auto& x : points)
    if (x.size() != points.front().size()) throw ParameterError("all observations must have the same dimension");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::GAUSSIAN: return "gaussian";
    case KernelKind::GRAPHLET: return "graphlet";
    case KernelKind::EXTERNAL: return "external";
  }
  return "?";
}

KernelMatrix::KernelMatrix(std::size_t n, std::vector<double> entries, KernelKind kind, std::optional<double> bandwidth)
    : n_(n), entries_(std::move(entries)), kind_(kind), bandwidth_(bandwidth) {
  if (n == 0) throw ParameterError("kernel matrix must be non-empty");
  if (entries_.size() != n * n) throw ParameterError("kernel matrix entries do not form an n x n matrix");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double a = entries_[i * n + j];
      if (!std::isfinite(a)) throw ParameterError("kernel matrix has a non-finite entry");
      if (j > i && std::abs(a - entries_[j * n + i]) > kSymmetryTolerance)
        throw ParameterError("kernel matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
}

KernelMatrix KernelMatrix::permuted(std::span<const std::size_t> order) const {
  if (order.size() != n_) throw ParameterError("permutation length mismatch");
  std::vector<double> out(n_ * n_);
  for (std::size_t a = 0; a < n_; ++a) {
    const double* src = entries_.data() + order[a] * n_;
    for (std::size_t b = 0; b < n_; ++b) out[a * n_ + b] = src[order[b]];
  }
  return KernelMatrix(n_, std::move(out), kind_, bandwidth_);
}

KernelMatrix KernelMatrix::slice(std::size_t first, std::size_t last) const {
  if (first >= last || last > n_) throw ParameterError("kernel slice out of range");
  const std::size_t m = last - first;
  std::vector<double> out(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) out[a * m + b] = entries_[(first + a) * n_ + first + b];
  return KernelMatrix(m, std::move(out), kind_, bandwidth_);
}

std::vector<double> pairwise_distances(std::span<const std::vector<double>> points) {
  const std::size_t n = points.size();
  std::vector<double> out(pair_count(n));
  parallel_for(n, resolve_workers(), [&](std::size_t i) {
    std::size_t p = i * n - i * (i + 1) / 2;
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      double s = 0.0;
      for (std::size_t d = 0; d < points[i].size(); ++d) {
        const double diff = points[i][d] - points[j][d];
        s += diff * diff;
      }
      out[p] = std::sqrt(s);
    }
  });
  return out;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

KernelMatrix gaussian_kernel(std::span<const std::vector<double>> points) {
  check_points(points);
  const auto dist = pairwise_distances(points);
  const double sigma = lower_median(dist);
  if (!(sigma > 0.0))
    throw DegeneracyError("Gaussian kernel bandwidth is zero: median pairwise distance vanishes");
  const double scale = 1.0 / (2.0 * sigma * sigma);
  return kernel_from_distances(points.size(), dist, KernelKind::GAUSSIAN, sigma,
                               [scale](double d) { return std::exp(-d * d * scale); });
}

KernelMatrix gaussian_kernel(const GraphSequence& seq) {
  std::vector<std::vector<double>> points;
  points.reserve(seq.size());
  for (const auto& g : seq) points.push_back(g.upper_triangle());
  return gaussian_kernel(std::span<const std::vector<double>>(points));
}

KernelMatrix laplacian_kernel(std::span<const std::vector<double>> points) {
  check_points(points);
  const auto dist = pairwise_l1(points);
  const double sigma = lower_median(dist);
  if (!(sigma > 0.0)) throw DegeneracyError("Laplacian kernel bandwidth is zero");
  return kernel_from_distances(points.size(), dist, KernelKind::EXTERNAL, sigma,
                               [sigma](double d) { return std::exp(-d / sigma); });
}

std::array<double, 4> GraphletProfile::frequencies() const {
  const double total = static_cast<double>(counts[0] + counts[1] + counts[2] + counts[3]);
  return {counts[0] / total, counts[1] / total, counts[2] / total, counts[3] / total};
}

GraphletProfile graphlet_profile(const GraphSnapshot& g) {
  const std::size_t n = g.n_nodes();
  if (n < 3) throw ParameterError("graphlet counting needs at least 3 nodes");
  if (!g.is_binary()) throw TypeError("graphlet kernel requires a binary graph; threshold weighted graphs first");

  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> bits(n * words, 0);
  std::vector<std::uint64_t> degree(n, 0);
  std::uint64_t edges = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (g.has_edge(i, j)) {
        bits[i * words + j / 64] |= std::uint64_t{1} << (j % 64);
        bits[j * words + i / 64] |= std::uint64_t{1} << (i % 64);
        ++degree[i];
        ++degree[j];
        ++edges;
      }

  // Each triangle is seen once per edge: sum of common neighbours over edges = 3T.
  std::uint64_t closed = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (g.has_edge(i, j))
        for (std::size_t w = 0; w < words; ++w)
          closed += static_cast<std::uint64_t>(std::popcount(bits[i * words + w] & bits[j * words + w]));
  const std::uint64_t triangles = closed / 3;

  std::uint64_t wedges = 0;  // sum_i C(d_i, 2)
  for (auto d : degree) wedges += d * (d - (d > 0 ? 1 : 0)) / 2;

  const std::uint64_t nn = n;
  const std::uint64_t triples = nn * (nn - 1) * (nn - 2) / 6;
  const std::uint64_t two_path = wedges - 3 * triangles;
  const std::uint64_t one_edge = edges * (nn - 2) - 2 * two_path - 3 * triangles;
  const std::uint64_t empty = triples - one_edge - two_path - triangles;
  return GraphletProfile{{empty, one_edge, two_path, triangles}};
}

KernelMatrix graphlet_kernel(const GraphSequence& seq) {
  const std::size_t n = seq.size();
  std::vector<std::array<double, 4>> unit(n);
  parallel_for(n, resolve_workers(), [&](std::size_t t) {
    auto f = graphlet_profile(seq[t]).frequencies();
    double norm = 0.0;
    for (double v : f) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : f) v /= norm;
    unit[t] = f;
  });
  std::vector<double> entries(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    entries[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < 4; ++c) dot += unit[i][c] * unit[j][c];
      dot = std::clamp(dot, 0.0, 1.0);
      entries[i * n + j] = dot;
      entries[j * n + i] = dot;
    }
  }
  return KernelMatrix(n, std::move(entries), KernelKind::GRAPHLET);
}

KernelMatrix KernelSource::build(const GraphSequence& seq) const {
  switch (kind) {
    case KernelKind::GAUSSIAN: return gaussian_kernel(seq);
    case KernelKind::GRAPHLET:
      return seq.is_binary() ? graphlet_kernel(seq) : graphlet_kernel(threshold_binarize(seq, threshold));
    case KernelKind::EXTERNAL: {
      auto k = read_kernel(file);
      if (k.size() != seq.size())
        throw ParameterError("kernel file '" + file.string() + "' has " + std::to_string(k.size()) +
                             " rows but the sequence has " + std::to_string(seq.size()) + " snapshots");
      return k;
    }
  }
  throw ParameterError("unknown kernel kind");
}

std::string KernelSource::describe() const {
  if (kind == KernelKind::EXTERNAL) return "file:" + file.string();
  return to_string(kind);
}

KernelSource parse_kernel_source(const std::string& text, double threshold) {
  KernelSource src;
  src.threshold = threshold;
  if (text == "gaussian") {
    src.kind = KernelKind::GAUSSIAN;
  } else if (text == "graphlet") {
    src.kind = KernelKind::GRAPHLET;
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    src.kind = KernelKind::EXTERNAL;
    src.file = text.substr(5);
  } else {
    throw ParameterError("kernel must be 'gaussian', 'graphlet' or 'file:PATH', got '" + text + "'");
  }
  return src;
}

KernelMatrix parse_kernel(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v))
        throw FormatError("invalid kernel value '" + cell + "'", line_no);
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("ragged kernel row: expected " + std::to_string(rows.front().size()) + " columns", line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty kernel file", 1);
  const std::size_t n = rows.size();
  if (rows.front().size() != n)
    throw FormatError("kernel matrix is not square: " + std::to_string(n) + " rows x " +
                      std::to_string(rows.front().size()) + " columns");
  std::vector<double> entries;
  entries.reserve(n * n);
  for (const auto& r : rows) entries.insert(entries.end(), r.begin(), r.end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(entries[i * n + j] - entries[j * n + i]) > kSymmetryTolerance)
        throw FormatError("kernel matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")",
                          i + 1);
  return KernelMatrix(n, std::move(entries), KernelKind::EXTERNAL);
}

KernelMatrix read_kernel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_kernel(buf.str());
}

std::string format_kernel(const KernelMatrix& k) {
  std::string out;
  for (std::size_t i = 0; i < k.size(); ++i) {
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (j) out += ',';
      out += format_double(k(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_kernel(const KernelMatrix& k, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_kernel(k);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace kapcpd
