#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "kapcpd/errors.hpp"
#include "kapcpd/graphs.hpp"

namespace kapcpd {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::size_t parse_index(std::string_view tok, std::size_t line, const char* what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw FormatError(std::string("invalid ") + what + " '" + std::string(tok) + "'", line);
  return v;
}

double parse_weight(std::string_view tok, std::size_t line) {
  // strtod accepts a leading '+', from_chars does not.
  const std::string s(tok);
  char* end = nullptr;
  const double w = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(w))
    throw FormatError("invalid weight '" + s + "'", line);
  return w;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

GraphSequence parse_sequence(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;

  auto next_line = [&](std::string& out) -> bool {
    while (std::getline(in, out)) {
      ++line_no;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (!split_ws(out).empty()) return true;
    }
    return false;
  };

  if (!next_line(raw)) throw FormatError("missing header", 1);
  auto header = split_ws(raw);
  if (header.size() != 5 || header[0] != "GSEQ") throw FormatError("missing header", line_no);
  if (header[1] != "1") throw FormatError("unsupported GSEQ version '" + std::string(header[1]) + "'", line_no);
  const std::size_t n = parse_index(header[2], line_no, "sequence length");
  const std::size_t n_nodes = parse_index(header[3], line_no, "node count");
  bool binary = false;
  if (header[4] == "binary") binary = true;
  else if (header[4] != "weighted") throw FormatError("graph kind must be 'binary' or 'weighted'", line_no);
  if (n < 4) throw FormatError("sequence length must be at least 4", line_no);
  if (n_nodes < 1) throw FormatError("node count must be positive", line_no);

  std::vector<GraphSnapshot> snaps;
  snaps.reserve(n);
  for (std::size_t t = 1; t <= n; ++t) {
    if (!next_line(raw)) throw FormatError("expected snapshot " + std::to_string(t) + " but reached end of file", line_no + 1);
    auto tok = split_ws(raw);
    if (tok.size() != 3 || tok[0] != "T") throw FormatError("expected 'T <t> <m>' line", line_no);
    if (parse_index(tok[1], line_no, "snapshot index") != t)
      throw FormatError("snapshot index out of order, expected " + std::to_string(t), line_no);
    const std::size_t m = parse_index(tok[2], line_no, "edge count");
    if (m > n_nodes * (n_nodes - 1) / 2) throw FormatError("edge count exceeds number of node pairs", line_no);
    GraphSnapshot g(n_nodes);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t e = 0; e < m; ++e) {
      if (!next_line(raw)) throw FormatError("truncated edge list for snapshot " + std::to_string(t), line_no + 1);
      auto et = split_ws(raw);
      if (et.size() != 3) throw FormatError("expected '<i> <j> <w>' edge line", line_no);
      const std::size_t i = parse_index(et[0], line_no, "node index");
      const std::size_t j = parse_index(et[1], line_no, "node index");
      const double w = parse_weight(et[2], line_no);
      if (i >= n_nodes || j >= n_nodes) throw FormatError("node index out of range (n_nodes = " + std::to_string(n_nodes) + ")", line_no);
      if (i >= j) throw FormatError("edge must satisfy i < j", line_no);
      if (!seen.emplace(i, j).second) throw FormatError("duplicate edge", line_no);
      if (binary && w != 0.0 && w != 1.0) throw FormatError("binary sequence has non-binary weight", line_no);
      g.set_weight(i, j, w);
    }
    snaps.push_back(std::move(g));
  }
  if (next_line(raw)) throw FormatError("trailing content after last snapshot", line_no);
  return GraphSequence(std::move(snaps));
}

GraphSequence read_sequence(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sequence(buf.str());
}

std::string format_sequence(const GraphSequence& seq) {
  std::ostringstream out;
  const bool binary = seq.is_binary();
  out << "GSEQ 1 " << seq.size() << ' ' << seq.n_nodes() << ' ' << (binary ? "binary" : "weighted") << '\n';
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto& g = seq[t];
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < g.n_nodes(); ++i)
      for (std::size_t j = i + 1; j < g.n_nodes(); ++j)
        if (g.weight(i, j) != 0.0)
          lines.push_back(std::to_string(i) + ' ' + std::to_string(j) + ' ' + format_double(g.weight(i, j)));
    out << "T " << (t + 1) << ' ' << lines.size() << '\n';
    for (const auto& l : lines) out << l << '\n';
  }
  return out.str();
}

void write_sequence(const GraphSequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_sequence(seq);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace kapcpd
