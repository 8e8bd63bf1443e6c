#include "ahp/hypergraph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace ahp {

NodeSet::NodeSet(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvariantError("node set must be nonempty");
  std::sort(nodes_.begin(), nodes_.end());
  if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end())
    throw InvariantError("node set contains a duplicate node");
}

bool NodeSet::contains(NodeId v) const { return std::binary_search(nodes_.begin(), nodes_.end(), v); }

std::size_t NodeSetHash::operator()(const NodeSet& s) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (NodeId v : s) h = mix_seed(h ^ v);
  return static_cast<std::size_t>(h);
}

Hypergraph::Hypergraph(std::size_t num_nodes, std::vector<NodeSet> hyperedges)
    : num_nodes_(num_nodes), edges_(std::move(hyperedges)) {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (edge.size() < 2)
      throw InvariantError("hyperedge " + std::to_string(e) + " has fewer than two nodes");
    if (edge.nodes().back() >= num_nodes_)
      throw InvariantError("hyperedge " + std::to_string(e) + " references node " +
                           std::to_string(edge.nodes().back()) + " >= num_nodes " + std::to_string(num_nodes_));
    for (NodeId v : edge) triplets.emplace_back(v, static_cast<std::uint32_t>(e), 1.0);
  }
  incidence_ = CsrMatrix::from_triplets(num_nodes_, edges_.size(), std::move(triplets));
  incidence_t_ = incidence_.transpose();
}

std::size_t SplitBundle::num_masked() const {
  return static_cast<std::size_t>(std::count(structure_visible.begin(), structure_visible.end(), false));
}

double SizeDistribution::mean() const {
  double m = 0.0;
  for (auto [k, p] : probability) m += static_cast<double>(k) * p;
  return m;
}

CliqueAdjacency::CliqueAdjacency(const Hypergraph& h) : neighbors_(h.num_nodes()) {
  for (const auto& e : h.hyperedges()) {
    for (NodeId u : e)
      for (NodeId v : e)
        if (u != v) neighbors_[u].push_back(v);
  }
  for (NodeId u = 0; u < neighbors_.size(); ++u) {
    auto& n = neighbors_[u];
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
    for (NodeId v : n)
      if (u < v) edges_.emplace_back(u, v);
  }
}

bool CliqueAdjacency::adjacent(NodeId u, NodeId v) const {
  const auto& n = neighbors_[u];
  return std::binary_search(n.begin(), n.end(), v);
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << text;
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    start = end + 1;
  }
}

std::uint64_t parse_uint(std::string_view tok, std::size_t line_no) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc::result_out_of_range)
    throw ParseError("line " + std::to_string(line_no) + ": node id overflow '" + std::string(tok) + "'");
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line_no) + ": malformed integer '" + std::string(tok) + "'");
  return v;
}

double parse_real(std::string_view tok, std::size_t line_no) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line_no) + ": malformed number '" + std::string(tok) + "'");
  return v;
}

constexpr std::string_view kNumNodesHeader = "# num_nodes:";
constexpr std::uint64_t kMaxNodeId = std::numeric_limits<NodeId>::max() - 1;

}  // namespace

Hypergraph parse_hypergraph(const std::string& text) {
  std::vector<NodeSet> edges;
  std::uint64_t header_nodes = 0;
  bool has_header = false;
  std::uint64_t max_id = 0;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.starts_with(kNumNodesHeader)) {
      auto toks = tokenize(line.substr(kNumNodesHeader.size()));
      if (toks.size() != 1) throw ParseError("line " + std::to_string(line_no) + ": malformed num_nodes header");
      header_nodes = parse_uint(toks[0], line_no);
      has_header = true;
      return;
    }
    auto toks = tokenize(line);
    if (toks.empty() || toks[0].starts_with('#')) return;
    std::vector<NodeId> ids;
    ids.reserve(toks.size());
    for (auto t : toks) {
      auto v = parse_uint(t, line_no);
      if (v > kMaxNodeId) throw ParseError("line " + std::to_string(line_no) + ": node id overflow");
      ids.push_back(static_cast<NodeId>(v));
      max_id = std::max(max_id, v);
    }
    if (ids.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": hyperedge has fewer than two nodes");
    try {
      edges.emplace_back(std::move(ids));
    } catch (const InvariantError&) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate node within hyperedge");
    }
  });
  std::uint64_t n = edges.empty() ? 0 : max_id + 1;
  if (has_header) {
    if (header_nodes < n) throw ParseError("num_nodes header smaller than 1 + max node id");
    n = header_nodes;
  }
  return Hypergraph(static_cast<std::size_t>(n), std::move(edges));
}

Hypergraph load_hypergraph(const std::filesystem::path& path) { return parse_hypergraph(read_file(path)); }

std::string serialize_hypergraph(const Hypergraph& h) {
  std::string out = std::string(kNumNodesHeader) + " " + std::to_string(h.num_nodes()) + "\n";
  for (const auto& e : h.hyperedges()) {
    bool first = true;
    for (NodeId v : e) {
      if (!first) out += ' ';
      out += std::to_string(v);
      first = false;
    }
    out += '\n';
  }
  return out;
}

void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path) {
  write_file(path, serialize_hypergraph(h));
}

Hypergraph load_labeled_hypergraph(const std::filesystem::path& path, LabelMap& labels) {
  std::unordered_map<std::string, NodeId> ids;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) ids.emplace(labels.labels[i], static_cast<NodeId>(i));
  std::vector<NodeSet> edges;
  for_each_line(read_file(path), [&](std::size_t line_no, std::string_view line) {
    auto toks = tokenize(line);
    if (toks.empty() || toks[0].starts_with('#')) return;
    std::vector<NodeId> e;
    for (auto t : toks) {
      auto [it, inserted] = ids.emplace(std::string(t), static_cast<NodeId>(labels.labels.size()));
      if (inserted) labels.labels.emplace_back(t);
      e.push_back(it->second);
    }
    if (e.size() < 2) throw ParseError("line " + std::to_string(line_no) + ": hyperedge has fewer than two nodes");
    try {
      edges.emplace_back(std::move(e));
    } catch (const InvariantError&) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate node within hyperedge");
    }
  });
  return Hypergraph(labels.labels.size(), std::move(edges));
}

void save_label_map(const LabelMap& labels, const std::filesystem::path& path) {
  std::string out;
  for (const auto& l : labels.labels) out += l + "\n";
  write_file(path, out);
}

LabelMap load_label_map(const std::filesystem::path& path) {
  LabelMap m;
  for_each_line(read_file(path), [&](std::size_t, std::string_view line) { m.labels.emplace_back(line); });
  return m;
}

FeatureMatrix parse_features(const std::string& text) {
  std::vector<std::pair<std::size_t, std::vector<std::string_view>>> lines;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto toks = tokenize(line);
    if (toks.empty() || toks[0].starts_with('#')) return;
    lines.emplace_back(line_no, std::move(toks));
  });
  if (lines.empty()) throw ParseError("feature file is empty");
  const auto& header = lines[0].second;
  if (header.size() != 2 && !(header.size() == 3 && header[2] == "sparse"))
    throw ParseError("feature header must be 'num_nodes d'");
  FeatureMatrix x;
  x.rows = parse_uint(header[0], lines[0].first);
  x.cols = parse_uint(header[1], lines[0].first);
  x.data.assign(x.rows * x.cols, 0.0);

  // Dense when there is one row of d values per node; otherwise triplets.
  const std::size_t body = lines.size() - 1;
  bool dense = header.size() == 2 && body == x.rows;
  for (std::size_t i = 1; dense && i < lines.size(); ++i) dense = lines[i].second.size() == x.cols;
  if (dense) {
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) x(r, c) = parse_real(lines[r + 1].second[c], lines[r + 1].first);
    return x;
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, toks] = lines[i];
    if (toks.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected a dense row or an 'i j value' triplet");
    auto r = parse_uint(toks[0], line_no);
    auto c = parse_uint(toks[1], line_no);
    if (r >= x.rows || c >= x.cols) throw ParseError("line " + std::to_string(line_no) + ": triplet out of range");
    x(r, c) = parse_real(toks[2], line_no);
  }
  return x;
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("feature file not found: " + path.string());
  return parse_features(read_file(path));
}

void save_features(const FeatureMatrix& x, const std::filesystem::path& path) {
  std::string out = std::to_string(x.rows) + " " + std::to_string(x.cols) + "\n";
  char buf[32];
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x(r, c));
      if (c) out += ' ';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Splits

SplitBundle split_hyperedges(const Hypergraph& h, std::uint64_t seed) {
  const std::size_t n = h.num_edges();
  if (n < 5) throw InvariantError("need at least 5 hyperedges to split, got " + std::to_string(n));
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);

  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_val = n * 2 / 10;
  SplitBundle b;
  b.train.assign(order.begin(), order.begin() + n_train);
  b.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  b.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(b.train.begin(), b.train.end());
  std::sort(b.validation.begin(), b.validation.end());
  std::sort(b.test.begin(), b.test.end());

  // mask ceil(|train| / 6) positions, chosen by a partial shuffle
  const std::size_t n_mask = (n_train + 5) / 6;
  std::vector<std::size_t> pos(n_train);
  std::iota(pos.begin(), pos.end(), 0);
  for (std::size_t i = 0; i < n_mask; ++i) std::swap(pos[i], pos[i + uniform_index(rng, n_train - i)]);
  b.structure_visible.assign(n_train, true);
  for (std::size_t i = 0; i < n_mask; ++i) b.structure_visible[pos[i]] = false;
  return b;
}

Hypergraph structure_hypergraph(const Hypergraph& h, const SplitBundle& b) {
  std::vector<NodeSet> edges;
  for (std::size_t i = 0; i < b.train.size(); ++i)
    if (b.structure_visible[i]) edges.push_back(h.edge(static_cast<EdgeId>(b.train[i])));
  return Hypergraph(h.num_nodes(), std::move(edges));
}

std::vector<NodeSet> select_edges(const Hypergraph& h, std::span<const std::size_t> idx) {
  std::vector<NodeSet> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(h.edge(static_cast<EdgeId>(i)));
  return out;
}

CliqueAdjacency clique_adjacency(const Hypergraph& h) { return CliqueAdjacency(h); }

SizeDistribution size_distribution(std::span<const NodeSet> edges) {
  if (edges.empty()) throw InvariantError("size distribution of an empty edge list");
  std::map<std::size_t, std::size_t> counts;
  for (const auto& e : edges) ++counts[e.size()];
  SizeDistribution d;
  for (auto [k, c] : counts) d.probability[k] = static_cast<double>(c) / static_cast<double>(edges.size());
  return d;
}

}  // namespace ahp
