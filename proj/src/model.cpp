#include "ahp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ahp {

std::string_view to_string(Activation a) { return a == Activation::Relu ? "relu" : "leaky_relu"; }
std::string_view to_string(GeneratorProfile g) { return g == GeneratorProfile::Small ? "small" : "large"; }

std::array<std::size_t, 4> ModelProfile::generator_dims() const {
  if (generator == GeneratorProfile::Small) return {64, 256, 256, num_nodes};
  return {128, 1024, 1024, num_nodes};
}

StructureOperator make_structure_operator(const Hypergraph& h, double alpha, double beta) {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> to_edge;
  for (EdgeId e = 0; e < h.num_edges(); ++e) {
    const auto& edge = h.edge(e);
    double total = 0.0;
    for (NodeId v : edge) total += std::pow(static_cast<double>(h.degree(v)), beta);
    for (NodeId v : edge) to_edge.emplace_back(e, v, std::pow(static_cast<double>(h.degree(v)), beta) / total);
  }
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> to_node;
  for (NodeId v = 0; v < h.num_nodes(); ++v) {
    auto inc = h.incident_edges(v);
    double total = 0.0;
    for (auto e : inc) total += std::pow(static_cast<double>(h.edge(e).size()), alpha);
    for (auto e : inc) to_node.emplace_back(v, e, std::pow(static_cast<double>(h.edge(e).size()), alpha) / total);
  }
  StructureOperator op;
  op.node_to_edge = std::make_shared<SparseOperator>(CsrMatrix::from_triplets(h.num_edges(), h.num_nodes(), to_edge));
  op.edge_to_node = std::make_shared<SparseOperator>(CsrMatrix::from_triplets(h.num_nodes(), h.num_edges(), to_node));
  op.num_nodes = h.num_nodes();
  return op;
}

namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& x : m.data) x = dist(rng);
  return m;
}

Var activate(Tape& t, Var x, Activation a) { return a == Activation::Relu ? t.relu(x) : t.leaky_relu(x, 0.01); }

Var affine(Tape& t, Var x, Parameter* w, Parameter* b, bool trainable) {
  return t.add_bias(t.matmul(x, t.param(*w, trainable)), t.param(*b, trainable));
}

}  // namespace

AhpModel::AhpModel(const ModelProfile& profile, std::uint64_t seed) : profile_(profile) {
  if (profile.num_nodes == 0 || profile.feature_dim == 0 || profile.embedding_dim == 0 || profile.layers == 0)
    throw InvariantError("model profile has a zero dimension");
  Rng rng(seed);
  const std::size_t emb = profile.embedding_dim;
  for (std::size_t l = 0; l < profile.layers; ++l) {
    const std::string p = "encoder." + std::to_string(l) + ".";
    const std::size_t in = l == 0 ? profile.feature_dim : emb;
    EncoderLayerParams layer{};
    layer.w_v = &params_.add(p + "w_v", uniform_init(in, emb, in, rng));
    layer.b_v = &params_.add(p + "b_v", uniform_init(1, emb, in, rng));
    layer.w_e = &params_.add(p + "w_e", uniform_init(emb, emb, emb, rng));
    layer.b_e = &params_.add(p + "b_e", uniform_init(1, emb, emb, rng));
    encoder_.push_back(layer);
  }
  const std::array<std::size_t, 4> sdims = {emb, 128, 8, 1};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = "scorer." + std::to_string(i) + ".";
    scorer_.weight[i] = &params_.add(p + "weight", uniform_init(sdims[i], sdims[i + 1], sdims[i], rng));
    scorer_.bias[i] = &params_.add(p + "bias", uniform_init(1, sdims[i + 1], sdims[i], rng));
  }
  const auto gdims = profile.generator_dims();
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = "generator." + std::to_string(i) + ".";
    generator_.weight[i] = &params_.add(p + "weight", uniform_init(gdims[i], gdims[i + 1], gdims[i], rng));
    generator_.bias[i] = &params_.add(p + "bias", uniform_init(1, gdims[i + 1], gdims[i], rng));
  }
}

std::vector<Parameter*> AhpModel::discriminator_params() {
  std::vector<Parameter*> out;
  for (const auto& l : encoder_) out.insert(out.end(), {l.w_v, l.b_v, l.w_e, l.b_e});
  for (std::size_t i = 0; i < 3; ++i) out.insert(out.end(), {scorer_.weight[i], scorer_.bias[i]});
  return out;
}

std::vector<Parameter*> AhpModel::generator_params() {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < 3; ++i) out.insert(out.end(), {generator_.weight[i], generator_.bias[i]});
  return out;
}

Var AhpModel::encode(Tape& t, const StructureOperator& op, Var features, bool trainable) {
  if (op.num_nodes != profile_.num_nodes || t.value(features).rows != profile_.num_nodes)
    throw ShapeError("encode: node count does not match the model profile");
  if (t.value(features).cols != profile_.feature_dim) throw ShapeError("encode: feature dimension mismatch");
  Var x = features;
  for (const auto& l : encoder_) {
    Var e = activate(t, affine(t, t.spmm(op.node_to_edge, x), l.w_v, l.b_v, trainable), profile_.activation);
    x = activate(t, affine(t, t.spmm(op.edge_to_node, e), l.w_e, l.b_e, trainable), profile_.activation);
  }
  return x;
}

Var AhpModel::score(Tape& t, Var pooled, bool trainable) {
  if (t.value(pooled).cols != profile_.embedding_dim) throw ShapeError("score: pooled dimension mismatch");
  Var h = t.relu(affine(t, pooled, scorer_.weight[0], scorer_.bias[0], trainable));
  h = t.relu(affine(t, h, scorer_.weight[1], scorer_.bias[1], trainable));
  return affine(t, h, scorer_.weight[2], scorer_.bias[2], trainable);
}

Var AhpModel::generate_logits(Tape& t, Var noise, bool trainable) {
  if (t.value(noise).cols != profile_.generator_dims()[0]) throw ShapeError("generate_logits: noise dimension mismatch");
  Var h = t.leaky_relu(affine(t, noise, generator_.weight[0], generator_.bias[0], trainable), 0.01);
  h = t.leaky_relu(affine(t, h, generator_.weight[1], generator_.bias[1], trainable), 0.01);
  return affine(t, h, generator_.weight[2], generator_.bias[2], trainable);
}

Var pool_maxmin(Tape& t, Var embeddings, const NodeSet& s) {
  if (s.empty()) throw InvariantError("pool_maxmin of an empty set");
  Var rows = t.gather_rows(embeddings, s.nodes());
  return t.sub(t.max_rows(rows), t.min_rows(rows));
}

Var gated_pool(Tape& t, Var embeddings, Var logits_row, const NodeSet& s) {
  if (s.empty()) throw InvariantError("gated_pool of an empty set");
  Var rows = t.gather_rows(embeddings, s.nodes());
  Var gates = t.sigmoid(t.transpose(t.gather_cols(logits_row, s.nodes())));
  Var scaled = t.row_scale(rows, gates);
  return t.sub(t.max_rows(scaled), t.min_rows(scaled));
}

NodeSet select_top_k(std::span<const double> logits, std::size_t k) {
  if (k == 0 || k > logits.size())
    throw InvariantError("top-k: k = " + std::to_string(k) + " out of range for " + std::to_string(logits.size()) +
                         " nodes");
  std::vector<NodeId> idx(logits.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](NodeId a, NodeId b) {
    return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
  });
  idx.resize(k);
  return NodeSet(std::move(idx));
}

std::vector<double> score_candidates(AhpModel& model, const StructureOperator& op, const Matrix& features,
                                     std::span<const NodeSet> candidates) {
  if (candidates.empty()) return {};
  Tape t(false);
  Var emb = model.encode(t, op, t.constant(features), false);
  std::vector<Var> pooled;
  pooled.reserve(candidates.size());
  for (const auto& c : candidates) pooled.push_back(pool_maxmin(t, emb, c));
  const Matrix& s = t.value(model.score(t, t.vstack(pooled), false));
  return s.data;
}

Matrix to_matrix(const FeatureMatrix& x) {
  Matrix m(x.rows, x.cols);
  m.data = x.data;
  return m;
}

}  // namespace ahp
