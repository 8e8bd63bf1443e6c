/**
 * @file model.hpp
 * @brief HNHN encoder, maxmin candidate scorer and noise-to-membership generator.
 *
 * The encoder alternates node-to-hyperedge and hyperedge-to-node aggregation:
 *
 *   X_E = act(P_E X_V W_V + b_V),   X_V = act(P_V X_E W_E + b_E)
 *
 * where P_E averages the nodes of each hyperedge with weights deg(v)^beta and
 * P_V averages the hyperedges of each node with weights |e|^alpha. With
 * alpha = beta = 0 both are plain means.
 */
#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ahp/autodiff.hpp"
#include "ahp/hypergraph.hpp"

namespace ahp {

enum class Activation { Relu, LeakyRelu };
enum class GeneratorProfile { Small, Large };

std::string_view to_string(Activation a);
std::string_view to_string(GeneratorProfile g);

struct ModelProfile {
  std::size_t num_nodes = 0;
  std::size_t feature_dim = 0;
  std::size_t embedding_dim = 400;
  std::size_t layers = 1;
  Activation activation = Activation::Relu;
  double alpha = 0.0;
  double beta = 0.0;
  GeneratorProfile generator = GeneratorProfile::Small;

  /// Generator widths [noise, hidden, hidden, num_nodes].
  std::array<std::size_t, 4> generator_dims() const;
  friend bool operator==(const ModelProfile&, const ModelProfile&) = default;
};

/// Row-normalized aggregation operators for one structure hypergraph.
struct StructureOperator {
  std::shared_ptr<const SparseOperator> node_to_edge;  // |E| x |V|
  std::shared_ptr<const SparseOperator> edge_to_node;  // |V| x |E|
  std::size_t num_nodes = 0;
};

StructureOperator make_structure_operator(const Hypergraph& structure, double alpha, double beta);

struct EncoderLayerParams {
  Parameter* w_v;
  Parameter* b_v;
  Parameter* w_e;
  Parameter* b_e;
};

/// Affine layers [emb, 128], [128, 8], [8, 1].
struct ScorerParams {
  std::array<Parameter*, 3> weight;
  std::array<Parameter*, 3> bias;
};

/// Affine layers following ModelProfile::generator_dims().
struct GeneratorParams {
  std::array<Parameter*, 3> weight;
  std::array<Parameter*, 3> bias;
};

class AhpModel {
 public:
  /// Parameters use U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  AhpModel(const ModelProfile& profile, std::uint64_t seed);

  const ModelProfile& profile() const { return profile_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Encoder plus scorer.
  std::vector<Parameter*> discriminator_params();
  std::vector<Parameter*> generator_params();

  /// Node embeddings X_V^(L), num_nodes x embedding_dim.
  Var encode(Tape& t, const StructureOperator& op, Var features, bool trainable);
  /// One score per row of `pooled`; output is rows x 1, no squashing.
  Var score(Tape& t, Var pooled, bool trainable);
  /// One logit per node for each noise row; output is rows x num_nodes.
  Var generate_logits(Tape& t, Var noise, bool trainable);

 private:
  ModelProfile profile_;
  ParamStore params_;
  std::vector<EncoderLayerParams> encoder_;
  ScorerParams scorer_{};
  GeneratorParams generator_{};
};

/// Elementwise max minus elementwise min over the rows of s. 1 x dim.
Var pool_maxmin(Tape& t, Var embeddings, const NodeSet& s);

/// As pool_maxmin, with row v scaled by logistic(logits(0, v)) first.
/// `logits_row` is 1 x num_nodes.
Var gated_pool(Tape& t, Var embeddings, Var logits_row, const NodeSet& s);

/// The k highest logits; ties go to the lower node id.
NodeSet select_top_k(std::span<const double> logits, std::size_t k);

/// Scores for a list of candidates with frozen parameters.
std::vector<double> score_candidates(AhpModel& model, const StructureOperator& op, const Matrix& features,
                                     std::span<const NodeSet> candidates);

Matrix to_matrix(const FeatureMatrix& x);

}  // namespace ahp
