/**
 * @file trainer.hpp
 * @brief Adversarial generator/discriminator training with a memory bank of
 *        hard negatives, heuristic-sampler variants, and validation-driven
 *        checkpoint selection.
 */
#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ahp/adam.hpp"
#include "ahp/model.hpp"
#include "ahp/samplers.hpp"

namespace ahp {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_epochs = 400;
  double disc_lr = 5e-4;
  double gen_lr = 1e-4;
  std::size_t memory_capacity = 32;
  std::uint64_t seed = 0;
  std::optional<double> clip = 5.0;
  std::vector<std::size_t> snapshot_epochs;  // epochs whose parameters are kept in FitResult
};

// ---------------------------------------------------------------------------
// Losses

/// -mean(pos) + (sum(gen) + sum(mem)) / (|gen| + |mem|).
double discriminator_loss(std::span<const double> pos, std::span<const double> gen, std::span<const double> mem);
/// -mean(gen).
double generator_loss(std::span<const double> gen);

/// Tape versions of the two losses; score inputs are n x 1. `mem` may be null.
Var discriminator_loss(Tape& t, Var pos, Var gen, std::optional<Var> mem);
Var generator_loss(Tape& t, Var gen);

// ---------------------------------------------------------------------------
// Memory bank

struct MemoryEntry {
  NodeSet nodes;
  double score = 0.0;
};

struct MemoryBank {
  std::size_t capacity = 0;
  std::vector<MemoryEntry> entries;
};

/// Keeps the `capacity` highest-scoring of bank.entries followed by
/// candidates; equal scores keep the earlier one.
MemoryBank update_memory(const MemoryBank& bank, std::span<const MemoryEntry> candidates);

// ---------------------------------------------------------------------------
// Data

/// Order of the four evaluation sets everywhere: SNS, MNS, CNS, MIXED.
inline constexpr std::array<SamplerKind, 4> kEvalKinds = {SamplerKind::SNS, SamplerKind::MNS, SamplerKind::CNS,
                                                          SamplerKind::MIXED};

/// Negatives for the validation and test sets, one list per kEvalKinds entry,
/// each as long as the corresponding positive list.
struct FrozenNegatives {
  std::array<std::vector<NodeSet>, 4> validation;
  std::array<std::vector<NodeSet>, 4> test;
};

/// Sampler context over the structure hypergraph, sized by train positives,
/// rejecting every positive of the bundle. Used for training-time negatives.
SamplerContext make_sampler_context(const Hypergraph& h, const SplitBundle& b, std::uint64_t seed);

/// Hypergraph whose clique expansion the frozen MNS/CNS sets are drawn from:
/// the whole input, or only the encoder-visible train edges.
enum class NegativeSource { Full, Structure };

std::string_view to_string(NegativeSource s);
NegativeSource negative_source_from_string(std::string_view s);

/// Sizes follow the whole input's size distribution; every positive of the
/// bundle is rejected.
FrozenNegatives freeze_negatives(const Hypergraph& h, const SplitBundle& b, std::uint64_t seed,
                                 NegativeSource source = NegativeSource::Full);

struct TrainingData {
  TrainingData(const Hypergraph& h, const FeatureMatrix& x, const SplitBundle& b, FrozenNegatives negatives,
               double alpha, double beta);

  Hypergraph full;
  SplitBundle bundle;
  Hypergraph structure;
  StructureOperator op;
  Matrix features;
  std::vector<NodeSet> train_positives;
  std::vector<NodeSet> validation_positives;
  std::vector<NodeSet> test_positives;
  FrozenNegatives negatives;
};

// ---------------------------------------------------------------------------
// Training

struct LossReport {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double mean_pos = 0.0;
  double mean_gen = 0.0;
  double mean_mem = 0.0;
  std::size_t batches = 0;
  SamplerStats sampler;  // heuristic variants only
};

struct Checkpoint {
  std::map<std::string, Matrix> params;
  std::size_t epoch = 0;
  double avg_val_auroc = 0.0;
  std::array<double, 4> val_auroc{};
};

struct EpochLog {
  std::size_t epoch = 0;
  LossReport loss;
  std::array<double, 4> val_auroc{};
  double avg_val_auroc = 0.0;
};

struct FitResult {
  Checkpoint best;
  std::vector<EpochLog> history;
  std::vector<Checkpoint> snapshots;
  std::map<std::string, AdamState> optimizers;
};

/// A loss became non-finite. Carries the parameters of the last completed epoch.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, Checkpoint last) : NumericError(what), last_good(std::move(last)) {}
  Checkpoint last_good;
};

class Trainer {
 public:
  /// With `heuristic` set, negatives come from that sampler and the generator
  /// is never updated; otherwise the generator supplies them.
  Trainer(AhpModel& model, const TrainingData& data, const TrainConfig& cfg,
          std::optional<SamplerKind> heuristic = std::nullopt);

  /// One pass over the train positives in shuffled batches. Per batch: one
  /// discriminator Adam step, then (generator mode) one generator Adam step
  /// with the discriminator frozen, then the memory update.
  LossReport train_epoch();

  /// AUROC on the four frozen validation sets.
  std::array<double, 4> validate();

  /// Up to cfg.max_epochs epochs; returns the parameters with the best
  /// average validation AUROC (epoch 0 = initial parameters included).
  FitResult fit(const std::function<void(const EpochLog&)>& on_epoch = {});

  const MemoryBank& memory() const { return memory_; }
  const AdamState& disc_optimizer() const { return disc_opt_; }
  const AdamState& gen_optimizer() const { return gen_opt_; }

 private:
  void train_batch(std::span<const NodeSet> positives, LossReport& acc);

  AhpModel& model_;
  const TrainingData& data_;
  TrainConfig cfg_;
  std::optional<SamplerKind> heuristic_;
  SamplerContext sampler_;
  SizeDistribution sizes_;
  Rng rng_;
  MemoryBank memory_;
  AdamState disc_opt_;
  AdamState gen_opt_;
  std::vector<Parameter*> disc_params_;
  std::vector<Parameter*> gen_params_;
};

FitResult fit(AhpModel& model, const TrainingData& data, const TrainConfig& cfg,
              const std::function<void(const EpochLog&)>& on_epoch = {});
FitResult heuristic_fit(AhpModel& model, const TrainingData& data, const TrainConfig& cfg, SamplerKind kind,
                        const std::function<void(const EpochLog&)>& on_epoch = {});

/// Standard-normal noise, rows x cols.
Matrix gaussian_noise(std::size_t rows, std::size_t cols, Rng& rng);

/// Generator negatives with frozen parameters: sizes from `sizes`, Gaussian
/// noise, top-k selection.
std::vector<NodeSet> generate_negatives(AhpModel& model, const SizeDistribution& sizes, std::size_t n, Rng& rng);

}  // namespace ahp
