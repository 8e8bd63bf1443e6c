/**
 * @file config.hpp
 * @brief Versioned JSON run configuration, validation and hashing.
 *
 * Example (every key except the dataset paths is optional):
 *
 *   {
 *     "version": 1,
 *     "hyperedges": "data/hyperedges.txt",
 *     "features": "data/features.txt",
 *     "seed": 0,
 *     "output_dir": "runs/seed0",
 *     "variant": "generator",
 *     "negative_source": "full",
 *     "split": {"train": 0.6, "validation": 0.2, "test": 0.2, "mask": 0.1666666666666667},
 *     "model": {"embedding_dim": 400, "layers": 1, "activation": "relu",
 *               "alpha": 0, "beta": 0, "generator_profile": "small"},
 *     "train": {"batch_size": 64, "max_epochs": 400, "disc_lr": 5e-4, "gen_lr": 1e-4,
 *               "memory_size": 32, "clip": 5.0, "snapshot_epochs": [1], "strict_grid": true}
 *   }
 *
 * Unknown keys are errors. With strict_grid the learning rates, memory size
 * and (alpha, beta) must come from the search grids below.
 */
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ahp/model.hpp"
#include "ahp/samplers.hpp"
#include "ahp/trainer.hpp"

namespace ahp {

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kConfigVersion = 1;

inline constexpr std::array<double, 4> kDiscLrGrid = {5e-3, 5e-4, 5e-5, 5e-6};
inline constexpr std::array<double, 4> kGenLrGrid = {1e-4, 1e-5, 1e-6, 1e-7};
inline constexpr std::array<double, 5> kVariantLrGrid = {5e-2, 5e-3, 5e-4, 5e-5, 5e-6};
inline constexpr std::array<std::size_t, 3> kMemoryGrid = {0, 32, 128};
inline constexpr std::size_t kDefaultMaxEpochs = 400;
inline constexpr std::size_t kDefaultVariantMaxEpochs = 200;

struct RunConfig {
  std::filesystem::path hyperedges;
  std::filesystem::path features;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";
  std::optional<SamplerKind> variant;  // empty = generator
  NegativeSource negative_source = NegativeSource::Full;

  std::size_t embedding_dim = 400;
  std::size_t layers = 1;
  Activation activation = Activation::Relu;
  double alpha = 0.0;
  double beta = 0.0;
  GeneratorProfile generator = GeneratorProfile::Small;

  std::size_t batch_size = 64;
  std::optional<std::size_t> max_epochs;  // default depends on the variant
  double disc_lr = 5e-4;
  double gen_lr = 1e-4;
  std::size_t memory_size = 32;
  std::optional<double> clip = 5.0;
  std::vector<std::size_t> snapshot_epochs{1};
  bool strict_grid = true;

  std::size_t effective_max_epochs() const;
  ModelProfile model_profile(std::size_t num_nodes, std::size_t feature_dim) const;
  TrainConfig train_config() const;
};

/// Parses and validates. Relative dataset paths are kept as written.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical form: every field present, keys sorted.
nlohmann::json to_json(const RunConfig& c);

/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& c);

/// FNV-1a over the canonical JSON without output_dir, as 16 hex digits.
std::string config_hash(const RunConfig& c);

/// Hash of the fields that determine the split and frozen negatives only.
std::string split_key(const RunConfig& c);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace ahp
