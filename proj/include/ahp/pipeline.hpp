/**
 * @file pipeline.hpp
 * @brief The split / train / eval / analyze / synth / sweep commands.
 *
 * Every command reads a RunConfig and writes under its output_dir:
 *
 *   split.json            split manifest (edge indices per split, mask)
 *   negatives.json        frozen validation/test negatives per scheme
 *   epochs.jsonl          one JSON object per training epoch
 *   checkpoint_best.ckpt  parameters at the best average validation AUROC
 *   checkpoint_last.ckpt  final parameters and optimizer state
 *   snapshot_epoch_N.ckpt parameters after epoch N (train.snapshot_epochs)
 *   eval_report.json      test AUROC/AP per scheme and averages
 *   analysis_report.json  measure distributions and D-statistics per snapshot
 *
 * All of them carry the config hash; split artifacts also carry the split
 * key so that runs differing only in training settings can share a split.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"

#include "ahp/checkpoint.hpp"
#include "ahp/config.hpp"
#include "ahp/synth.hpp"
#include "ahp/trainer.hpp"

namespace ahp {

namespace files {
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kNegatives = "negatives.json";
inline constexpr const char* kEpochLog = "epochs.jsonl";
inline constexpr const char* kBest = "checkpoint_best.ckpt";
inline constexpr const char* kLast = "checkpoint_last.ckpt";
inline constexpr const char* kDiverged = "checkpoint_diverged.ckpt";
inline constexpr const char* kEvalReport = "eval_report.json";
inline constexpr const char* kAnalysisReport = "analysis_report.json";
inline constexpr const char* kSweepReport = "sweep_report.json";
std::string snapshot(std::size_t epoch);
}  // namespace files

/// Report names of the four evaluation sets, in kEvalKinds order.
inline constexpr std::array<const char*, 4> kSetNames = {"sns", "mns", "cns", "mixed"};

struct Dataset {
  Hypergraph hypergraph;
  FeatureMatrix features;
};

/// Loads both files; errors name the missing or malformed path.
Dataset load_dataset(const RunConfig& c);

nlohmann::json split_manifest(const RunConfig& c, const Hypergraph& h, const SplitBundle& b);
nlohmann::json negatives_document(const RunConfig& c, const FrozenNegatives& n);
SplitBundle parse_split_manifest(const nlohmann::json& j, const Hypergraph& h, const std::string& expected_key);
FrozenNegatives parse_negatives_document(const nlohmann::json& j, const SplitBundle& b, const Hypergraph& h,
                                         const std::string& expected_key);

/// Pretty JSON followed by a newline; creates parent directories.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

struct SplitSummary {
  std::size_t train = 0, validation = 0, test = 0, masked = 0;
};
SplitSummary cmd_split(const RunConfig& c);

struct TrainSummary {
  std::size_t best_epoch = 0;
  double best_avg_val_auroc = 0.0;
  std::array<double, 4> best_val_auroc{};
  std::size_t epochs_run = 0;
};
TrainSummary cmd_train(const RunConfig& c);

/// `checkpoint` defaults to output_dir/checkpoint_best.ckpt.
nlohmann::json cmd_eval(const RunConfig& c, const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

/// `snapshots` defaults to every snapshot_epoch_N.ckpt in output_dir (by N)
/// followed by checkpoint_best.ckpt.
nlohmann::json cmd_analyze(const RunConfig& c, std::vector<std::filesystem::path> snapshots = {});

/// Writes hyperedges.txt, features.txt, communities.txt and synth.json.
void cmd_synth(const SynthParams& p, const std::filesystem::path& out_dir);

struct SweepOptions {
  std::size_t seeds = 5;
  bool lr_grid = false;  // also sweep the learning-rate grid and select by validation
};
/// split + train + eval for each seed (and grid point); aggregates test
/// metrics as mean and sample standard deviation.
nlohmann::json cmd_sweep(const RunConfig& c, const SweepOptions& opt);

/// Model with the checkpoint's parameters after checking it against `c`.
AhpModel load_model(const RunConfig& c, const CheckpointFile& ck, const Dataset& data);

}  // namespace ahp
