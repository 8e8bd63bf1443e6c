/**
 * @file ahp.cpp
 * @brief Command-line entry point: split, train, eval, analyze, synth, sweep.
 *
 * Run settings come from an optional --config JSON file; flags override
 * individual fields. The merged document is validated before any work.
 */
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ahp/log.hpp"
#include "ahp/pipeline.hpp"

using nlohmann::json;

namespace {

/// Flag values that land in the config document when given.
struct Overrides {
  std::optional<std::string> hyperedges, features, output_dir, variant, negative_source, activation, generator;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> embedding_dim, layers, batch_size, max_epochs, memory_size;
  std::optional<double> alpha, beta, disc_lr, gen_lr, clip;
  std::vector<std::size_t> snapshot_epochs;
  bool no_clip = false;
  bool no_strict_grid = false;
  std::string config;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--hyperedges", o.hyperedges, "hyperedge list file");
  cmd->add_option("--features", o.features, "node feature file");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("-o,--output-dir", o.output_dir, "artifact directory");
  cmd->add_option("--variant", o.variant, "generator, sns, mns, cns or mixed");
  cmd->add_option("--negative-source", o.negative_source, "full or structure");
  cmd->add_option("--embedding-dim", o.embedding_dim);
  cmd->add_option("--layers", o.layers);
  cmd->add_option("--activation", o.activation, "relu or leaky_relu");
  cmd->add_option("--alpha", o.alpha);
  cmd->add_option("--beta", o.beta);
  cmd->add_option("--generator-profile", o.generator, "small or large");
  cmd->add_option("--batch-size", o.batch_size);
  cmd->add_option("--max-epochs", o.max_epochs);
  cmd->add_option("--disc-lr", o.disc_lr);
  cmd->add_option("--gen-lr", o.gen_lr);
  cmd->add_option("--memory-size", o.memory_size);
  cmd->add_option("--clip", o.clip, "global gradient-norm bound");
  cmd->add_flag("--no-clip", o.no_clip, "disable gradient clipping");
  cmd->add_option("--snapshot-epochs", o.snapshot_epochs, "epochs whose parameters are saved")->delimiter(',');
  cmd->add_flag("--no-strict-grid", o.no_strict_grid, "allow values outside the search grids");
  // A repeated scalar flag takes its last value, so scripts can append overrides.
  for (auto* opt : cmd->get_options())
    if (opt->get_expected_max() == 1) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

ahp::RunConfig resolve(const Overrides& o) {
  json j = {{"version", ahp::kConfigVersion}};
  if (!o.config.empty()) j = ahp::read_json(o.config);
  put(j, "hyperedges", o.hyperedges);
  put(j, "features", o.features);
  put(j, "seed", o.seed);
  put(j, "output_dir", o.output_dir);
  put(j, "variant", o.variant);
  put(j, "negative_source", o.negative_source);
  json& m = j["model"];
  if (m.is_null()) m = json::object();
  put(m, "embedding_dim", o.embedding_dim);
  put(m, "layers", o.layers);
  put(m, "activation", o.activation);
  put(m, "alpha", o.alpha);
  put(m, "beta", o.beta);
  put(m, "generator_profile", o.generator);
  json& t = j["train"];
  if (t.is_null()) t = json::object();
  put(t, "batch_size", o.batch_size);
  put(t, "max_epochs", o.max_epochs);
  put(t, "disc_lr", o.disc_lr);
  put(t, "gen_lr", o.gen_lr);
  put(t, "memory_size", o.memory_size);
  put(t, "clip", o.clip);
  if (o.no_clip) t["clip"] = nullptr;
  if (!o.snapshot_epochs.empty()) t["snapshot_epochs"] = o.snapshot_epochs;
  if (o.no_strict_grid) t["strict_grid"] = false;
  return ahp::parse_config(j);
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial hyperedge prediction"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only print results and errors");

  Overrides split_o, train_o, eval_o, analyze_o, sweep_o;
  auto* split = app.add_subcommand("split", "split hyperedges and freeze evaluation negatives");
  add_run_flags(split, split_o);
  auto* train = app.add_subcommand("train", "train and write checkpoints and the epoch log");
  add_run_flags(train, train_o);

  auto* eval = app.add_subcommand("eval", "score the frozen test sets");
  add_run_flags(eval, eval_o);
  std::optional<std::string> checkpoint;
  eval->add_option("--checkpoint", checkpoint, "defaults to the best checkpoint")->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "compare generator-sampled and original hypergraphs");
  add_run_flags(analyze, analyze_o);
  std::vector<std::string> snapshots;
  analyze->add_option("--snapshot", snapshots, "checkpoint to analyse (repeatable)")->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth", "write a planted-community dataset");
  ahp::SynthParams sp;
  std::string synth_out = "synth";
  std::map<std::size_t, double> sizes;
  synth->add_option("-o,--output-dir", synth_out);
  synth->add_option("--nodes", sp.nodes, "")->capture_default_str();
  synth->add_option("--edges", sp.edges, "")->capture_default_str();
  synth->add_option("--communities", sp.communities, "")->capture_default_str();
  synth->add_option("--locality", sp.locality, "feature-space neighbourhood radius, 0 for whole community")
      ->capture_default_str();
  synth->add_option("--noise", sp.noise, "per-member cross-community swap probability")->capture_default_str();
  synth->add_option("--feature-noise", sp.feature_noise, "feature noise standard deviation")->capture_default_str();
  synth->add_option("--sizes", sizes, "size:probability pairs, e.g. 2:0.5 3:0.5");
  synth->add_option("--seed", sp.seed, "")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "split, train and eval over consecutive seeds");
  add_run_flags(sweep, sweep_o);
  ahp::SweepOptions so;
  sweep->add_option("--seeds", so.seeds, "number of seeds starting at --seed")->capture_default_str();
  sweep->add_flag("--lr-grid", so.lr_grid, "also sweep learning rates, selecting by validation AUROC");

  CLI11_PARSE(app, argc, argv);
  if (quiet) ahp::log::set_level(ahp::log::Level::Warn);

  try {
    if (*split) {
      const auto s = ahp::cmd_split(resolve(split_o));
      print({{"train", s.train}, {"validation", s.validation}, {"test", s.test}, {"masked", s.masked}});
    } else if (*train) {
      const auto s = ahp::cmd_train(resolve(train_o));
      print({{"best_epoch", s.best_epoch},
             {"best_avg_val_auroc", s.best_avg_val_auroc},
             {"best_val_auroc", s.best_val_auroc},
             {"epochs_run", s.epochs_run}});
    } else if (*eval) {
      std::optional<std::filesystem::path> ck;
      if (checkpoint) ck = *checkpoint;
      print(ahp::cmd_eval(resolve(eval_o), ck));
    } else if (*analyze) {
      print(ahp::cmd_analyze(resolve(analyze_o), {snapshots.begin(), snapshots.end()}));
    } else if (*synth) {
      if (!sizes.empty()) sp.sizes.probability = sizes;
      ahp::cmd_synth(sp, synth_out);
    } else if (*sweep) {
      print(ahp::cmd_sweep(resolve(sweep_o), so));
    }
  } catch (const ahp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
