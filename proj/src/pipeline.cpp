#include "ahp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "ahp/analysis.hpp"
#include "ahp/log.hpp"
#include "ahp/metrics.hpp"

namespace ahp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Child streams of the run seed.
enum Stream : std::uint64_t {
  kSplitStream = 0,
  kModelStream = 1,
  kNegativeStream = 3,
  kAnalysisNoiseStream = 4,
  kAnalysisReplaceStream = 5,
};

json node_lists(const std::vector<NodeSet>& sets) {
  json a = json::array();
  for (const auto& s : sets) a.push_back(s.nodes());
  return a;
}

std::vector<NodeSet> parse_node_lists(const json& a, std::size_t num_nodes, const std::string& where) {
  if (!a.is_array()) throw ParseError(where + " must be a list of node lists");
  std::vector<NodeSet> out;
  out.reserve(a.size());
  for (const auto& e : a) {
    auto ids = e.get<std::vector<NodeId>>();
    for (auto v : ids)
      if (v >= num_nodes) throw ParseError(where + " references node " + std::to_string(v) + " out of range");
    out.emplace_back(std::move(ids));
  }
  return out;
}

void require_key(const json& j, const std::string& key, const std::string& expected, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>() != expected)
    throw ConfigError(what + " does not match the current config (" + key + " " +
                      (it != j.end() && it->is_string() ? it->get<std::string>() : std::string("missing")) +
                      ", expected " + expected + "); rerun the producing command");
}

json auroc_object(const std::array<double, 4>& a) {
  json o;
  for (std::size_t i = 0; i < 4; ++i) o[kSetNames[i]] = a[i];
  return o;
}

json checkpoint_header(const RunConfig& c, const ModelProfile& p, const Checkpoint& ck, const std::string& kind) {
  return {{"config", to_json(c)},
          {"config_hash", config_hash(c)},
          {"split_key", split_key(c)},
          {"kind", kind},
          {"profile",
           {{"num_nodes", p.num_nodes},
            {"feature_dim", p.feature_dim},
            {"embedding_dim", p.embedding_dim},
            {"layers", p.layers},
            {"activation", std::string(to_string(p.activation))},
            {"alpha", p.alpha},
            {"beta", p.beta},
            {"generator_profile", std::string(to_string(p.generator))}}},
          {"epoch", ck.epoch},
          {"val_auroc", auroc_object(ck.val_auroc)},
          {"avg_val_auroc", ck.avg_val_auroc}};
}

void save_checkpoint(const fs::path& path, const RunConfig& c, const ModelProfile& p, const Checkpoint& ck,
                     const std::string& kind, std::map<std::string, AdamState> optimizers = {}) {
  CheckpointFile f;
  f.header_json = checkpoint_header(c, p, ck, kind).dump();
  f.params = ck.params;
  f.optimizers = std::move(optimizers);
  write_checkpoint(path, f);
}

struct Prepared {
  Dataset data;
  SplitBundle bundle;
  FrozenNegatives negatives;
};

Prepared prepare(const RunConfig& c) {
  Prepared p{load_dataset(c), {}, {}};
  const fs::path split = c.output_dir / files::kSplit;
  const fs::path negs = c.output_dir / files::kNegatives;
  if (!fs::exists(split) || !fs::exists(negs))
    throw Error("no split manifest in " + c.output_dir.string() + "; run the split command first");
  const std::string key = split_key(c);
  p.bundle = parse_split_manifest(read_json(split), p.data.hypergraph, key);
  p.negatives = parse_negatives_document(read_json(negs), p.bundle, p.data.hypergraph, key);
  return p;
}

std::string config_echo(const RunConfig& c) { return "\nconfig: " + to_json(c).dump(); }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json histogram(const std::vector<std::uint32_t>& values) {
  std::map<std::uint32_t, std::size_t> counts;
  for (auto v : values) ++counts[v];
  json a = json::array();
  for (const auto& [v, n] : counts) a.push_back({v, n});
  return a;
}

json histograms(const MeasureDistributions& m) {
  return {{"node_degree", histogram(m.node_degrees)},
          {"pair_overlap", histogram(m.pair_overlaps)},
          {"intersection_size", histogram(m.intersection_sizes)}};
}

}  // namespace

std::string files::snapshot(std::size_t epoch) { return "snapshot_epoch_" + std::to_string(epoch) + ".ckpt"; }

Dataset load_dataset(const RunConfig& c) {
  if (!fs::exists(c.hyperedges)) throw Error("hyperedge file not found: " + c.hyperedges.string());
  if (!fs::exists(c.features)) throw Error("feature file not found: " + c.features.string());
  Dataset d{load_hypergraph(c.hyperedges), load_features(c.features)};
  if (d.features.rows != d.hypergraph.num_nodes())
    throw InvariantError("feature file " + c.features.string() + " has " + std::to_string(d.features.rows) +
                         " rows but the hypergraph has " + std::to_string(d.hypergraph.num_nodes()) + " nodes");
  return d;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json split_manifest(const RunConfig& c, const Hypergraph& h, const SplitBundle& b) {
  std::vector<int> mask(b.structure_visible.begin(), b.structure_visible.end());
  return {{"format", "ahp-split"},
          {"version", 1},
          {"config_hash", config_hash(c)},
          {"split_key", split_key(c)},
          {"seed", c.seed},
          {"num_nodes", h.num_nodes()},
          {"num_hyperedges", h.num_edges()},
          {"train", b.train},
          {"validation", b.validation},
          {"test", b.test},
          {"structure_visible", mask}};
}

json negatives_document(const RunConfig& c, const FrozenNegatives& n) {
  json val, test;
  for (std::size_t i = 0; i < 4; ++i) {
    val[kSetNames[i]] = node_lists(n.validation[i]);
    test[kSetNames[i]] = node_lists(n.test[i]);
  }
  return {{"format", "ahp-negatives"},
          {"version", 1},
          {"config_hash", config_hash(c)},
          {"split_key", split_key(c)},
          {"negative_source", std::string(to_string(c.negative_source))},
          {"validation", val},
          {"test", test}};
}

SplitBundle parse_split_manifest(const json& j, const Hypergraph& h, const std::string& expected_key) {
  require_key(j, "split_key", expected_key, "split manifest");
  try {
    if (j.at("num_hyperedges").get<std::size_t>() != h.num_edges() || j.at("num_nodes").get<std::size_t>() != h.num_nodes())
      throw ParseError("split manifest was made for a different hypergraph");
    SplitBundle b;
    b.train = j.at("train").get<std::vector<std::size_t>>();
    b.validation = j.at("validation").get<std::vector<std::size_t>>();
    b.test = j.at("test").get<std::vector<std::size_t>>();
    for (int m : j.at("structure_visible").get<std::vector<int>>()) b.structure_visible.push_back(m != 0);
    std::vector<bool> seen(h.num_edges(), false);
    for (const auto* part : {&b.train, &b.validation, &b.test})
      for (auto e : *part) {
        if (e >= h.num_edges() || seen[e]) throw ParseError("split manifest is not a partition of the hyperedges");
        seen[e] = true;
      }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw ParseError("split manifest is not a partition of the hyperedges");
    if (b.structure_visible.size() != b.train.size()) throw ParseError("split manifest mask length differs from train");
    return b;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed split manifest: ") + e.what());
  }
}

FrozenNegatives parse_negatives_document(const json& j, const SplitBundle& b, const Hypergraph& h,
                                         const std::string& expected_key) {
  require_key(j, "split_key", expected_key, "negative sets");
  FrozenNegatives n;
  try {
    for (std::size_t i = 0; i < 4; ++i) {
      n.validation[i] = parse_node_lists(j.at("validation").at(kSetNames[i]), h.num_nodes(), "validation negatives");
      n.test[i] = parse_node_lists(j.at("test").at(kSetNames[i]), h.num_nodes(), "test negatives");
      if (n.validation[i].size() != b.validation.size() || n.test[i].size() != b.test.size())
        throw ParseError("negative set sizes differ from the positive counts");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed negative sets: ") + e.what());
  }
  return n;
}

SplitSummary cmd_split(const RunConfig& c) {
  const Dataset d = load_dataset(c);
  const SplitBundle b = split_hyperedges(d.hypergraph, derive_seed(c.seed, kSplitStream));
  const FrozenNegatives n =
      freeze_negatives(d.hypergraph, b, derive_seed(c.seed, kNegativeStream), c.negative_source);
  write_json(c.output_dir / files::kSplit, split_manifest(c, d.hypergraph, b));
  write_json(c.output_dir / files::kNegatives, negatives_document(c, n));
  log::info("split: " + std::to_string(b.train.size()) + " train (" + std::to_string(b.num_masked()) +
            " masked), " + std::to_string(b.validation.size()) + " validation, " + std::to_string(b.test.size()) +
            " test");
  return {b.train.size(), b.validation.size(), b.test.size(), b.num_masked()};
}

TrainSummary cmd_train(const RunConfig& c) {
  try {
    Prepared p = prepare(c);
    const TrainingData data(p.data.hypergraph, p.data.features, p.bundle, std::move(p.negatives), c.alpha, c.beta);
    const ModelProfile profile = c.model_profile(p.data.hypergraph.num_nodes(), p.data.features.cols);
    AhpModel model(profile, derive_seed(c.seed, kModelStream));
    const TrainConfig tc = c.train_config();

    fs::create_directories(c.output_dir);
    std::ofstream log_out(c.output_dir / files::kEpochLog, std::ios::binary);
    if (!log_out) throw Error("cannot write " + (c.output_dir / files::kEpochLog).string());
    const std::string hash = config_hash(c);
    auto on_epoch = [&](const EpochLog& e) {
      json line = {{"epoch", e.epoch},
                   {"loss_d", e.loss.loss_d},
                   {"loss_g", e.loss.loss_g},
                   {"mean_pos", e.loss.mean_pos},
                   {"mean_gen", e.loss.mean_gen},
                   {"mean_mem", e.loss.mean_mem},
                   {"val_auroc", auroc_object(e.val_auroc)},
                   {"avg_val_auroc", e.avg_val_auroc},
                   {"config_hash", hash}};
      if (c.variant)
        line["sampler"] = {{"rejection_exhausted", e.loss.sampler.rejection_exhausted},
                           {"mns_stalls", e.loss.sampler.mns_stalls},
                           {"cns_fallbacks", e.loss.sampler.cns_fallbacks},
                           {"scheme_counts", e.loss.sampler.scheme_counts}};
      log_out << line.dump() << '\n';
      log_out.flush();
      log::info("epoch " + std::to_string(e.epoch) + " avg val AUROC " + std::to_string(e.avg_val_auroc));
    };

    Trainer trainer(model, data, tc, c.variant);
    FitResult r;
    try {
      r = trainer.fit(on_epoch);
    } catch (const TrainingDiverged& e) {
      save_checkpoint(c.output_dir / files::kDiverged, c, profile, e.last_good, "diverged");
      throw;
    }
    save_checkpoint(c.output_dir / files::kBest, c, profile, r.best, "best");
    for (const auto& s : r.snapshots) save_checkpoint(c.output_dir / files::snapshot(s.epoch), c, profile, s, "snapshot");
    Checkpoint last{model.params().snapshot(), tc.max_epochs, 0.0, {}};
    if (!r.history.empty()) {
      last.val_auroc = r.history.back().val_auroc;
      last.avg_val_auroc = r.history.back().avg_val_auroc;
    } else {
      last = r.best;
    }
    save_checkpoint(c.output_dir / files::kLast, c, profile, last, "last", r.optimizers);
    return {r.best.epoch, r.best.avg_val_auroc, r.best.val_auroc, r.history.size()};
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + config_echo(c));
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + config_echo(c));
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + config_echo(c));
  }
}

AhpModel load_model(const RunConfig& c, const CheckpointFile& ck, const Dataset& data) {
  json header;
  try {
    header = json::parse(ck.header_json);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint header is not JSON: ") + e.what());
  }
  require_key(header, "config_hash", config_hash(c), "checkpoint");
  const ModelProfile profile = c.model_profile(data.hypergraph.num_nodes(), data.features.cols);
  const json& hp = header.at("profile");
  if (hp.at("num_nodes").get<std::size_t>() != profile.num_nodes ||
      hp.at("feature_dim").get<std::size_t>() != profile.feature_dim ||
      hp.at("embedding_dim").get<std::size_t>() != profile.embedding_dim ||
      hp.at("layers").get<std::size_t>() != profile.layers)
    throw ConfigError("checkpoint model profile differs from the config and dataset");
  AhpModel model(profile, derive_seed(c.seed, kModelStream));
  model.params().restore(ck.params);
  return model;
}

json cmd_eval(const RunConfig& c, const std::optional<fs::path>& checkpoint) {
  const fs::path ck_path = checkpoint.value_or(c.output_dir / files::kBest);
  const CheckpointFile ck = read_checkpoint(ck_path);
  Prepared p = prepare(c);
  AhpModel model = load_model(c, ck, p.data);
  const json header = json::parse(ck.header_json);

  const Hypergraph structure = structure_hypergraph(p.data.hypergraph, p.bundle);
  const StructureOperator op = make_structure_operator(structure, c.alpha, c.beta);
  const Matrix x = to_matrix(p.data.features);
  const auto positives = select_edges(p.data.hypergraph, p.bundle.test);
  const auto pos_scores = score_candidates(model, op, x, positives);

  json report;
  report["format"] = "ahp-eval";
  report["version"] = 1;
  report["config_hash"] = config_hash(c);
  report["seed"] = c.seed;
  report["variant"] = to_json(c)["variant"];
  report["checkpoint_epoch"] = header.at("epoch");
  report["num_test_positives"] = positives.size();
  double sum_auroc = 0.0, sum_ap = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto neg_scores = score_candidates(model, op, x, p.negatives.test[i]);
    const auto s = ScoredExamples::from(pos_scores, neg_scores);
    const double a = auroc(s);
    const ApResult ap = average_precision(s);
    report["test"][kSetNames[i]] = {{"auroc", a}, {"ap", ap.value}, {"ap_ties", ap.had_ties}};
    sum_auroc += a;
    sum_ap += ap.value;
  }
  report["average"] = {{"auroc", sum_auroc / 4.0}, {"ap", sum_ap / 4.0}};
  write_json(c.output_dir / files::kEvalReport, report);
  return report;
}

json cmd_analyze(const RunConfig& c, std::vector<fs::path> snapshots) {
  if (snapshots.empty()) {
    std::vector<std::pair<std::size_t, fs::path>> found;
    const std::regex pattern(R"(snapshot_epoch_(\d+)\.ckpt)");
    if (fs::exists(c.output_dir))
      for (const auto& entry : fs::directory_iterator(c.output_dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) found.emplace_back(std::stoul(m[1].str()), entry.path());
      }
    std::sort(found.begin(), found.end());
    for (auto& f : found) snapshots.push_back(f.second);
    snapshots.push_back(c.output_dir / files::kBest);
  }

  Prepared p = prepare(c);
  const auto train = select_edges(p.data.hypergraph, p.bundle.train);
  const Hypergraph original(p.data.hypergraph.num_nodes(), train);
  const SizeDistribution sizes = size_distribution(train);
  const std::size_t count = (train.size() + 5) / 6;
  const MeasureDistributions orig_m = measure(original);

  json rows = json::array();
  for (const auto& path : snapshots) {
    const CheckpointFile ck = read_checkpoint(path);
    AhpModel model = load_model(c, ck, p.data);
    const json header = json::parse(ck.header_json);
    // Identical noise for every snapshot, so rows differ only by parameters.
    Rng rng = derive_rng(c.seed, kAnalysisNoiseStream);
    const auto negatives = generate_negatives(model, sizes, count, rng);
    const Hypergraph sampled = sampled_hypergraph(original, negatives, derive_seed(c.seed, kAnalysisReplaceStream));
    const MeasureDistributions m = measure(sampled);
    const MeasureComparison d = compare(orig_m, m);
    rows.push_back({{"checkpoint", path.filename().string()},
                    {"epoch", header.at("epoch")},
                    {"d_statistic",
                     {{"node_degree", d.degree},
                      {"pair_overlap", d.pair_overlap},
                      {"intersection_size", d.intersection},
                      {"mean", d.mean()}}},
                    {"sampled", histograms(m)}});
  }
  json report = {{"format", "ahp-analysis"},
                 {"version", 1},
                 {"config_hash", config_hash(c)},
                 {"seed", c.seed},
                 {"replaced_hyperedges", count},
                 {"original", histograms(orig_m)},
                 {"snapshots", rows}};
  write_json(c.output_dir / files::kAnalysisReport, report);
  return report;
}

void cmd_synth(const SynthParams& p, const fs::path& out_dir) {
  const SynthData d = make_planted(p);
  fs::create_directories(out_dir);
  save_hypergraph(d.hypergraph, out_dir / "hyperedges.txt");
  save_features(d.features, out_dir / "features.txt");
  {
    std::ofstream out(out_dir / "communities.txt", std::ios::binary);
    for (auto c : d.community) out << c << '\n';
    if (!out) throw Error("failed writing " + (out_dir / "communities.txt").string());
  }
  json sizes = json::object();
  for (const auto& [k, prob] : p.sizes.probability) sizes[std::to_string(k)] = prob;
  write_json(out_dir / "synth.json", {{"format", "ahp-synth"},
                                      {"version", 1},
                                      {"nodes", p.nodes},
                                      {"edges", p.edges},
                                      {"communities", p.communities},
                                      {"locality", p.locality},
                                      {"noise", p.noise},
                                      {"feature_noise", p.feature_noise},
                                      {"sizes", sizes},
                                      {"seed", p.seed}});
}

json cmd_sweep(const RunConfig& c, const SweepOptions& opt) {
  if (opt.seeds == 0) throw ConfigError("sweep needs at least one seed");
  struct Point {
    double disc_lr, gen_lr;
  };
  std::vector<Point> points;
  if (!opt.lr_grid) {
    points.push_back({c.disc_lr, c.gen_lr});
  } else if (c.variant) {
    for (double d : kVariantLrGrid) points.push_back({d, c.gen_lr});
  } else {
    for (double d : kDiscLrGrid)
      for (double g : kGenLrGrid) points.push_back({d, g});
  }

  json grid = json::array();
  std::size_t best = 0;
  double best_val = -1.0;
  std::vector<json> point_tests;
  for (std::size_t gi = 0; gi < points.size(); ++gi) {
    std::vector<double> val_avg;
    std::map<std::string, std::vector<double>> auroc_by, ap_by;
    for (std::size_t s = 0; s < opt.seeds; ++s) {
      RunConfig run = c;
      run.seed = c.seed + s;
      run.disc_lr = points[gi].disc_lr;
      run.gen_lr = points[gi].gen_lr;
      fs::path dir = c.output_dir;
      if (opt.lr_grid) {
        std::ostringstream name;
        name << "dlr_" << points[gi].disc_lr;
        if (!c.variant) name << "_glr_" << points[gi].gen_lr;
        dir /= name.str();
      }
      run.output_dir = dir / ("seed_" + std::to_string(run.seed));
      cmd_split(run);
      const TrainSummary t = cmd_train(run);
      const json r = cmd_eval(run);
      val_avg.push_back(t.best_avg_val_auroc);
      for (const char* name : kSetNames) {
        auroc_by[name].push_back(r["test"][name]["auroc"].get<double>());
        ap_by[name].push_back(r["test"][name]["ap"].get<double>());
      }
      auroc_by["average"].push_back(r["average"]["auroc"].get<double>());
      ap_by["average"].push_back(r["average"]["ap"].get<double>());
      log::info("sweep: seed " + std::to_string(run.seed) + " test avg AUROC " +
                std::to_string(r["average"]["auroc"].get<double>()));
    }
    json test;
    for (const auto& [name, v] : auroc_by)
      test[name] = {{"auroc_mean", mean_of(v)},
                    {"auroc_std", sample_std(v)},
                    {"ap_mean", mean_of(ap_by[name])},
                    {"ap_std", sample_std(ap_by[name])}};
    const double v = mean_of(val_avg);
    grid.push_back({{"disc_lr", points[gi].disc_lr},
                    {"gen_lr", points[gi].gen_lr},
                    {"val_avg_auroc_mean", v},
                    {"test", test}});
    if (v > best_val) {
      best_val = v;
      best = gi;
    }
  }
  json report = {{"format", "ahp-sweep"},
                 {"version", 1},
                 {"config_hash", config_hash(c)},
                 {"seeds", opt.seeds},
                 {"first_seed", c.seed},
                 {"selected", grid[best]},
                 {"grid", grid}};
  write_json(c.output_dir / files::kSweepReport, report);
  return report;
}

}  // namespace ahp
