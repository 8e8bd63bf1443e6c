#include "ahp/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ahp {

using nlohmann::json;

std::size_t RunConfig::effective_max_epochs() const {
  if (max_epochs) return *max_epochs;
  return variant ? kDefaultVariantMaxEpochs : kDefaultMaxEpochs;
}

ModelProfile RunConfig::model_profile(std::size_t num_nodes, std::size_t feature_dim) const {
  ModelProfile p;
  p.num_nodes = num_nodes;
  p.feature_dim = feature_dim;
  p.embedding_dim = embedding_dim;
  p.layers = layers;
  p.activation = activation;
  p.alpha = alpha;
  p.beta = beta;
  p.generator = generator;
  return p;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = batch_size;
  t.max_epochs = effective_max_epochs();
  t.disc_lr = disc_lr;
  t.gen_lr = gen_lr;
  t.memory_capacity = memory_size;
  t.seed = seed;
  t.clip = clip;
  t.snapshot_epochs = snapshot_epochs;
  return t;
}

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type (" + j.type_name() + ")");
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw ConfigError("config field '" + key + "' must be a non-negative integer");
  if (j.is_number_integer() && j.get<std::int64_t>() < 0)
    throw ConfigError("config field '" + key + "' must be a non-negative integer");
  return j.get<std::size_t>();
}

double get_real(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config field '" + key + "' must be a number");
  return j.get<double>();
}

using Handler = std::function<void(const json&)>;

void dispatch(const json& obj, const std::string& where, const std::map<std::string, Handler>& handlers) {
  if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = handlers.find(key);
    const std::string full = where.empty() ? key : where + "." + key;
    if (it == handlers.end()) throw ConfigError("unknown config key '" + full + "'");
    it->second(value);
  }
}

bool in_grid(double x, std::span<const double> grid) {
  return std::any_of(grid.begin(), grid.end(), [x](double g) { return std::abs(x - g) <= 1e-9 * g; });
}

std::string variant_name(const std::optional<SamplerKind>& v) {
  return v ? std::string(to_string(*v)) : std::string("generator");
}

void check_fixed(double value, double expected, const std::string& key) {
  if (std::abs(value - expected) > 1e-9)
    throw ConfigError("config field '" + key + "' is fixed at " + std::to_string(expected));
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig c;
  bool have_version = false;
  dispatch(j, "",
           {
               {"version",
                [&](const json& v) {
                  have_version = true;
                  if (get_count(v, "version") != kConfigVersion)
                    throw ConfigError("unsupported config version (expected " + std::to_string(kConfigVersion) + ")");
                }},
               {"hyperedges", [&](const json& v) { c.hyperedges = get_as<std::string>(v, "hyperedges"); }},
               {"features", [&](const json& v) { c.features = get_as<std::string>(v, "features"); }},
               {"seed", [&](const json& v) { c.seed = get_count(v, "seed"); }},
               {"output_dir", [&](const json& v) { c.output_dir = get_as<std::string>(v, "output_dir"); }},
               {"variant",
                [&](const json& v) {
                  const auto s = get_as<std::string>(v, "variant");
                  if (s == "generator") {
                    c.variant.reset();
                  } else {
                    try {
                      c.variant = sampler_kind_from_string(s);
                    } catch (const Error&) {
                      throw ConfigError("config field 'variant' must be generator, sns, mns, cns or mixed");
                    }
                  }
                }},
               {"negative_source",
                [&](const json& v) {
                  try {
                    c.negative_source = negative_source_from_string(get_as<std::string>(v, "negative_source"));
                  } catch (const ParseError& e) {
                    throw ConfigError(std::string("config field 'negative_source': ") + e.what());
                  }
                }},
               {"split",
                [&](const json& v) {
                  dispatch(v, "split",
                           {{"train", [&](const json& x) { check_fixed(get_real(x, "split.train"), 0.6, "split.train"); }},
                            {"validation",
                             [&](const json& x) {
                               check_fixed(get_real(x, "split.validation"), 0.2, "split.validation");
                             }},
                            {"test", [&](const json& x) { check_fixed(get_real(x, "split.test"), 0.2, "split.test"); }},
                            {"mask",
                             [&](const json& x) { check_fixed(get_real(x, "split.mask"), 1.0 / 6.0, "split.mask"); }}});
                }},
               {"model",
                [&](const json& v) {
                  dispatch(
                      v, "model",
                      {{"embedding_dim", [&](const json& x) { c.embedding_dim = get_count(x, "model.embedding_dim"); }},
                       {"layers", [&](const json& x) { c.layers = get_count(x, "model.layers"); }},
                       {"activation",
                        [&](const json& x) {
                          const auto s = get_as<std::string>(x, "model.activation");
                          if (s == "relu")
                            c.activation = Activation::Relu;
                          else if (s == "leaky_relu")
                            c.activation = Activation::LeakyRelu;
                          else
                            throw ConfigError("config field 'model.activation' must be relu or leaky_relu");
                        }},
                       {"alpha", [&](const json& x) { c.alpha = get_real(x, "model.alpha"); }},
                       {"beta", [&](const json& x) { c.beta = get_real(x, "model.beta"); }},
                       {"generator_profile", [&](const json& x) {
                          const auto s = get_as<std::string>(x, "model.generator_profile");
                          if (s == "small")
                            c.generator = GeneratorProfile::Small;
                          else if (s == "large")
                            c.generator = GeneratorProfile::Large;
                          else
                            throw ConfigError("config field 'model.generator_profile' must be small or large");
                        }}});
                }},
               {"train",
                [&](const json& v) {
                  dispatch(v, "train",
                           {{"batch_size", [&](const json& x) { c.batch_size = get_count(x, "train.batch_size"); }},
                            {"max_epochs", [&](const json& x) { c.max_epochs = get_count(x, "train.max_epochs"); }},
                            {"disc_lr", [&](const json& x) { c.disc_lr = get_real(x, "train.disc_lr"); }},
                            {"gen_lr", [&](const json& x) { c.gen_lr = get_real(x, "train.gen_lr"); }},
                            {"memory_size", [&](const json& x) { c.memory_size = get_count(x, "train.memory_size"); }},
                            {"clip",
                             [&](const json& x) {
                               if (x.is_null())
                                 c.clip.reset();
                               else
                                 c.clip = get_real(x, "train.clip");
                             }},
                            {"snapshot_epochs",
                             [&](const json& x) {
                               if (!x.is_array()) throw ConfigError("config field 'train.snapshot_epochs' must be a list");
                               c.snapshot_epochs.clear();
                               for (const auto& e : x) c.snapshot_epochs.push_back(get_count(e, "train.snapshot_epochs"));
                             }},
                            {"strict_grid",
                             [&](const json& x) { c.strict_grid = get_as<bool>(x, "train.strict_grid"); }}});
                }},
           });
  if (!have_version) throw ConfigError("config is missing 'version'");
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void validate(const RunConfig& c) {
  if (c.hyperedges.empty()) throw ConfigError("config field 'hyperedges' is required");
  if (c.features.empty()) throw ConfigError("config field 'features' is required");
  if (c.output_dir.empty()) throw ConfigError("config field 'output_dir' must not be empty");
  if (c.embedding_dim == 0) throw ConfigError("config field 'model.embedding_dim' must be positive");
  if (c.layers == 0) throw ConfigError("config field 'model.layers' must be positive");
  if (!std::isfinite(c.alpha) || !std::isfinite(c.beta)) throw ConfigError("model.alpha and model.beta must be finite");
  if (c.batch_size == 0) throw ConfigError("config field 'train.batch_size' must be positive");
  if (!(c.disc_lr > 0.0) || !std::isfinite(c.disc_lr)) throw ConfigError("config field 'train.disc_lr' must be positive");
  if (!(c.gen_lr > 0.0) || !std::isfinite(c.gen_lr)) throw ConfigError("config field 'train.gen_lr' must be positive");
  if (c.clip && !(*c.clip > 0.0)) throw ConfigError("config field 'train.clip' must be positive or null");
  if (!c.strict_grid) return;

  if (c.variant) {
    if (!in_grid(c.disc_lr, kVariantLrGrid))
      throw ConfigError("train.disc_lr is outside the variant grid {5e-2, 5e-3, 5e-4, 5e-5, 5e-6}");
  } else {
    if (!in_grid(c.disc_lr, kDiscLrGrid))
      throw ConfigError("train.disc_lr is outside the grid {5e-3, 5e-4, 5e-5, 5e-6}");
    if (!in_grid(c.gen_lr, kGenLrGrid)) throw ConfigError("train.gen_lr is outside the grid {1e-4, 1e-5, 1e-6, 1e-7}");
    if (std::find(kMemoryGrid.begin(), kMemoryGrid.end(), c.memory_size) == kMemoryGrid.end())
      throw ConfigError("train.memory_size must be 0, 32 or 128");
  }
  const bool ab_ok = (c.alpha == 0.0 && c.beta == 0.0) || (c.alpha == 1.0 && c.beta == 1.0);
  if (!ab_ok) throw ConfigError("(model.alpha, model.beta) must be (0, 0) or (1, 1)");
  const std::size_t cap = c.variant ? kDefaultVariantMaxEpochs : kDefaultMaxEpochs;
  if (c.effective_max_epochs() > cap)
    throw ConfigError("train.max_epochs exceeds the maximum of " + std::to_string(cap));
}

json to_json(const RunConfig& c) {
  json j;
  j["version"] = kConfigVersion;
  j["hyperedges"] = c.hyperedges.generic_string();
  j["features"] = c.features.generic_string();
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.generic_string();
  j["variant"] = variant_name(c.variant);
  j["negative_source"] = std::string(to_string(c.negative_source));
  j["split"] = {{"train", 0.6}, {"validation", 0.2}, {"test", 0.2}, {"mask", 1.0 / 6.0}};
  j["model"] = {{"embedding_dim", c.embedding_dim},
                {"layers", c.layers},
                {"activation", std::string(to_string(c.activation))},
                {"alpha", c.alpha},
                {"beta", c.beta},
                {"generator_profile", std::string(to_string(c.generator))}};
  j["train"] = {{"batch_size", c.batch_size},
                {"max_epochs", c.effective_max_epochs()},
                {"disc_lr", c.disc_lr},
                {"gen_lr", c.gen_lr},
                {"memory_size", c.memory_size},
                {"clip", c.clip ? json(*c.clip) : json(nullptr)},
                {"snapshot_epochs", c.snapshot_epochs},
                {"strict_grid", c.strict_grid}};
  return j;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

std::string split_key(const RunConfig& c) {
  const json j = {{"version", kConfigVersion},
                  {"hyperedges", c.hyperedges.generic_string()},
                  {"features", c.features.generic_string()},
                  {"seed", c.seed},
                  {"negative_source", std::string(to_string(c.negative_source))}};
  return fnv1a_hex(j.dump());
}

}  // namespace ahp
