#include "ahp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ahp/metrics.hpp"

namespace ahp {

double discriminator_loss(std::span<const double> pos, std::span<const double> gen, std::span<const double> mem) {
  if (pos.empty()) throw InvariantError("discriminator loss needs at least one positive");
  if (gen.empty() && mem.empty()) throw InvariantError("discriminator loss needs at least one negative");
  const double pos_mean = std::accumulate(pos.begin(), pos.end(), 0.0) / static_cast<double>(pos.size());
  const double neg_sum = std::accumulate(gen.begin(), gen.end(), 0.0) + std::accumulate(mem.begin(), mem.end(), 0.0);
  return -pos_mean + neg_sum / static_cast<double>(gen.size() + mem.size());
}

double generator_loss(std::span<const double> gen) {
  if (gen.empty()) throw InvariantError("generator loss of an empty batch");
  return -std::accumulate(gen.begin(), gen.end(), 0.0) / static_cast<double>(gen.size());
}

Var discriminator_loss(Tape& t, Var pos, Var gen, std::optional<Var> mem) {
  Var negs = gen;
  if (mem) {
    const Var parts[2] = {gen, *mem};
    negs = t.vstack(parts);
  }
  return t.sub(t.mean(negs), t.mean(pos));
}

Var generator_loss(Tape& t, Var gen) { return t.neg(t.mean(gen)); }

MemoryBank update_memory(const MemoryBank& bank, std::span<const MemoryEntry> candidates) {
  MemoryBank out;
  out.capacity = bank.capacity;
  if (bank.capacity == 0) return out;
  std::vector<MemoryEntry> all = bank.entries;
  all.insert(all.end(), candidates.begin(), candidates.end());
  std::stable_sort(all.begin(), all.end(), [](const MemoryEntry& a, const MemoryEntry& b) { return a.score > b.score; });
  if (all.size() > bank.capacity) all.resize(bank.capacity);
  out.entries = std::move(all);
  return out;
}

// ---------------------------------------------------------------------------

SamplerContext make_sampler_context(const Hypergraph& h, const SplitBundle& b, std::uint64_t seed) {
  const auto train = select_edges(h, b.train);
  return SamplerContext(structure_hypergraph(h, b), size_distribution(train), observed_positives(h, b), seed);
}

std::string_view to_string(NegativeSource s) { return s == NegativeSource::Full ? "full" : "structure"; }

NegativeSource negative_source_from_string(std::string_view s) {
  if (s == "full") return NegativeSource::Full;
  if (s == "structure") return NegativeSource::Structure;
  throw ParseError("unknown negative source '" + std::string(s) + "' (expected full or structure)");
}

FrozenNegatives freeze_negatives(const Hypergraph& h, const SplitBundle& b, std::uint64_t seed,
                                 NegativeSource source) {
  SamplerContext ctx(source == NegativeSource::Full ? h : structure_hypergraph(h, b), size_distribution(h.hyperedges()),
                     observed_positives(h, b), seed);
  FrozenNegatives out;
  for (std::size_t i = 0; i < kEvalKinds.size(); ++i) {
    ctx.rng = derive_rng(seed, 100 + i);
    out.validation[i] = sample_batch(ctx, kEvalKinds[i], b.validation.size());
    ctx.rng = derive_rng(seed, 200 + i);
    out.test[i] = sample_batch(ctx, kEvalKinds[i], b.test.size());
  }
  return out;
}

TrainingData::TrainingData(const Hypergraph& h, const FeatureMatrix& x, const SplitBundle& b,
                           FrozenNegatives negs, double alpha, double beta)
    : full(h),
      bundle(b),
      structure(structure_hypergraph(h, b)),
      op(make_structure_operator(structure, alpha, beta)),
      features(to_matrix(x)),
      train_positives(select_edges(h, b.train)),
      validation_positives(select_edges(h, b.validation)),
      test_positives(select_edges(h, b.test)),
      negatives(std::move(negs)) {
  if (x.rows != h.num_nodes())
    throw InvariantError("feature rows (" + std::to_string(x.rows) + ") differ from node count (" +
                         std::to_string(h.num_nodes()) + ")");
  for (std::size_t i = 0; i < 4; ++i)
    if (negatives.validation[i].size() != validation_positives.size() ||
        negatives.test[i].size() != test_positives.size())
      throw InvariantError("frozen negative sets must match the positive counts");
}

// ---------------------------------------------------------------------------

Matrix gaussian_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix z(rows, cols);
  for (double& x : z.data) x = dist(rng);
  return z;
}

std::vector<NodeSet> generate_negatives(AhpModel& model, const SizeDistribution& sizes, std::size_t n, Rng& rng) {
  std::vector<NodeSet> out;
  if (n == 0) return out;
  std::vector<std::size_t> ks(n);
  for (auto& k : ks) k = draw_size(sizes, rng);
  Matrix z = gaussian_noise(n, model.profile().generator_dims()[0], rng);
  Tape t(false);
  const Matrix& logits = t.value(model.generate_logits(t, t.constant(std::move(z)), false));
  for (std::size_t j = 0; j < n; ++j) out.push_back(select_top_k(logits.row(j), ks[j]));
  return out;
}

Trainer::Trainer(AhpModel& model, const TrainingData& data, const TrainConfig& cfg,
                 std::optional<SamplerKind> heuristic)
    : model_(model),
      data_(data),
      cfg_(cfg),
      heuristic_(heuristic),
      sampler_(data.structure, size_distribution(data.train_positives),
               observed_positives(data.full, data.bundle), derive_seed(cfg.seed, 6)),
      sizes_(size_distribution(data.train_positives)),
      rng_(derive_rng(cfg.seed, 2)),
      disc_params_(model.discriminator_params()),
      gen_params_(model.generator_params()) {
  if (cfg.batch_size == 0) throw InvariantError("batch size must be positive");
  memory_.capacity = heuristic ? 0 : cfg.memory_capacity;
  for (auto& [name, p] : model_.params()) p.zero_grad();
}

void Trainer::train_batch(std::span<const NodeSet> positives, LossReport& acc) {
  const std::size_t n = positives.size();

  // Negatives for this batch.
  std::vector<NodeSet> negatives;
  Matrix logits;
  Matrix noise;
  if (heuristic_) {
    negatives = sample_batch(sampler_, *heuristic_, n);
  } else {
    std::vector<std::size_t> ks(n);
    for (auto& k : ks) k = draw_size(sizes_, rng_);
    noise = gaussian_noise(n, model_.profile().generator_dims()[0], rng_);
    Tape g(false);
    logits = g.value(model_.generate_logits(g, g.constant(noise), false));
    for (std::size_t j = 0; j < n; ++j) negatives.push_back(select_top_k(logits.row(j), ks[j]));
  }
  const std::vector<MemoryEntry> bank = memory_.entries;
  const std::size_t m = bank.size();

  // Discriminator step.
  std::vector<double> scores;
  double loss_d = 0.0;
  {
    Tape t;
    Var emb = model_.encode(t, data_.op, t.constant(data_.features), true);
    std::vector<Var> pooled;
    pooled.reserve(2 * n + m);
    for (const auto& s : positives) pooled.push_back(pool_maxmin(t, emb, s));
    for (std::size_t j = 0; j < n; ++j) {
      if (heuristic_) {
        pooled.push_back(pool_maxmin(t, emb, negatives[j]));
      } else {
        Matrix row(1, logits.cols);
        std::copy(logits.row(j).begin(), logits.row(j).end(), row.data.begin());
        pooled.push_back(gated_pool(t, emb, t.constant(std::move(row)), negatives[j]));
      }
    }
    for (const auto& e : bank) pooled.push_back(pool_maxmin(t, emb, e.nodes));
    Var all = model_.score(t, t.vstack(pooled), true);

    auto range = [](std::size_t lo, std::size_t hi) {
      std::vector<std::uint32_t> r(hi - lo);
      std::iota(r.begin(), r.end(), static_cast<std::uint32_t>(lo));
      return r;
    };
    Var pos = t.gather_rows(all, range(0, n));
    Var gen = t.gather_rows(all, range(n, 2 * n));
    std::optional<Var> mem;
    if (m > 0) mem = t.gather_rows(all, range(2 * n, 2 * n + m));
    Var loss = discriminator_loss(t, pos, gen, mem);
    scores = t.value(all).data;
    loss_d = t.scalar(loss);
    t.backward(loss);
  }
  adam_step(disc_params_, disc_opt_, cfg_.disc_lr, cfg_.clip);

  const std::span<const double> pos_scores(scores.data(), n);
  const std::span<const double> gen_scores(scores.data() + n, n);
  const std::span<const double> mem_scores(scores.data() + 2 * n, m);

  // Generator step with the discriminator frozen.
  double loss_g = generator_loss(gen_scores);
  if (!heuristic_) {
    Tape t;
    Var emb = model_.encode(t, data_.op, t.constant(data_.features), false);
    Var lg = model_.generate_logits(t, t.constant(noise), true);
    std::vector<Var> pooled;
    pooled.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint32_t row[1] = {static_cast<std::uint32_t>(j)};
      pooled.push_back(gated_pool(t, emb, t.gather_rows(lg, row), negatives[j]));
    }
    Var loss = generator_loss(t, model_.score(t, t.vstack(pooled), false));
    loss_g = t.scalar(loss);
    t.backward(loss);
    adam_step(gen_params_, gen_opt_, cfg_.gen_lr, cfg_.clip);
  }

  // Memory: this iteration's scores of the previous bank and the new negatives.
  if (memory_.capacity > 0) {
    std::vector<MemoryEntry> candidates;
    candidates.reserve(m + n);
    for (std::size_t i = 0; i < m; ++i) candidates.push_back({bank[i].nodes, mem_scores[i]});
    for (std::size_t j = 0; j < n; ++j) candidates.push_back({negatives[j], gen_scores[j]});
    memory_ = update_memory(MemoryBank{memory_.capacity, {}}, candidates);
  }

  if (!std::isfinite(loss_d) || !std::isfinite(loss_g)) throw NumericError("non-finite loss");
  auto mean = [](std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  acc.loss_d += loss_d;
  acc.loss_g += loss_g;
  acc.mean_pos += mean(pos_scores);
  acc.mean_gen += mean(gen_scores);
  acc.mean_mem += mean(mem_scores);
  ++acc.batches;
}

LossReport Trainer::train_epoch() {
  LossReport r;
  const auto& train = data_.train_positives;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng_, i)]);
  const SamplerStats before = sampler_.stats;
  std::vector<NodeSet> batch;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    batch.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + cfg_.batch_size); ++i)
      batch.push_back(train[order[i]]);
    train_batch(batch, r);
  }
  if (r.batches > 0) {
    const double b = static_cast<double>(r.batches);
    r.loss_d /= b;
    r.loss_g /= b;
    r.mean_pos /= b;
    r.mean_gen /= b;
    r.mean_mem /= b;
  }
  r.sampler = sampler_.stats;
  r.sampler.rejection_exhausted -= before.rejection_exhausted;
  r.sampler.mns_stalls -= before.mns_stalls;
  r.sampler.cns_fallbacks -= before.cns_fallbacks;
  for (std::size_t i = 0; i < 3; ++i) r.sampler.scheme_counts[i] -= before.scheme_counts[i];
  return r;
}

std::array<double, 4> Trainer::validate() {
  std::vector<NodeSet> all = data_.validation_positives;
  for (const auto& negs : data_.negatives.validation) all.insert(all.end(), negs.begin(), negs.end());
  const auto scores = score_candidates(model_, data_.op, data_.features, all);
  const std::size_t np = data_.validation_positives.size();
  const std::span<const double> pos(scores.data(), np);
  std::array<double, 4> out{};
  std::size_t off = np;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t nn = data_.negatives.validation[i].size();
    out[i] = auroc(ScoredExamples::from(pos, std::span<const double>(scores.data() + off, nn)));
    off += nn;
  }
  return out;
}

namespace {

double average(const std::array<double, 4>& a) { return (a[0] + a[1] + a[2] + a[3]) / 4.0; }

}  // namespace

FitResult Trainer::fit(const std::function<void(const EpochLog&)>& on_epoch) {
  FitResult result;
  auto checkpoint_now = [&](std::size_t epoch, const std::array<double, 4>& val) {
    return Checkpoint{model_.params().snapshot(), epoch, average(val), val};
  };

  auto val0 = validate();
  result.best = checkpoint_now(0, val0);
  Checkpoint last_good = result.best;
  for (std::size_t epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    try {
      log.loss = train_epoch();
    } catch (const NumericError& e) {
      throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch) + ": " + e.what(),
                             std::move(last_good));
    }
    log.val_auroc = validate();
    log.avg_val_auroc = average(log.val_auroc);
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);

    const bool snap = std::find(cfg_.snapshot_epochs.begin(), cfg_.snapshot_epochs.end(), epoch) !=
                      cfg_.snapshot_epochs.end();
    if (log.avg_val_auroc > result.best.avg_val_auroc || snap) {
      auto ck = checkpoint_now(epoch, log.val_auroc);
      if (snap) result.snapshots.push_back(ck);
      if (log.avg_val_auroc > result.best.avg_val_auroc) result.best = std::move(ck);
    }
    last_good = Checkpoint{model_.params().snapshot(), epoch, log.avg_val_auroc, log.val_auroc};
  }
  result.optimizers["discriminator"] = disc_opt_;
  if (!heuristic_) result.optimizers["generator"] = gen_opt_;
  return result;
}

FitResult fit(AhpModel& model, const TrainingData& data, const TrainConfig& cfg,
              const std::function<void(const EpochLog&)>& on_epoch) {
  Trainer t(model, data, cfg);
  return t.fit(on_epoch);
}

FitResult heuristic_fit(AhpModel& model, const TrainingData& data, const TrainConfig& cfg, SamplerKind kind,
                        const std::function<void(const EpochLog&)>& on_epoch) {
  Trainer t(model, data, cfg, kind);
  return t.fit(on_epoch);
}

}  // namespace ahp
