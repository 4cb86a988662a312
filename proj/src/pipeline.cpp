#include "censurv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "censurv/rng.hpp"

namespace censurv::pipeline {

using modality::kNumModalities;

TrainConfig TrainConfig::desk() {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;  // paper's 3e-5 is tuned for its scale; desk runs need to converge in 30 epochs
  cfg.preheat_epochs = 15;
  cfg.total_epochs = 30;
  cfg.d_model = 32;
  cfg.d_z = 16;
  return cfg;
}

void TrainConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0) throw_validation("TrainConfig: alpha and beta must be >= 0");
  if (lambda < 0.0 || lambda > 1.0) throw_validation("TrainConfig: lambda must be in [0, 1]");
  if (phi <= 0.0) throw_validation("TrainConfig: phi must be > 0");
  if (learning_rate <= 0.0) throw_validation("TrainConfig: learning_rate must be > 0");
  if (preheat_epochs < 0 || total_epochs < 0 || preheat_epochs > total_epochs)
    throw_validation("TrainConfig: need 0 <= preheat_epochs <= total_epochs");
  if (k <= 0) throw_validation("TrainConfig: K must be positive");
  if (select_fraction <= 0.0 || select_fraction > 1.0)
    throw_validation("TrainConfig: select_fraction must be in (0, 1]");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw_validation("TrainConfig: dropout_rate must be in [0, 1)");
  if (d_model == 0 || d_z == 0) throw_validation("TrainConfig: dims must be positive");
  if (sage_layers <= 0) throw_validation("TrainConfig: sage_layers must be positive");
}

ecmc::EcmcConfig TrainConfig::ecmc_config() const {
  ecmc::EcmcConfig cfg;
  cfg.k = k;
  cfg.select_fraction = select_fraction;
  cfg.lambda = lambda;
  cfg.preheat_epochs = preheat_epochs;
  cfg.total_epochs = total_epochs;
  return cfg;
}

std::vector<FoldSplit> make_fold_splits(std::vector<std::string> patient_ids, int num_folds,
                                        std::uint64_t seed) {
  if (num_folds < 2) throw_validation("make_fold_splits: need at least 2 folds");
  const std::size_t n = patient_ids.size();
  if (n < 2 * static_cast<std::size_t>(num_folds))
    throw_validation("make_fold_splits: cohort too small for " + std::to_string(num_folds) +
                     " disjoint folds");
  std::sort(patient_ids.begin(), patient_ids.end());
  Rng rng(derive_seed(seed, 42));
  rng.shuffle(patient_ids);

  const std::size_t base = n / num_folds;
  const std::size_t extra = n % num_folds;
  std::vector<FoldSplit> splits;
  std::size_t offset = 0;
  for (int f = 0; f < num_folds; ++f) {
    const std::size_t test_count = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    FoldSplit split;
    split.fold_index = f;
    split.test_ids.assign(patient_ids.begin() + offset, patient_ids.begin() + offset + test_count);
    std::vector<std::string> rest;
    rest.insert(rest.end(), patient_ids.begin(), patient_ids.begin() + offset);
    rest.insert(rest.end(), patient_ids.begin() + offset + test_count, patient_ids.end());
    const std::size_t val_count = (rest.size() + 3) / 4;  // 25% of the remainder
    if (val_count == 0 || val_count >= rest.size())
      throw_validation("make_fold_splits: cohort too small for train/validation split");
    split.val_ids.assign(rest.begin(), rest.begin() + val_count);
    split.train_ids.assign(rest.begin() + val_count, rest.end());
    splits.push_back(std::move(split));
    offset += test_count;
  }
  return splits;
}

diff::Var total_loss(diff::Tape& tape, diff::Var cox, diff::Var cia, const TrainConfig& config) {
  return tape.add(tape.scale(cox, config.alpha), tape.scale(cia, config.beta));
}

// ---------------------------------------------------------------------------
// Model

namespace {

diff::Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return diff::Tensor::matrix(rows, cols, std::move(v));
}

std::string sage_name(std::size_t kind, int layer) {
  return std::string("sage.") + modality::kind_name(modality::kind_from_index(kind)) + ".layer" +
         std::to_string(layer);
}

std::string pool_name(std::size_t kind, const char* part) {
  return std::string("pool.") + modality::kind_name(modality::kind_from_index(kind)) + "." + part;
}

std::string kind_embed_name(std::size_t kind) {
  return std::string("bipartite.kind.") + modality::kind_name(modality::kind_from_index(kind));
}

constexpr int kSiameseLayers = 2;

}  // namespace

Model::Model(const TrainConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t d = config_.d_model;
  const std::size_t pool_hidden = std::max<std::size_t>(1, d / 2);

  for (std::size_t kind = 0; kind < kNumModalities; ++kind) {
    for (int l = 0; l < config_.sage_layers; ++l)
      params_.add(sage_name(kind, l), uniform_init(rng, 2 * d, d));
    params_.add(pool_name(kind, "w1"), uniform_init(rng, d, pool_hidden));
    params_.add(pool_name(kind, "w2"), uniform_init(rng, pool_hidden, 1));
  }
  for (std::size_t kind = 0; kind < kNumModalities; ++kind)
    params_.add(kind_embed_name(kind), diff::Tensor::zeros({1, d}));
  for (int l = 0; l < kSiameseLayers; ++l)
    params_.add("bipartite.layer" + std::to_string(l), uniform_init(rng, 2 * d, d));
  params_.add("bipartite.out", uniform_init(rng, 2 * d, config_.d_z));

  const std::size_t risk_in = config_.use_bpmg ? config_.d_z : config_.d_model;
  const std::size_t risk_hidden = std::max<std::size_t>(1, risk_in / 2);
  params_.add("risk.w1", uniform_init(rng, risk_in, risk_hidden));
  params_.add("risk.w2", uniform_init(rng, risk_hidden, 1));
}

Model::Bound Model::bind(diff::Tape& tape) const {
  Bound bound;
  for (const auto& p : params_.items()) bound.by_name[p.name] = tape.leaf(p.tensor);
  for (std::size_t kind = 0; kind < kNumModalities; ++kind) {
    for (int l = 0; l < config_.sage_layers; ++l)
      bound.sage_weights[kind].push_back(bound.by_name.at(sage_name(kind, l)));
    bound.pool_mlp[kind] = {bound.by_name.at(pool_name(kind, "w1")),
                            bound.by_name.at(pool_name(kind, "w2"))};
    bound.siamese.kind_embeddings[kind] = bound.by_name.at(kind_embed_name(kind));
  }
  for (int l = 0; l < kSiameseLayers; ++l)
    bound.siamese.layer_weights.push_back(bound.by_name.at("bipartite.layer" + std::to_string(l)));
  bound.siamese.output_projection = bound.by_name.at("bipartite.out");
  bound.risk_w1 = bound.by_name.at("risk.w1");
  bound.risk_w2 = bound.by_name.at("risk.w2");
  return bound;
}

diff::GradMap Model::collect_grads(const Bound& bound) const {
  diff::GradMap grads;
  for (const auto& p : params_.items()) grads[p.name] = bound.by_name.at(p.name).grad();
  return grads;
}

// ---------------------------------------------------------------------------
// Forward passes

namespace {

using GraphSlot = std::optional<modality::ModalityGraph>;
using GraphCache = std::map<std::string, std::array<GraphSlot, kNumModalities>>;

GraphCache build_graph_cache(const dataio::Cohort& cohort, std::size_t d_model) {
  GraphCache cache;
  for (std::size_t row = 0; row < cohort.records.size(); ++row) {
    const auto& id = cohort.records[row].patient_id;
    auto& slots = cache[id];
    if (cohort.available(row, 0))
      slots[0] = modality::build_modality_graph(cohort.pathology.at(id), d_model, id);
    if (cohort.available(row, 1))
      slots[1] = modality::build_modality_graph(cohort.genomic.at(id), d_model, id);
    if (cohort.available(row, 2))
      slots[2] = modality::build_modality_graph(cohort.clinical.at(id), d_model, id);
  }
  return cache;
}

// Availability rows for a subset of patients, in subset order.
std::vector<std::uint8_t> subset_availability(const dataio::Cohort& cohort,
                                              const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < cohort.records.size(); ++i) row_of[cohort.records[i].patient_id] = i;
  std::vector<std::uint8_t> out;
  out.reserve(ids.size() * kNumModalities);
  for (const auto& id : ids) {
    auto it = row_of.find(id);
    if (it == row_of.end()) throw_validation("unknown patient in split: '" + id + "'");
    for (std::size_t m = 0; m < kNumModalities; ++m)
      out.push_back(cohort.availability[it->second * kNumModalities + m]);
  }
  return out;
}

// Test-time missingness: each available modality drops with probability
// `rate`; a patient losing everything keeps one uniformly-chosen modality.
std::vector<std::uint8_t> perturb_availability(std::vector<std::uint8_t> avail, double rate,
                                               std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw_validation("missing rate must be in [0, 1)");
  if (rate == 0.0) return avail;
  Rng rng(seed);
  const std::size_t patients = avail.size() / kNumModalities;
  for (std::size_t p = 0; p < patients; ++p) {
    std::vector<std::size_t> kept, dropped;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!avail[p * kNumModalities + m]) continue;
      if (rng.uniform() < rate) {
        avail[p * kNumModalities + m] = 0;
        dropped.push_back(m);
      } else {
        kept.push_back(m);
      }
    }
    if (kept.empty() && !dropped.empty())
      avail[p * kNumModalities + dropped[rng.uniform_index(dropped.size())]] = 1;
  }
  return avail;
}

bipartite::PatientEmbeddings compute_embeddings(diff::Tape& tape, const Model::Bound& bound,
                                                const GraphCache& cache,
                                                const std::vector<std::string>& ids,
                                                const std::vector<std::uint8_t>& avail) {
  bipartite::PatientEmbeddings out;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const auto& slots = cache.at(ids[p]);
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!avail[p * kNumModalities + m]) continue;
      const GraphSlot& slot = slots[m];
      if (!slot) throw_validation("availability claims a modality with no payload for '" + ids[p] + "'");
      diff::Var nodes = modality::sage_forward(tape, *slot, bound.sage_weights[m]);
      diff::Var pooled =
          modality::attention_pool(tape, nodes, bound.pool_mlp[m].first, bound.pool_mlp[m].second);
      out[ids[p]][modality::kind_from_index(m)] = pooled;
    }
  }
  return out;
}

struct ForwardOutput {
  diff::Var risks;  // [P x 1]
  diff::Var cia;    // scalar
};

ForwardOutput forward_risks(diff::Tape& tape, const Model::Bound& bound, const GraphCache& cache,
                            const std::vector<std::string>& ids, const std::vector<std::uint8_t>& avail,
                            const TrainConfig& config, bool training, std::uint64_t dropout_seed) {
  auto embeddings = compute_embeddings(tape, bound, cache, ids, avail);
  ForwardOutput out;
  out.cia = tape.constant(0.0);

  if (config.use_bpmg) {
    bipartite::BipartiteGraph graph = bipartite::build_bipartite(ids, embeddings, avail);
    diff::Var z;
    if (training && config.beta != 0.0) {
      bipartite::BipartiteGraph incomplete =
          bipartite::edge_dropout(graph, config.dropout_rate, dropout_seed);
      bipartite::PatientEmbeddingPair pair = bipartite::siamese_encode(tape, graph, incomplete, bound.siamese);
      z = pair.complete;
      out.cia = bipartite::alignment_loss(tape, pair, {config.phi, config.dropout_rate});
    } else {
      z = bipartite::encode_patients(tape, graph, bound.siamese);
    }
    out.risks = bipartite::predict_risk(tape, z, bound.risk_w1, bound.risk_w2);
    return out;
  }

  // BPMG ablated: risk comes straight from the mean of the available
  // modality embeddings.
  std::vector<diff::Var> rows;
  std::vector<std::size_t> row_patient;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    std::size_t available = 0;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!avail[p * kNumModalities + m]) continue;
      diff::Var e = embeddings.at(ids[p]).at(modality::kind_from_index(m));
      rows.push_back(tape.reshape(e, {1, e.numel()}));
      row_patient.push_back(p);
      ++available;
    }
    if (available == 0) throw_validation("patient '" + ids[p] + "' has no available modality");
  }
  diff::Var stacked = tape.concat(rows, 0);
  std::vector<double> agg(ids.size() * rows.size(), 0.0);
  std::vector<std::size_t> degree(ids.size(), 0);
  for (std::size_t e = 0; e < rows.size(); ++e) ++degree[row_patient[e]];
  for (std::size_t e = 0; e < rows.size(); ++e)
    agg[row_patient[e] * rows.size() + e] = 1.0 / static_cast<double>(degree[row_patient[e]]);
  diff::Var mean_op = tape.leaf(std::move(agg), {ids.size(), rows.size()}, false);
  diff::Var pooled = tape.matmul(mean_op, stacked);  // [P x d_model]
  out.risks = bipartite::predict_risk(tape, pooled, bound.risk_w1, bound.risk_w2);
  return out;
}

survstat::RiskScores eval_risks(const Model& model, const GraphCache& cache,
                                const std::vector<std::string>& ids,
                                const std::vector<std::uint8_t>& avail) {
  diff::Tape tape;
  Model::Bound bound = model.bind(tape);
  ForwardOutput out =
      forward_risks(tape, bound, cache, ids, avail, model.config(), /*training=*/false, 0);
  return bipartite::risk_map(ids, out.risks);
}

std::vector<survstat::SurvivalRecord> records_for(const dataio::Cohort& cohort,
                                                  const std::vector<std::string>& ids) {
  std::map<std::string, const survstat::SurvivalRecord*> by_id;
  for (const auto& r : cohort.records) by_id[r.patient_id] = &r;
  std::vector<survstat::SurvivalRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw_validation("split references unknown patient '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

std::vector<std::vector<std::string>> make_batches(const std::vector<std::string>& train_ids,
                                                   int batch_size, std::uint64_t seed) {
  if (batch_size <= 0 || static_cast<std::size_t>(batch_size) >= train_ids.size())
    return {train_ids};
  std::vector<std::string> shuffled = train_ids;
  Rng rng(seed);
  rng.shuffle(shuffled);
  std::vector<std::vector<std::string>> batches;
  for (std::size_t i = 0; i < shuffled.size(); i += batch_size) {
    const std::size_t end = std::min(shuffled.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(shuffled.begin() + i, shuffled.begin() + end);
  }
  return batches;
}

// Uniform-random censored selection of the same size, for the DMAC ablation.
std::vector<std::string> select_random_censored(const std::vector<survstat::SurvivalRecord>& records,
                                                double fraction, std::uint64_t seed) {
  std::vector<std::string> censored;
  for (const auto& r : records)
    if (!r.event) censored.push_back(r.patient_id);
  if (censored.empty()) return {};
  Rng rng(seed);
  rng.shuffle(censored);
  const auto take =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(censored.size())));
  censored.resize(std::min(take, censored.size()));
  return censored;
}

}  // namespace

// ---------------------------------------------------------------------------
// Training

FoldResult train_fold(const FoldSplit& split, const dataio::Cohort& cohort, const TrainConfig& config,
                      double test_missing_rate) {
  config.validate();
  if (split.train_ids.empty()) throw_validation("train_fold: empty train split");
  if (split.val_ids.empty()) throw_validation("train_fold: empty validation split");
  if (split.test_ids.empty()) throw_validation("train_fold: empty test split");

  const std::uint64_t fold_seed = derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(split.fold_index));
  const GraphCache cache = build_graph_cache(cohort, config.d_model);

  Model model(config, derive_seed(fold_seed, 1));
  diff::AdamState adam;

  const std::vector<survstat::SurvivalRecord> original_train = records_for(cohort, split.train_ids);
  const std::vector<survstat::SurvivalRecord> val_records = records_for(cohort, split.val_ids);
  const std::vector<survstat::SurvivalRecord> test_records = records_for(cohort, split.test_ids);
  const std::vector<std::uint8_t> train_avail = subset_availability(cohort, split.train_ids);
  const std::vector<std::uint8_t> val_avail = subset_availability(cohort, split.val_ids);
  std::vector<std::uint8_t> test_avail = subset_availability(cohort, split.test_ids);
  if (test_missing_rate > 0.0)
    test_avail = perturb_availability(test_avail, test_missing_rate, derive_seed(fold_seed, 5));

  ecmc::ConfidenceTracker tracker(config.lambda);
  const ecmc::EcmcConfig ecmc_cfg = config.ecmc_config();

  FoldResult result;
  result.metrics.fold_index = split.fold_index;

  survstat::RiskScores last_train_scores;
  double best_val = -1.0;
  std::map<std::string, std::vector<double>> best_snapshot = model.params().snapshot();

  for (int epoch = 0; epoch < config.total_epochs; ++epoch) {
    // Update stage: rebuild the relabeled copy from the ORIGINAL labels each
    // epoch so pseudo-labels never compound across epochs.
    std::vector<survstat::SurvivalRecord> epoch_records = original_train;
    int relabel_count = 0;
    if (config.use_ecmc && epoch >= config.preheat_epochs && tracker.epoch() >= 1 &&
        !last_train_scores.empty()) {
      std::vector<std::string> selected =
          config.use_dmac
              ? ecmc::select_reliable(tracker, original_train, ecmc_cfg)
              : select_random_censored(original_train, config.select_fraction,
                                       derive_seed(fold_seed, 4000 + static_cast<std::uint64_t>(epoch)));
      std::vector<ecmc::RelabelDecision> applied;
      for (const auto& pid : selected) {
        ecmc::RelabelDecision d = ecmc::relabel(pid, epoch_records, last_train_scores, ecmc_cfg);
        if (!d.applied) continue;
        epoch_records = ecmc::apply_relabels(epoch_records, {d});
        applied.push_back(d);
        result.relabels.push_back(RelabelLogEntry{split.fold_index, epoch, d.patient_id, d.old_time,
                                                  d.new_time, tracker.tau_of(d.patient_id)});
      }
      relabel_count = static_cast<int>(applied.size());
      if (!applied.empty()) result.final_decisions = std::move(applied);
    }

    std::map<std::string, const survstat::SurvivalRecord*> epoch_by_id;
    for (const auto& r : epoch_records) epoch_by_id[r.patient_id] = &r;

    double loss_sum = 0.0, cox_sum = 0.0, cia_sum = 0.0;
    survstat::RiskScores train_scores;
    const auto batches = make_batches(split.train_ids, config.batch_size,
                                      derive_seed(fold_seed, 3000 + static_cast<std::uint64_t>(epoch)));
    std::size_t batch_index = 0;
    for (const auto& batch_ids : batches) {
      std::vector<std::uint8_t> batch_avail;
      if (batches.size() == 1) {
        batch_avail = train_avail;
      } else {
        batch_avail = subset_availability(cohort, batch_ids);
      }
      std::vector<survstat::SurvivalRecord> batch_records;
      batch_records.reserve(batch_ids.size());
      for (const auto& id : batch_ids) batch_records.push_back(*epoch_by_id.at(id));

      diff::Tape tape;
      Model::Bound bound = model.bind(tape);
      const std::uint64_t dropout_seed =
          derive_seed(fold_seed, 2000 + static_cast<std::uint64_t>(epoch) * 97 + batch_index);
      ForwardOutput fwd =
          forward_risks(tape, bound, cache, batch_ids, batch_avail, config, /*training=*/true, dropout_seed);
      diff::Var cox = survstat::cox_loss(tape, batch_records, fwd.risks);
      diff::Var loss = total_loss(tape, cox, fwd.cia, config);
      tape.backward(loss);
      diff::GradMap grads = model.collect_grads(bound);
      diff::adam_step(model.params(), grads, adam, config.learning_rate);

      loss_sum += loss.scalar();
      cox_sum += cox.scalar();
      cia_sum += fwd.cia.scalar();
      for (std::size_t i = 0; i < batch_ids.size(); ++i)
        train_scores[batch_ids[i]] = fwd.risks.values()[i];
      ++batch_index;
    }

    // DMAC from this epoch's training predictions (training-set only).
    tracker = ecmc::dmac_update(tracker, ecmc::risk_ranks(train_scores));
    for (const auto& [id, tau] : tracker.tau())
      if (tau < 0.0 || tau > 1.0 + 1e-12)
        throw_validation("DMAC tau out of [0, 1] for patient '" + id + "'");
    last_train_scores = train_scores;

    double val_cindex = std::nan("");
    try {
      val_cindex = survstat::concordance_index(val_records, eval_risks(model, cache, split.val_ids, val_avail));
    } catch (const Error&) {
      // undefined C-index this epoch; never selected as best
    }
    if (!std::isnan(val_cindex) && val_cindex > best_val) {
      best_val = val_cindex;
      best_snapshot = model.params().snapshot();
    }

    result.epochs.push_back(EpochRow{epoch, loss_sum, cox_sum, cia_sum, val_cindex, relabel_count});
  }

  model.params().restore(best_snapshot);
  result.test_risks = eval_risks(model, cache, split.test_ids, test_avail);
  result.metrics.test_cindex = survstat::concordance_index(test_records, result.test_risks);
  try {
    const auto lr = survstat::logrank_test(test_records, survstat::median_split(result.test_risks));
    result.metrics.logrank_p = lr.p_value;
  } catch (const Error&) {
    result.metrics.logrank_p = std::nan("");
  }
  return result;
}

RunMetrics summarize(const std::vector<FoldResult>& folds, const dataio::Cohort& cohort) {
  std::vector<FoldMetrics> metrics;
  RelabelAudit audit;
  double mae_raw_sum = 0.0, mae_upd_sum = 0.0;
  std::size_t audited = 0;
  for (const auto& f : folds) {
    metrics.push_back(f.metrics);
    for (const auto& d : f.final_decisions) {
      if (!d.applied) continue;
      ++audit.count;
      auto it = cohort.ground_truth_times.find(d.patient_id);
      if (it == cohort.ground_truth_times.end()) continue;
      mae_raw_sum += std::abs(d.old_time - it->second);
      mae_upd_sum += std::abs(d.new_time - it->second);
      ++audited;
    }
  }
  if (audited > 0) {
    audit.mae_raw = mae_raw_sum / static_cast<double>(audited);
    audit.mae_updated = mae_upd_sum / static_cast<double>(audited);
  }
  return finalize_metrics(std::move(metrics), std::move(audit));
}

RunResult cross_validate(const dataio::Cohort& cohort, const TrainConfig& config) {
  config.validate();
  if (cohort.records.size() < 10)
    throw_validation("cross_validate: need at least 10 patients, got " +
                     std::to_string(cohort.records.size()));
  const auto splits = make_fold_splits(cohort.patient_ids(), 5, config.seed);
  RunResult result;
  for (const auto& split : splits) result.folds.push_back(train_fold(split, cohort, config));
  result.metrics = summarize(result.folds, cohort);
  return result;
}

RunResult ablation_run(const dataio::Cohort& cohort, const TrainConfig& config,
                       const std::string& component) {
  TrainConfig cfg = config;
  if (component == "ecmc") {
    cfg.use_ecmc = false;
  } else if (component == "bpmg") {
    cfg.use_bpmg = false;
    cfg.beta = 0.0;
  } else if (component == "dmac") {
    cfg.use_dmac = false;
  } else {
    throw_validation("ablation_run: unknown component '" + component + "' (expected ecmc|bpmg|dmac)");
  }
  return cross_validate(cohort, cfg);
}

RunResult missing_scenario_run(const dataio::Cohort& cohort, const TrainConfig& config,
                               double missing_rate) {
  config.validate();
  if (missing_rate < 0.0 || missing_rate >= 1.0)
    throw_validation("missing_scenario_run: rate must be in [0, 1)");
  if (cohort.records.size() < 10)
    throw_validation("missing_scenario_run: need at least 10 patients");
  const auto splits = make_fold_splits(cohort.patient_ids(), 5, config.seed);
  RunResult result;
  for (const auto& split : splits)
    result.folds.push_back(train_fold(split, cohort, config, missing_rate));
  result.metrics = summarize(result.folds, cohort);
  return result;
}

}  // namespace censurv::pipeline
