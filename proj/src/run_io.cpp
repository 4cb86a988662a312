#include "censurv/run_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "censurv/dataio.hpp"

namespace censurv::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write file: " + path.string());
  return out;
}

}  // namespace

TrainConfig load_train_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_validation("config " + path.string() + ": invalid JSON (" + e.what() + ")");
  }
  TrainConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      try {
        field = j.at(key).get<std::decay_t<decltype(field)>>();
      } catch (const json::exception&) {
        throw_validation("config " + path.string() + ": bad value for '" + key + "'");
      }
    }
  };
  get("alpha", cfg.alpha);
  get("beta", cfg.beta);
  get("lambda", cfg.lambda);
  get("phi", cfg.phi);
  get("learning_rate", cfg.learning_rate);
  get("preheat_epochs", cfg.preheat_epochs);
  get("total_epochs", cfg.total_epochs);
  get("batch_size", cfg.batch_size);
  get("k", cfg.k);
  get("select_fraction", cfg.select_fraction);
  get("dropout_rate", cfg.dropout_rate);
  get("d_model", cfg.d_model);
  get("d_z", cfg.d_z);
  get("sage_layers", cfg.sage_layers);
  get("seed", cfg.seed);
  get("use_ecmc", cfg.use_ecmc);
  get("use_bpmg", cfg.use_bpmg);
  get("use_dmac", cfg.use_dmac);
  cfg.validate();
  return cfg;
}

void save_train_config(const TrainConfig& cfg, const fs::path& path) {
  json j;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["lambda"] = cfg.lambda;
  j["phi"] = cfg.phi;
  j["learning_rate"] = cfg.learning_rate;
  j["preheat_epochs"] = cfg.preheat_epochs;
  j["total_epochs"] = cfg.total_epochs;
  j["batch_size"] = cfg.batch_size;
  j["k"] = cfg.k;
  j["select_fraction"] = cfg.select_fraction;
  j["dropout_rate"] = cfg.dropout_rate;
  j["d_model"] = cfg.d_model;
  j["d_z"] = cfg.d_z;
  j["sage_layers"] = cfg.sage_layers;
  j["seed"] = cfg.seed;
  j["use_ecmc"] = cfg.use_ecmc;
  j["use_bpmg"] = cfg.use_bpmg;
  j["use_dmac"] = cfg.use_dmac;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_run_dir(const RunResult& result, const dataio::Cohort& cohort, const TrainConfig& config,
                   const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_io("cannot create run directory: " + dir.string());

  save_train_config(config, dir / "config.json");
  dataio::write_metrics(result.metrics, dir / "metrics.json");

  for (const auto& fold : result.folds) {
    auto out = open_out(dir / ("epochs_fold" + std::to_string(fold.metrics.fold_index) + ".csv"));
    out << "epoch,train_loss,cox,cia,val_cindex,relabel_count\n";
    for (const auto& row : fold.epochs)
      out << row.epoch << ',' << fmt_double(row.train_loss) << ',' << fmt_double(row.cox) << ','
          << fmt_double(row.cia) << ',' << fmt_double(row.val_cindex) << ',' << row.relabel_count
          << '\n';
  }

  {
    auto out = open_out(dir / "relabels.jsonl");
    for (const auto& fold : result.folds)
      for (const auto& entry : fold.relabels) {
        json j;
        j["patient_id"] = entry.patient_id;
        j["old_time"] = entry.old_time;
        j["new_time"] = entry.new_time;
        j["tau"] = entry.tau;
        j["epoch"] = entry.epoch;
        j["fold"] = entry.fold;
        out << j.dump() << '\n';
      }
  }

  {
    std::map<std::string, const survstat::SurvivalRecord*> by_id;
    for (const auto& r : cohort.records) by_id[r.patient_id] = &r;
    auto out = open_out(dir / "test_predictions.csv");
    out << "fold,patient_id,time_months,event,risk\n";
    for (const auto& fold : result.folds)
      for (const auto& [id, risk] : fold.test_risks) {
        const auto* rec = by_id.at(id);
        out << fold.metrics.fold_index << ',' << id << ',' << fmt_double(rec->time) << ','
            << (rec->event ? 1 : 0) << ',' << fmt_double(risk) << '\n';
      }
  }
}

std::pair<std::vector<survstat::SurvivalRecord>, survstat::RiskScores> load_test_predictions(
    const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open predictions: " + path.string());
  std::vector<survstat::SurvivalRecord> records;
  survstat::RiskScores scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "fold,patient_id,time_months,event,risk")
        throw_validation(path.string() + ": unexpected header");
      continue;
    }
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 5)
      throw_validation(path.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
    survstat::SurvivalRecord rec;
    rec.patient_id = f[1];
    rec.time = std::stod(f[2]);
    rec.event = f[3] == "1";
    records.push_back(rec);
    scores[rec.patient_id] = std::stod(f[4]);
  }
  if (records.empty()) throw_validation(path.string() + ": no predictions");
  return {std::move(records), std::move(scores)};
}

}  // namespace censurv::pipeline
