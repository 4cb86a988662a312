#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "censurv/dataio.hpp"
#include "censurv/pipeline.hpp"
#include "censurv/run_io.hpp"
#include "censurv/survstat.hpp"

namespace py = pybind11;
using namespace censurv;

namespace {

std::vector<survstat::SurvivalRecord> records_from(const std::vector<double>& times,
                                                   const std::vector<bool>& events) {
  if (times.size() != events.size())
    throw_validation("times and events must have the same length");
  std::vector<survstat::SurvivalRecord> records;
  for (std::size_t i = 0; i < times.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%05zu", i);
    records.push_back({buf, times[i], events[i]});
  }
  return records;
}

survstat::RiskScores scores_from(const std::vector<survstat::SurvivalRecord>& records,
                                 const std::vector<double>& risks) {
  if (risks.size() != records.size())
    throw_validation("risks must have one entry per patient");
  survstat::RiskScores scores;
  for (std::size_t i = 0; i < records.size(); ++i) scores[records[i].patient_id] = risks[i];
  return scores;
}

pipeline::TrainConfig config_from_dict(const py::dict& d) {
  pipeline::TrainConfig cfg = pipeline::TrainConfig::desk();
  for (auto item : d) {
    const std::string key = py::cast<std::string>(item.first);
    const auto& value = item.second;
    if (key == "alpha") cfg.alpha = py::cast<double>(value);
    else if (key == "beta") cfg.beta = py::cast<double>(value);
    else if (key == "lambda") cfg.lambda = py::cast<double>(value);
    else if (key == "phi") cfg.phi = py::cast<double>(value);
    else if (key == "learning_rate") cfg.learning_rate = py::cast<double>(value);
    else if (key == "preheat_epochs") cfg.preheat_epochs = py::cast<int>(value);
    else if (key == "total_epochs") cfg.total_epochs = py::cast<int>(value);
    else if (key == "batch_size") cfg.batch_size = py::cast<int>(value);
    else if (key == "k") cfg.k = py::cast<int>(value);
    else if (key == "select_fraction") cfg.select_fraction = py::cast<double>(value);
    else if (key == "dropout_rate") cfg.dropout_rate = py::cast<double>(value);
    else if (key == "d_model") cfg.d_model = py::cast<std::size_t>(value);
    else if (key == "d_z") cfg.d_z = py::cast<std::size_t>(value);
    else if (key == "sage_layers") cfg.sage_layers = py::cast<int>(value);
    else if (key == "seed") cfg.seed = py::cast<std::uint64_t>(value);
    else if (key == "use_ecmc") cfg.use_ecmc = py::cast<bool>(value);
    else if (key == "use_bpmg") cfg.use_bpmg = py::cast<bool>(value);
    else if (key == "use_dmac") cfg.use_dmac = py::cast<bool>(value);
    else throw_validation("unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

py::dict metrics_to_dict(const pipeline::RunMetrics& m) {
  py::dict out;
  py::list folds;
  for (const auto& f : m.folds) {
    py::dict fold;
    fold["cindex"] = f.test_cindex;
    if (std::isnan(f.logrank_p))
      fold["logrank_p"] = py::none();
    else
      fold["logrank_p"] = f.logrank_p;
    folds.append(fold);
  }
  out["folds"] = folds;
  out["mean_cindex"] = m.mean_cindex;
  out["std_cindex"] = m.std_cindex;
  py::dict audit;
  audit["count"] = m.relabel_audit.count;
  audit["mae_raw"] = m.relabel_audit.mae_raw ? py::cast(*m.relabel_audit.mae_raw) : py::none();
  audit["mae_updated"] =
      m.relabel_audit.mae_updated ? py::cast(*m.relabel_audit.mae_updated) : py::none();
  out["relabel_audit"] = audit;
  return out;
}

dataio::Cohort load_cohort(const std::string& data_dir) {
  return dataio::load_dataset(std::filesystem::path(data_dir) / "manifest.json");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CenSurv: multimodal cancer survival prediction with a bipartite "
            "patient-modality graph and event-conditional modelling of censoring";

  py::register_exception<Error>(m, "CensurvError");

  m.def(
      "concordance_index",
      [](const std::vector<double>& times, const std::vector<bool>& events,
         const std::vector<double>& risks) {
        const auto records = records_from(times, events);
        return survstat::concordance_index(records, scores_from(records, risks));
      },
      py::arg("times"), py::arg("events"), py::arg("risks"),
      "Harrell's concordance index; higher risk must pair with shorter survival.");

  m.def(
      "cox_loss",
      [](const std::vector<double>& times, const std::vector<bool>& events,
         const std::vector<double>& risks) {
        const auto records = records_from(times, events);
        return survstat::cox_loss_value(records, scores_from(records, risks));
      },
      py::arg("times"), py::arg("events"), py::arg("risks"),
      "Cox partial-likelihood loss value of the given risk scores.");

  m.def(
      "kaplan_meier",
      [](const std::vector<double>& times, const std::vector<bool>& events) {
        std::vector<std::pair<double, double>> out;
        for (const auto& pt : survstat::kaplan_meier(records_from(times, events)))
          out.emplace_back(pt.time, pt.survival);
        return out;
      },
      py::arg("times"), py::arg("events"),
      "Product-limit estimator as (time, survival_prob) steps.");

  m.def(
      "logrank_test",
      [](const std::vector<double>& times, const std::vector<bool>& events,
         const std::vector<bool>& high_risk) {
        const auto records = records_from(times, events);
        if (high_risk.size() != records.size())
          throw_validation("high_risk must have one entry per patient");
        survstat::GroupSplit split;
        for (std::size_t i = 0; i < records.size(); ++i)
          (high_risk[i] ? split.high_risk : split.low_risk).insert(records[i].patient_id);
        const auto lr = survstat::logrank_test(records, split);
        return py::make_tuple(lr.chi_square, lr.p_value);
      },
      py::arg("times"), py::arg("events"), py::arg("high_risk"),
      "Two-group logrank test; returns (chi_square, p_value).");

  m.def(
      "generate_synthetic",
      [](const std::string& out_dir, std::size_t patients, double censor_rate, std::uint64_t seed,
         std::size_t grid_size, double feature_noise) {
        dataio::SyntheticConfig config;
        config.num_patients = patients;
        config.censor_rate = censor_rate;
        config.seed = seed;
        config.grid_size = grid_size;
        config.feature_noise = feature_noise;
        dataio::generate_synthetic(config, out_dir);
        return (std::filesystem::path(out_dir) / "manifest.json").string();
      },
      py::arg("out_dir"), py::arg("patients") = 500, py::arg("censor_rate") = 0.4,
      py::arg("seed") = 1, py::arg("grid_size") = 4, py::arg("feature_noise") = 0.3,
      "Write a synthetic cohort and return the manifest path.");

  m.def(
      "train",
      [](const std::string& data_dir, const std::string& out_dir, const py::dict& config) {
        const auto cohort = load_cohort(data_dir);
        const auto cfg = config_from_dict(config);
        const auto result = pipeline::cross_validate(cohort, cfg);
        if (!out_dir.empty()) pipeline::write_run_dir(result, cohort, cfg, out_dir);
        return metrics_to_dict(result.metrics);
      },
      py::arg("data_dir"), py::arg("out_dir") = "", py::arg("config") = py::dict(),
      "5-fold cross-validated training; returns the run metrics.");

  m.def(
      "ablate",
      [](const std::string& data_dir, const std::string& component, const py::dict& config) {
        const auto cohort = load_cohort(data_dir);
        return metrics_to_dict(pipeline::ablation_run(cohort, config_from_dict(config), component).metrics);
      },
      py::arg("data_dir"), py::arg("component"), py::arg("config") = py::dict(),
      "Cross-validate with one component (ecmc|bpmg|dmac) removed.");

  m.def(
      "missing_scenario",
      [](const std::string& data_dir, double rate, const py::dict& config) {
        const auto cohort = load_cohort(data_dir);
        return metrics_to_dict(
            pipeline::missing_scenario_run(cohort, config_from_dict(config), rate).metrics);
      },
      py::arg("data_dir"), py::arg("rate"), py::arg("config") = py::dict(),
      "Cross-validate with test-time modality missingness at the given rate.");

  m.def("desk_config", [] {
    py::dict d;
    const auto cfg = pipeline::TrainConfig::desk();
    d["alpha"] = cfg.alpha;
    d["beta"] = cfg.beta;
    d["lambda"] = cfg.lambda;
    d["phi"] = cfg.phi;
    d["learning_rate"] = cfg.learning_rate;
    d["preheat_epochs"] = cfg.preheat_epochs;
    d["total_epochs"] = cfg.total_epochs;
    d["batch_size"] = cfg.batch_size;
    d["k"] = cfg.k;
    d["select_fraction"] = cfg.select_fraction;
    d["dropout_rate"] = cfg.dropout_rate;
    d["d_model"] = cfg.d_model;
    d["d_z"] = cfg.d_z;
    d["sage_layers"] = cfg.sage_layers;
    d["seed"] = cfg.seed;
    d["use_ecmc"] = cfg.use_ecmc;
    d["use_bpmg"] = cfg.use_bpmg;
    d["use_dmac"] = cfg.use_dmac;
    return d;
  }, "Desk-scale training defaults as a config dict.");
}
