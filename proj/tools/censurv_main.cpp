#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "censurv/dataio.hpp"
#include "censurv/pipeline.hpp"
#include "censurv/run_io.hpp"

namespace fs = std::filesystem;
using namespace censurv;

namespace {

std::vector<double> parse_rates(const std::string& csv) {
  std::vector<double> rates;
  std::istringstream in(csv);
  std::string field;
  while (std::getline(in, field, ',')) {
    try {
      rates.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw_validation("--rates: cannot parse '" + field + "'");
    }
  }
  if (rates.empty()) throw_validation("--rates: no rates given");
  return rates;
}

std::string rate_tag(double rate) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", rate);
  return buf;
}

pipeline::TrainConfig config_or_desk(const std::string& config_path) {
  if (config_path.empty()) return pipeline::TrainConfig::desk();
  return pipeline::load_train_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CenSurv: bipartite patient-modality survival prediction with "
               "event-conditional modelling of censoring"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic cohort");
  std::size_t gen_patients = 500;
  double gen_censor = 0.4;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  std::size_t gen_grid = 4;
  double gen_noise = 0.3;
  gen->add_option("--patients", gen_patients, "Number of patients");
  gen->add_option("--censor-rate", gen_censor, "Fraction of censored records");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--grid", gen_grid, "Pathology patch grid size");
  gen->add_option("--noise", gen_noise, "Feature noise level");

  // train
  auto* train = app.add_subcommand("train", "5-fold cross-validated training");
  std::string train_data, train_config, train_out;
  train->add_option("--data", train_data, "Dataset directory (with manifest.json)")->required();
  train->add_option("--config", train_config, "TrainConfig JSON (desk defaults when omitted)");
  train->add_option("--out", train_out, "Run output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Re-derive metrics from a finished run");
  std::string eval_run, eval_out;
  eval->add_option("--run", eval_run, "Run directory")->required();
  eval->add_option("--out", eval_out, "Output metrics JSON")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Train with one component removed");
  std::string ab_data, ab_component, ab_config, ab_out;
  ablate->add_option("--data", ab_data, "Dataset directory")->required();
  ablate->add_option("--component", ab_component, "One of ecmc|bpmg|dmac")->required();
  ablate->add_option("--config", ab_config, "TrainConfig JSON (desk defaults when omitted)");
  ablate->add_option("--out", ab_out, "Run output directory")->required();

  // missing
  auto* missing = app.add_subcommand("missing", "Evaluate under test-time modality missingness");
  std::string mi_data, mi_rates = "0.1,0.3,0.5", mi_config, mi_out;
  missing->add_option("--data", mi_data, "Dataset directory")->required();
  missing->add_option("--rates", mi_rates, "Comma-separated missing rates");
  missing->add_option("--config", mi_config, "TrainConfig JSON (desk defaults when omitted)");
  missing->add_option("--out", mi_out, "Output directory")->required();

  // km
  auto* km = app.add_subcommand("km", "Export Kaplan-Meier curves for a run's test predictions");
  std::string km_run, km_out;
  km->add_option("--run", km_run, "Run directory")->required();
  km->add_option("--out", km_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      dataio::SyntheticConfig cfg;
      cfg.num_patients = gen_patients;
      cfg.censor_rate = gen_censor;
      cfg.seed = gen_seed;
      cfg.grid_size = gen_grid;
      cfg.feature_noise = gen_noise;
      dataio::generate_synthetic(cfg, gen_out);
      std::cout << "wrote dataset for " << gen_patients << " patients to " << gen_out << "\n";
    } else if (train->parsed()) {
      const auto cohort = dataio::load_dataset(fs::path(train_data) / "manifest.json");
      const auto cfg = config_or_desk(train_config);
      const auto result = pipeline::cross_validate(cohort, cfg);
      pipeline::write_run_dir(result, cohort, cfg, train_out);
      std::cout << "mean C-index " << result.metrics.mean_cindex << " (std "
                << result.metrics.std_cindex << ") over " << result.metrics.folds.size()
                << " folds; run written to " << train_out << "\n";
    } else if (eval->parsed()) {
      const auto stored = dataio::read_metrics(fs::path(eval_run) / "metrics.json");
      const auto fresh = pipeline::finalize_metrics(stored.folds, stored.relabel_audit);
      dataio::write_metrics(fresh, eval_out);
      std::cout << "mean C-index " << fresh.mean_cindex << "; metrics written to " << eval_out << "\n";
    } else if (ablate->parsed()) {
      const auto cohort = dataio::load_dataset(fs::path(ab_data) / "manifest.json");
      const auto cfg = config_or_desk(ab_config);
      const auto result = pipeline::ablation_run(cohort, cfg, ab_component);
      pipeline::write_run_dir(result, cohort, cfg, ab_out);
      std::cout << "w/o " << ab_component << ": mean C-index " << result.metrics.mean_cindex
                << "; run written to " << ab_out << "\n";
    } else if (missing->parsed()) {
      const auto cohort = dataio::load_dataset(fs::path(mi_data) / "manifest.json");
      const auto cfg = config_or_desk(mi_config);
      std::error_code ec;
      fs::create_directories(mi_out, ec);
      if (ec) throw_io("cannot create output directory: " + mi_out);
      for (double rate : parse_rates(mi_rates)) {
        const auto result = pipeline::missing_scenario_run(cohort, cfg, rate);
        const auto path = fs::path(mi_out) / ("metrics_rate_" + rate_tag(rate) + ".json");
        dataio::write_metrics(result.metrics, path);
        std::cout << "missing rate " << rate << ": mean C-index " << result.metrics.mean_cindex
                  << " -> " << path.string() << "\n";
      }
    } else if (km->parsed()) {
      const auto [records, scores] =
          pipeline::load_test_predictions(fs::path(km_run) / "test_predictions.csv");
      dataio::emit_km_csv(records, scores, km_out);
      std::cout << "KM curves written to " << km_out << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == Error::Kind::io ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
