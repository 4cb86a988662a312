#include "censurv/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "censurv/rng.hpp"

namespace censurv::dataio {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using modality::kNumModalities;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw_validation(where + ": cannot parse number '" + text + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write file: " + path.string());
  return out;
}

void write_matrix_csv(const fs::path& path, const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << fmt_double(row[j]);
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_matrix_csv(const fs::path& path) {
  std::vector<std::vector<double>> rows;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields)
      row.push_back(parse_double(f, path.string() + ":" + std::to_string(i + 1)));
    rows.push_back(std::move(row));
  }
  return rows;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string patient_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%05zu", i);
  return buf;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (num_patients < 2) throw_validation("SyntheticConfig: num_patients must be >= 2");
  if (censor_rate < 0.0 || censor_rate >= 1.0)
    throw_validation("SyntheticConfig: censor_rate must be in [0, 1)");
  if (grid_size == 0) throw_validation("SyntheticConfig: grid_size must be positive");
  if (clinical_cardinalities.empty()) throw_validation("SyntheticConfig: no clinical features");
  if (hazard_weights.empty()) throw_validation("SyntheticConfig: hazard_weights empty");
  if (feature_noise < 0.0) throw_validation("SyntheticConfig: feature_noise must be >= 0");
  if (pathology_feature_dim == 0 || genomic_feature_dim == 0)
    throw_validation("SyntheticConfig: feature dims must be positive");
  if (median_survival_months <= 0.0)
    throw_validation("SyntheticConfig: median_survival_months must be positive");
}

std::vector<std::string> Cohort::patient_ids() const {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.patient_id);
  return ids;
}

std::size_t Cohort::index_of(const std::string& patient_id) const {
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].patient_id == patient_id) return i;
  throw_validation("Cohort: unknown patient '" + patient_id + "'");
}

DatasetManifest generate_synthetic(const SyntheticConfig& config, const fs::path& out_dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "payloads", ec);
  if (ec) throw_io("cannot create dataset directory: " + (out_dir / "payloads").string());

  Rng rng(config.seed);
  const std::size_t latent_dim = config.hazard_weights.size();
  const double latent_scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));

  // Fixed projections from latent factors to modality features.
  auto draw_projection = [&](std::size_t rows) {
    std::vector<std::vector<double>> proj(rows, std::vector<double>(latent_dim));
    for (auto& row : proj)
      for (auto& v : row) v = rng.normal() * latent_scale;
    return proj;
  };
  const auto path_proj = draw_projection(config.pathology_feature_dim);
  std::vector<std::vector<std::vector<double>>> gen_proj;
  for (std::size_t k = 0; k < modality::kGenomicNodeCount; ++k)
    gen_proj.push_back(draw_projection(config.genomic_feature_dim));
  const auto clin_proj = draw_projection(config.clinical_cardinalities.size());

  auto project = [&](const std::vector<double>& row, const std::vector<double>& z) {
    double acc = 0.0;
    for (std::size_t l = 0; l < z.size(); ++l) acc += row[l] * z[l];
    return acc;
  };

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.grid_size = config.grid_size;
  manifest.pathology_feature_dim = config.pathology_feature_dim;
  manifest.genomic_feature_dim = config.genomic_feature_dim;
  manifest.clinical_cardinalities = config.clinical_cardinalities;
  manifest.labels_file = "labels.csv";
  manifest.availability_file = "availability.csv";
  manifest.ground_truth_file = "ground_truth.csv";

  auto labels = open_out(out_dir / "labels.csv");
  labels << "patient_id,time_months,event\n";
  auto avail = open_out(out_dir / "availability.csv");
  avail << "patient_id,pathology,genomic,clinical\n";
  auto truth = open_out(out_dir / "ground_truth.csv");
  truth << "patient_id,true_time_months\n";

  const double base_rate = std::log(2.0) / config.median_survival_months;
  for (std::size_t i = 0; i < config.num_patients; ++i) {
    const std::string id = patient_name(i);
    std::vector<double> z(latent_dim);
    for (auto& v : z) v = rng.normal();
    double risk = 0.0;
    for (std::size_t l = 0; l < latent_dim; ++l) risk += config.hazard_weights[l] * z[l];

    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    const double true_time = -std::log(u) / (base_rate * std::exp(risk));

    bool event = true;
    double observed = true_time;
    if (rng.uniform() < config.censor_rate) {
      event = false;
      double v = rng.uniform();
      while (v <= 0.0) v = rng.uniform();
      observed = v * true_time;  // strictly below the true time
    }

    // Pathology: noisy copies of the latent projection, one per patch.
    std::vector<std::vector<double>> patches;
    for (std::size_t p = 0; p < config.grid_size * config.grid_size; ++p) {
      std::vector<double> feat(config.pathology_feature_dim);
      for (std::size_t j = 0; j < feat.size(); ++j)
        feat[j] = project(path_proj[j], z) + config.feature_noise * rng.normal();
      patches.push_back(std::move(feat));
    }
    // Genomic: one distinct projection per embedding.
    std::vector<std::vector<double>> genomic_rows;
    for (std::size_t k = 0; k < modality::kGenomicNodeCount; ++k) {
      std::vector<double> feat(config.genomic_feature_dim);
      for (std::size_t j = 0; j < feat.size(); ++j)
        feat[j] = project(gen_proj[k][j], z) + config.feature_noise * rng.normal();
      genomic_rows.push_back(std::move(feat));
    }
    // Clinical: quantile-binned latent projections.
    std::vector<double> clinical_values;
    for (std::size_t j = 0; j < config.clinical_cardinalities.size(); ++j) {
      double signal_var = 0.0;
      for (std::size_t l = 0; l < latent_dim; ++l) signal_var += clin_proj[j][l] * clin_proj[j][l];
      const double s = project(clin_proj[j], z) + config.feature_noise * rng.normal();
      const double spread = std::sqrt(signal_var + config.feature_noise * config.feature_noise);
      const double q = normal_cdf(s / (spread > 0.0 ? spread : 1.0));
      const auto card = config.clinical_cardinalities[j];
      auto level = static_cast<std::size_t>(q * static_cast<double>(card));
      clinical_values.push_back(static_cast<double>(std::min(level, card - 1)));
    }

    const std::string path_file = "payloads/" + id + "_pathology.csv";
    const std::string gen_file = "payloads/" + id + "_genomic.csv";
    const std::string clin_file = "payloads/" + id + "_clinical.csv";
    write_matrix_csv(out_dir / path_file, patches);
    write_matrix_csv(out_dir / gen_file, genomic_rows);
    {
      std::vector<std::vector<double>> clin_rows(2);
      for (auto c : config.clinical_cardinalities) clin_rows[0].push_back(static_cast<double>(c));
      clin_rows[1] = clinical_values;
      write_matrix_csv(out_dir / clin_file, clin_rows);
    }

    labels << id << ',' << fmt_double(observed) << ',' << (event ? 1 : 0) << '\n';
    avail << id << ",1,1,1\n";
    truth << id << ',' << fmt_double(true_time) << '\n';
    manifest.patients.push_back(PatientFiles{id, path_file, gen_file, clin_file});
  }
  labels.close();
  avail.close();
  truth.close();

  json j;
  j["schema_version"] = manifest.schema_version;
  j["grid_size"] = manifest.grid_size;
  j["pathology_feature_dim"] = manifest.pathology_feature_dim;
  j["genomic_feature_dim"] = manifest.genomic_feature_dim;
  j["clinical_cardinalities"] = manifest.clinical_cardinalities;
  j["labels"] = manifest.labels_file;
  j["availability"] = manifest.availability_file;
  j["ground_truth"] = *manifest.ground_truth_file;
  j["seed"] = config.seed;
  j["censor_rate"] = config.censor_rate;
  json patients = json::array();
  for (const auto& p : manifest.patients) {
    json item;
    item["id"] = p.id;
    item["pathology"] = *p.pathology;
    item["genomic"] = *p.genomic;
    item["clinical"] = *p.clinical;
    patients.push_back(item);
  }
  j["patients"] = patients;
  auto mf = open_out(out_dir / "manifest.json");
  mf << j.dump(2) << '\n';
  return manifest;
}

DatasetManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw_io("cannot open manifest: " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_validation("manifest " + manifest_path.string() + ": invalid JSON (" + e.what() + ")");
  }
  auto where = [&](const std::string& field) { return manifest_path.string() + ": field '" + field + "'"; };
  auto require = [&](const char* field) -> const json& {
    if (!j.contains(field)) throw_validation(where(field) + " missing");
    return j.at(field);
  };

  DatasetManifest m;
  m.root = manifest_path.parent_path();
  m.schema_version = require("schema_version").get<int>();
  if (m.schema_version != 1)
    throw_validation(where("schema_version") + " unsupported: " + std::to_string(m.schema_version));
  m.grid_size = require("grid_size").get<std::size_t>();
  m.pathology_feature_dim = require("pathology_feature_dim").get<std::size_t>();
  m.genomic_feature_dim = require("genomic_feature_dim").get<std::size_t>();
  m.clinical_cardinalities = require("clinical_cardinalities").get<std::vector<std::size_t>>();
  m.labels_file = require("labels").get<std::string>();
  m.availability_file = require("availability").get<std::string>();
  if (j.contains("ground_truth") && !j.at("ground_truth").is_null())
    m.ground_truth_file = j.at("ground_truth").get<std::string>();
  for (const auto& item : require("patients")) {
    PatientFiles p;
    if (!item.contains("id")) throw_validation(where("patients[].id") + " missing");
    p.id = item.at("id").get<std::string>();
    if (item.contains("pathology") && !item.at("pathology").is_null())
      p.pathology = item.at("pathology").get<std::string>();
    if (item.contains("genomic") && !item.at("genomic").is_null())
      p.genomic = item.at("genomic").get<std::string>();
    if (item.contains("clinical") && !item.at("clinical").is_null())
      p.clinical = item.at("clinical").get<std::string>();
    m.patients.push_back(std::move(p));
  }
  if (m.patients.empty()) throw_validation(where("patients") + " empty");
  return m;
}

Cohort load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  Cohort cohort;
  cohort.grid_size = m.grid_size;
  cohort.clinical_cardinalities = m.clinical_cardinalities;

  std::vector<std::string> ids;
  for (const auto& p : m.patients) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw_validation(manifest_path.string() + ": duplicate patient ids");
  std::map<std::string, const PatientFiles*> files;
  for (const auto& p : m.patients) files[p.id] = &p;

  // Labels.
  const fs::path labels_path = m.root / m.labels_file;
  std::map<std::string, survstat::SurvivalRecord> labels;
  {
    const auto lines = read_lines(labels_path);
    if (lines.empty() || lines[0] != "patient_id,time_months,event")
      throw_validation(labels_path.string() + ": expected header 'patient_id,time_months,event'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = split_csv_line(lines[i]);
      const std::string loc = labels_path.string() + ":" + std::to_string(i + 1);
      if (f.size() != 3) throw_validation(loc + ": expected 3 fields");
      survstat::SurvivalRecord rec;
      rec.patient_id = f[0];
      rec.time = parse_double(f[1], loc + " time_months");
      if (!(rec.time > 0.0)) throw_validation(loc + ": time_months must be > 0");
      if (f[2] == "1")
        rec.event = true;
      else if (f[2] == "0")
        rec.event = false;
      else
        throw_validation(loc + ": event must be 0 or 1, got '" + f[2] + "'");
      if (labels.count(rec.patient_id)) throw_validation(loc + ": duplicate patient '" + rec.patient_id + "'");
      labels[rec.patient_id] = rec;
    }
  }
  for (const auto& id : ids)
    if (!labels.count(id)) throw_validation(labels_path.string() + ": missing label for patient '" + id + "'");
  if (labels.size() != ids.size())
    throw_validation(labels_path.string() + ": labels cover patients absent from the manifest");

  // Availability.
  const fs::path avail_path = m.root / m.availability_file;
  std::map<std::string, std::array<std::uint8_t, 3>> avail;
  {
    const auto lines = read_lines(avail_path);
    if (lines.empty() || lines[0] != "patient_id,pathology,genomic,clinical")
      throw_validation(avail_path.string() + ": expected header 'patient_id,pathology,genomic,clinical'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = split_csv_line(lines[i]);
      const std::string loc = avail_path.string() + ":" + std::to_string(i + 1);
      if (f.size() != 4) throw_validation(loc + ": expected 4 fields");
      std::array<std::uint8_t, 3> row{};
      bool any = false;
      for (std::size_t k = 0; k < 3; ++k) {
        if (f[k + 1] == "1")
          row[k] = 1, any = true;
        else if (f[k + 1] != "0")
          throw_validation(loc + ": availability flags must be 0 or 1");
      }
      if (!any) throw_validation(loc + ": patient '" + f[0] + "' has no available modality");
      avail[f[0]] = row;
    }
  }
  for (const auto& id : ids)
    if (!avail.count(id))
      throw_validation(avail_path.string() + ": missing availability row for patient '" + id + "'");

  // Payloads for available slots.
  for (const auto& id : ids) {
    const auto& row = avail[id];
    const PatientFiles& pf = *files[id];
    if (row[0]) {
      if (!pf.pathology)
        throw_validation(manifest_path.string() + ": missing pathology payload for available slot of '" + id + "'");
      const fs::path p = m.root / *pf.pathology;
      auto rows = read_matrix_csv(p);
      if (rows.size() != m.grid_size * m.grid_size)
        throw_validation(p.string() + ": expected " + std::to_string(m.grid_size * m.grid_size) + " patch rows");
      for (const auto& r : rows)
        if (r.size() != m.pathology_feature_dim)
          throw_validation(p.string() + ": patch feature dim != " + std::to_string(m.pathology_feature_dim));
      cohort.pathology[id] = modality::PathologyPayload{m.grid_size, std::move(rows)};
    }
    if (row[1]) {
      if (!pf.genomic)
        throw_validation(manifest_path.string() + ": missing genomic payload for available slot of '" + id + "'");
      const fs::path p = m.root / *pf.genomic;
      auto rows = read_matrix_csv(p);
      if (rows.size() != modality::kGenomicNodeCount)
        throw_validation(p.string() + ": expected " + std::to_string(modality::kGenomicNodeCount) + " embeddings");
      for (const auto& r : rows)
        if (r.size() != m.genomic_feature_dim)
          throw_validation(p.string() + ": embedding dim != " + std::to_string(m.genomic_feature_dim));
      cohort.genomic[id] = modality::GenomicPayload{std::move(rows)};
    }
    if (row[2]) {
      if (!pf.clinical)
        throw_validation(manifest_path.string() + ": missing clinical payload for available slot of '" + id + "'");
      const fs::path p = m.root / *pf.clinical;
      auto rows = read_matrix_csv(p);
      if (rows.size() != 2) throw_validation(p.string() + ": expected cardinalities and values rows");
      modality::ClinicalPayload payload;
      for (double c : rows[0]) payload.cardinalities.push_back(static_cast<std::size_t>(c));
      for (double v : rows[1]) payload.values.push_back(static_cast<std::size_t>(v));
      if (payload.cardinalities != m.clinical_cardinalities)
        throw_validation(p.string() + ": cardinalities disagree with manifest");
      if (payload.values.size() != payload.cardinalities.size())
        throw_validation(p.string() + ": values and cardinalities differ in length");
      for (std::size_t k = 0; k < payload.values.size(); ++k)
        if (payload.values[k] >= payload.cardinalities[k])
          throw_validation(p.string() + ": clinical value out of range at feature " + std::to_string(k));
      cohort.clinical[id] = std::move(payload);
    }
  }

  // Optional ground truth.
  if (m.ground_truth_file) {
    const fs::path p = m.root / *m.ground_truth_file;
    const auto lines = read_lines(p);
    if (lines.empty() || lines[0] != "patient_id,true_time_months")
      throw_validation(p.string() + ": expected header 'patient_id,true_time_months'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto f = split_csv_line(lines[i]);
      const std::string loc = p.string() + ":" + std::to_string(i + 1);
      if (f.size() != 2) throw_validation(loc + ": expected 2 fields");
      cohort.ground_truth_times[f[0]] = parse_double(f[1], loc + " true_time_months");
    }
  }

  cohort.records.reserve(ids.size());
  cohort.availability.reserve(ids.size() * kNumModalities);
  for (const auto& id : ids) {
    cohort.records.push_back(labels[id]);
    for (std::size_t k = 0; k < kNumModalities; ++k) cohort.availability.push_back(avail[id][k]);
  }
  return cohort;
}

void write_metrics(const pipeline::RunMetrics& metrics, const fs::path& path) {
  if (metrics.folds.empty()) throw_validation("write_metrics: no fold metrics to write");
  json j;
  json folds = json::array();
  for (const auto& f : metrics.folds) {
    json item;
    item["cindex"] = f.test_cindex;
    if (std::isnan(f.logrank_p))
      item["logrank_p"] = nullptr;
    else
      item["logrank_p"] = f.logrank_p;
    folds.push_back(item);
  }
  j["folds"] = folds;
  j["mean_cindex"] = metrics.mean_cindex;
  j["std_cindex"] = metrics.std_cindex;
  json audit;
  audit["count"] = metrics.relabel_audit.count;
  audit["mae_raw"] = metrics.relabel_audit.mae_raw ? json(*metrics.relabel_audit.mae_raw) : json(nullptr);
  audit["mae_updated"] =
      metrics.relabel_audit.mae_updated ? json(*metrics.relabel_audit.mae_updated) : json(nullptr);
  j["relabel_audit"] = audit;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw_io("failed writing metrics to " + path.string());
}

pipeline::RunMetrics read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open metrics: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_validation("metrics " + path.string() + ": invalid JSON (" + e.what() + ")");
  }
  pipeline::RunMetrics m;
  if (!j.contains("folds") || !j.at("folds").is_array() || j.at("folds").empty())
    throw_validation("metrics " + path.string() + ": missing or empty 'folds'");
  int idx = 0;
  for (const auto& item : j.at("folds")) {
    pipeline::FoldMetrics f;
    f.fold_index = idx++;
    f.test_cindex = item.at("cindex").get<double>();
    f.logrank_p = item.at("logrank_p").is_null() ? std::nan("") : item.at("logrank_p").get<double>();
    m.folds.push_back(f);
  }
  m.mean_cindex = j.at("mean_cindex").get<double>();
  m.std_cindex = j.at("std_cindex").get<double>();
  if (j.contains("relabel_audit")) {
    const auto& a = j.at("relabel_audit");
    m.relabel_audit.count = a.at("count").get<std::size_t>();
    if (!a.at("mae_raw").is_null()) m.relabel_audit.mae_raw = a.at("mae_raw").get<double>();
    if (!a.at("mae_updated").is_null()) m.relabel_audit.mae_updated = a.at("mae_updated").get<double>();
  }
  return m;
}

void emit_km_csv(const std::vector<survstat::SurvivalRecord>& records,
                 const survstat::RiskScores& scores, const fs::path& path) {
  if (records.size() < 2) throw_validation("emit_km_csv: need at least 2 patients");
  survstat::RiskScores restricted;
  for (const auto& r : records) {
    auto it = scores.find(r.patient_id);
    if (it == scores.end())
      throw_validation("emit_km_csv: missing risk score for patient '" + r.patient_id + "'");
    restricted[r.patient_id] = it->second;
  }
  const survstat::GroupSplit split = survstat::median_split(restricted);

  auto out = open_out(path);
  out << "group,time,survival_prob\n";
  auto emit_group = [&](const char* name, const std::set<std::string>& members) {
    std::vector<survstat::SurvivalRecord> group;
    for (const auto& r : records)
      if (members.count(r.patient_id)) group.push_back(r);
    if (group.empty()) return;
    for (const auto& pt : survstat::kaplan_meier(group))
      out << name << ',' << fmt_double(pt.time) << ',' << fmt_double(pt.survival) << '\n';
  };
  emit_group("high", split.high_risk);
  emit_group("low", split.low_risk);

  try {
    const auto lr = survstat::logrank_test(records, split);
    out << "# logrank_chi2=" << fmt_double(lr.chi_square) << ",p=" << fmt_double(lr.p_value) << '\n';
  } catch (const Error&) {
    out << "# logrank_chi2=NA,p=NA\n";
  }
  if (!out) throw_io("failed writing KM curves to " + path.string());
}

}  // namespace censurv::dataio
