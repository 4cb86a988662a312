#include "censurv/metrics.hpp"

#include <cmath>

#include "censurv/error.hpp"

namespace censurv::pipeline {

RunMetrics finalize_metrics(std::vector<FoldMetrics> folds, RelabelAudit audit) {
  if (folds.empty()) throw_validation("finalize_metrics: no folds");
  double mean = 0.0;
  for (const auto& f : folds) mean += f.test_cindex;
  mean /= static_cast<double>(folds.size());
  double var = 0.0;
  for (const auto& f : folds) var += (f.test_cindex - mean) * (f.test_cindex - mean);
  var /= static_cast<double>(folds.size());  // population variance
  RunMetrics m;
  m.folds = std::move(folds);
  m.mean_cindex = mean;
  m.std_cindex = std::sqrt(var);
  m.relabel_audit = std::move(audit);
  return m;
}

}  // namespace censurv::pipeline
