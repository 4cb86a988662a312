#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace censurv::pipeline {

struct FoldMetrics {
  int fold_index = 0;
  double test_cindex = 0.0;
  double logrank_p = 0.0;  // NaN when the test is undefined for the fold
};

// Audit of applied relabels against ground-truth times (synthetic cohorts).
struct RelabelAudit {
  std::size_t count = 0;
  std::optional<double> mae_raw;      // |censored time - true time|, before
  std::optional<double> mae_updated;  // |surrogate time - true time|, after
};

struct RunMetrics {
  std::vector<FoldMetrics> folds;
  double mean_cindex = 0.0;
  double std_cindex = 0.0;  // population standard deviation over folds
  RelabelAudit relabel_audit;
};

// Fills mean/std from the fold entries.
RunMetrics finalize_metrics(std::vector<FoldMetrics> folds, RelabelAudit audit);

}  // namespace censurv::pipeline
