#pragma once

#include <map>
#include <string>
#include <vector>

#include "censurv/tensor.hpp"

namespace censurv::diff {

struct Parameter {
  std::string name;
  Tensor tensor;  // requires_grad is always true for parameters
};

// Ordered registry of named parameters. Names are unique within a set.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor tensor);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  // Value snapshot keyed by name, for best-model checkpointing.
  std::map<std::string, std::vector<double>> snapshot() const;
  void restore(const std::map<std::string, std::vector<double>>& snap);

 private:
  std::vector<Parameter> items_;
  std::map<std::string, std::size_t> index_;
};

using GradMap = std::map<std::string, std::vector<double>>;

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

// Standard Adam update with bias correction. Errors if a parameter has no
// entry in `grads`.
void adam_step(ParameterSet& params, const GradMap& grads, AdamState& state, double lr);

}  // namespace censurv::diff
