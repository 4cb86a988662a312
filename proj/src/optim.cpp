#include "censurv/optim.hpp"

#include <cmath>

namespace censurv::diff {

Parameter& ParameterSet::add(const std::string& name, Tensor tensor) {
  if (index_.count(name)) throw_validation("ParameterSet: duplicate parameter name '" + name + "'");
  tensor.requires_grad = true;
  index_[name] = items_.size();
  items_.push_back(Parameter{name, std::move(tensor)});
  return items_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw_validation("ParameterSet: unknown parameter '" + name + "'");
  return items_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw_validation("ParameterSet: unknown parameter '" + name + "'");
  return items_[it->second];
}

bool ParameterSet::contains(const std::string& name) const { return index_.count(name) > 0; }

std::map<std::string, std::vector<double>> ParameterSet::snapshot() const {
  std::map<std::string, std::vector<double>> snap;
  for (const auto& p : items_) snap[p.name] = p.tensor.values;
  return snap;
}

void ParameterSet::restore(const std::map<std::string, std::vector<double>>& snap) {
  for (auto& p : items_) {
    auto it = snap.find(p.name);
    if (it == snap.end()) throw_validation("ParameterSet::restore: snapshot missing '" + p.name + "'");
    if (it->second.size() != p.tensor.values.size())
      throw_validation("ParameterSet::restore: size mismatch for '" + p.name + "'");
    p.tensor.values = it->second;
  }
}

void adam_step(ParameterSet& params, const GradMap& grads, AdamState& state, double lr) {
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (auto& p : params.items()) {
    auto git = grads.find(p.name);
    if (git == grads.end())
      throw_validation("adam_step: missing gradient for parameter '" + p.name + "'");
    const auto& g = git->second;
    if (g.size() != p.tensor.values.size())
      throw_validation("adam_step: gradient size mismatch for parameter '" + p.name + "'");
    auto& m = state.first_moment[p.name];
    auto& v = state.second_moment[p.name];
    if (m.empty()) m.assign(g.size(), 0.0);
    if (v.empty()) v.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.tensor.values[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace censurv::diff
