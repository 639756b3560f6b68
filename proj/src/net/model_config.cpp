#include "amc/net/model_config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace amc::net {

void ModelConfig::validate() const {
  if (stages == 0) {
    throw std::invalid_argument("stages must be at least 1");
  }
  if (dims.size() != stages) {
    throw std::invalid_argument("dims lists " + std::to_string(dims.size()) + " widths for " + std::to_string(stages) +
                                " stages");
  }
  if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end()) {
    throw std::invalid_argument("dims must be positive");
  }
  if (ratio < 2) {
    throw std::invalid_argument("ratio must be at least 2");
  }
  if (group_k == 0) {
    throw std::invalid_argument("group_k must be at least 1");
  }
  aef::AefConfig{k, beta}.validate();
  margin().validate();
  refine().validate();
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw std::invalid_argument("omega must be non-negative");
  }
  if (apm_widths.empty() || apm_widths.back() != 1 ||
      std::find(apm_widths.begin(), apm_widths.end(), std::size_t{0}) != apm_widths.end()) {
    throw std::invalid_argument("apm widths must be positive and end in 1");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw std::invalid_argument("lr must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (batch_size == 0) {
    throw std::invalid_argument("batch_size must be at least 1");
  }
}

aef::AefConfig ModelConfig::aef(std::size_t stage_points) const {
  aef::AefConfig cfg;
  cfg.k = std::min(k, stage_points);
  cfg.beta = beta;
  return cfg;
}

}  // namespace amc::net
