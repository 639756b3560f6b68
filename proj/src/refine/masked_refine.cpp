#include "amc/refine/masked_refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "amc/geom/neighbors.hpp"

namespace amc::refine {

void RefineConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(epsilon_lo) || !unit(epsilon_hi) || !unit(gamma)) {
    throw std::invalid_argument("RefineConfig: epsilon_lo, epsilon_hi and gamma must lie in [0, 1]");
  }
  if (epsilon_lo > epsilon_hi) {
    throw std::invalid_argument("RefineConfig: epsilon_lo must not exceed epsilon_hi");
  }
  if (k_tilde < 2) {
    throw std::invalid_argument("RefineConfig: k_tilde must be at least 2");
  }
}

bool self_mask(double a_pred, const RefineConfig& cfg) { return a_pred >= cfg.epsilon_lo && a_pred <= cfg.epsilon_hi; }

CrossMask cross_mask(std::span<const double> neighbor_ambiguities, CrossMaskMode mode) {
  if (neighbor_ambiguities.empty()) {
    throw std::invalid_argument("cross_mask: no neighbor ambiguities");
  }
  CrossMask out;
  out.bits.assign(neighbor_ambiguities.size(), 0);
  const auto it = std::min_element(neighbor_ambiguities.begin(), neighbor_ambiguities.end());
  out.pooled = *it;
  if (mode == CrossMaskMode::Single) {
    out.bits[static_cast<std::size_t>(it - neighbor_ambiguities.begin())] = 1;
  } else {
    for (std::size_t h = 0; h < neighbor_ambiguities.size(); ++h) {
      out.bits[h] = neighbor_ambiguities[h] == out.pooled ? 1 : 0;
    }
  }
  return out;
}

std::vector<double> refine_embedding(std::span<const double> f, const Matrix& neighbor_features, bool self_bit,
                                     std::span<const std::uint8_t> cross_bits, double gamma) {
  if (neighbor_features.rows != cross_bits.size()) {
    throw std::invalid_argument("refine_embedding: one cross bit per neighbor required");
  }
  if (neighbor_features.rows > 0 && neighbor_features.cols != f.size()) {
    throw std::invalid_argument("refine_embedding: neighbor feature width mismatch");
  }
  std::vector<double> out(f.begin(), f.end());
  if (!self_bit || gamma == 0.0) {
    return out;
  }
  std::vector<double> refined(f.size(), 0.0);
  bool any = false;
  for (std::size_t h = 0; h < cross_bits.size(); ++h) {
    if (!cross_bits[h]) {
      continue;
    }
    const auto row = neighbor_features.row(h);
    for (std::size_t c = 0; c < f.size(); ++c) {
      refined[c] = any ? refined[c] + row[c] : row[c];
    }
    any = true;
  }
  if (!any) {
    return out;
  }
  if (gamma == 1.0) {
    return refined;
  }
  for (std::size_t c = 0; c < f.size(); ++c) {
    out[c] = gamma * refined[c] + (1.0 - gamma) * f[c];
  }
  return out;
}

MaskSet build_masks(std::span<const geom::Vec3> positions, std::span<const double> predicted,
                    const RefineConfig& cfg) {
  cfg.validate();
  const std::size_t n = positions.size();
  if (predicted.size() != n) {
    throw std::invalid_argument("build_masks: one predicted ambiguity per point required");
  }
  MaskSet masks;
  masks.self_mask.resize(n);
  masks.cross_mask.resize(n);
  masks.pooled.assign(n, 0.0);
  masks.neighbors.resize(n);
  if (n == 0) {
    return masks;
  }
  const std::size_t k = std::min(cfg.k_tilde, n);
  const auto lists = geom::knn_all(positions, k);
  std::vector<double> amb;
  for (std::size_t i = 0; i < n; ++i) {
    masks.self_mask[i] = self_mask(predicted[i], cfg) ? 1 : 0;
    auto& nb = masks.neighbors[i];
    nb.assign(lists[i].neighbors.begin() + 1, lists[i].neighbors.end());  // drop the anchor
    if (nb.empty()) {
      continue;
    }
    amb.clear();
    for (std::size_t h : nb) {
      amb.push_back(predicted[h]);
    }
    CrossMask cm = cross_mask(amb, cfg.cross_mode);
    masks.pooled[i] = cm.pooled;
    masks.cross_mask[i] = std::move(cm.bits);
  }
  return masks;
}

RefineResult refine_stage(const Matrix& features, const apm::PredictedAmbiguity& pred,
                          std::span<const geom::Vec3> positions, const RefineConfig& cfg) {
  if (features.rows != positions.size()) {
    throw std::invalid_argument("refine_stage: features and positions differ in length");
  }
  RefineResult out{features, build_masks(positions, pred.values, cfg)};
  Matrix neighborhood;
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto& nb = out.masks.neighbors[i];
    neighborhood = Matrix(nb.size(), features.cols);
    for (std::size_t h = 0; h < nb.size(); ++h) {
      std::copy_n(features.row(nb[h]).begin(), features.cols, neighborhood.row(h).begin());
    }
    const auto refined =
        refine_embedding(features.row(i), neighborhood, out.masks.self_mask[i] != 0, out.masks.cross_mask[i], cfg.gamma);
    std::copy(refined.begin(), refined.end(), out.features.row(i).begin());
  }
  return out;
}

ad::RowMix refine_plan(const MaskSet& masks, double gamma) {
  const std::size_t n = masks.self_mask.size();
  ad::RowMix plan(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> sources;
    if (masks.self_mask[i] && gamma != 0.0) {
      for (std::size_t h = 0; h < masks.neighbors[i].size(); ++h) {
        if (masks.cross_mask[i][h]) {
          sources.push_back(masks.neighbors[i][h]);
        }
      }
    }
    if (sources.empty()) {
      plan[i] = {{i, 1.0}};
      continue;
    }
    if (gamma == 1.0) {
      for (std::size_t s : sources) plan[i].emplace_back(s, 1.0);
      continue;
    }
    for (std::size_t s : sources) plan[i].emplace_back(s, gamma);
    plan[i].emplace_back(i, 1.0 - gamma);
  }
  return plan;
}

}  // namespace amc::refine
