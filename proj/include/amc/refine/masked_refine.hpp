#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "amc/ad/ops.hpp"
#include "amc/apm/block.hpp"
#include "amc/geom/point_cloud.hpp"
#include "amc/matrix.hpp"

namespace amc::refine {

/// How neighbors attaining the minimum ambiguity are marked. `Single` keeps
/// only the lowest-index minimizer; `Sum` marks every minimizer, so their
/// embeddings are added together.
enum class CrossMaskMode { Single, Sum };

struct RefineConfig {
  double epsilon_lo = 0.9;
  double epsilon_hi = 1.0;
  double gamma = 1.0;
  std::size_t k_tilde = 12;
  CrossMaskMode cross_mode = CrossMaskMode::Single;

  void validate() const;
};

/// 1 iff a_pred lies in the closed interval [epsilon_lo, epsilon_hi].
bool self_mask(double a_pred, const RefineConfig& cfg);

struct CrossMask {
  double pooled = 0.0;              // minimum neighbor ambiguity
  std::vector<std::uint8_t> bits;   // one per neighbor
};

/// Min-pools the neighbor ambiguities and marks the minimizer(s).
/// Throws std::invalid_argument on an empty sequence.
CrossMask cross_mask(std::span<const double> neighbor_ambiguities, CrossMaskMode mode = CrossMaskMode::Single);

/// gamma * f~ + (1 - gamma) * f, where f~ is the masked neighbor sum when
/// the self bit is set and f otherwise. Returns f unchanged (bit-exact) when
/// the self bit is clear or gamma is 0.
std::vector<double> refine_embedding(std::span<const double> f, const Matrix& neighbor_features, bool self_bit,
                                     std::span<const std::uint8_t> cross_bits, double gamma);

struct MaskSet {
  std::vector<std::uint8_t> self_mask;
  std::vector<std::vector<std::uint8_t>> cross_mask;
  std::vector<double> pooled;
  /// K~ - 1 nearest other points per anchor, ascending distance.
  std::vector<std::vector<std::size_t>> neighbors;
};

/// Masks for a stage from predicted ambiguities. Neighborhoods are K~
/// nearest over stage positions with the anchor removed; K~ is capped at
/// the stage size.
MaskSet build_masks(std::span<const geom::Vec3> positions, std::span<const double> predicted,
                    const RefineConfig& cfg);

struct RefineResult {
  Matrix features;
  MaskSet masks;
};

/// Refines every point of a stage against a snapshot of the incoming
/// features; refinements never read each other.
RefineResult refine_stage(const Matrix& features, const apm::PredictedAmbiguity& pred,
                          std::span<const geom::Vec3> positions, const RefineConfig& cfg);

/// The same refinement as a row-mixing plan for the autograd tape.
ad::RowMix refine_plan(const MaskSet& masks, double gamma);

}  // namespace amc::refine
