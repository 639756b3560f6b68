#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amc/aef/ambiguity.hpp"
#include "amc/matrix.hpp"

namespace amc::contrast {

inline constexpr double kNormEpsilon = 1e-12;

struct MarginConfig {
  double mu = -1.0;
  double nu = 0.5;
  double tau = 0.3;

  void validate() const;
};

struct MarginMap {
  std::vector<double> values;
  std::size_t stage = 0;
};

/// m = mu * a + nu
double margin(double a, const MarginConfig& cfg);
MarginMap margin_map(const aef::AmbiguityMap& ambiguities, const MarginConfig& cfg);

/// Cosine similarity with each norm clamped below by `norm_epsilon`;
/// the result is clipped to [-1, 1] against rounding.
double cosine_sim(std::span<const double> u, std::span<const double> v, double norm_epsilon = kNormEpsilon);

/// Partials of cosine_sim with respect to both arguments.
void cosine_sim_grad(std::span<const double> u, std::span<const double> v, std::span<double> du,
                     std::span<double> dv, double norm_epsilon = kNormEpsilon);

struct EmbeddingPair {
  double intra = 0.0;  // exp((sim+ - m) / tau)
  double inter = 0.0;  // exp(sim- / tau)
};

EmbeddingPair contrastive_embeddings(double sim_plus, double sim_minus, double m, double tau);

/// Everything the adaptive margin objective needs at one stage.
struct ContrastBatch {
  Matrix features;                                   // n x D
  std::span<const aef::NeighborPartition> partitions;  // one per point
  std::span<const double> margins;                   // one per point
};

struct LossResult {
  double loss = 0.0;
  Matrix grad;                        // dL/dfeatures, same shape as features
  std::vector<double> margin_grad;    // dL/dm_i
  std::size_t contributing = 0;       // points with a non-empty inter set
};

/// Mean over points with inter neighbors of
///   -log( sum_j emb_ij / (sum_j emb_ij + sum_k emb_ik) ),
/// with analytic gradients. Margins are treated as constants for the
/// feature gradient. Exponents are max-shifted before summation.
LossResult loss_am(const ContrastBatch& batch, const MarginConfig& cfg);

/// lambda * l_ce + (1 - lambda) * sum(l_am_stages)
double loss_seg(double l_ce, std::span<const double> l_am_stages, double lambda);

}  // namespace amc::contrast
