#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "amc/aef/ambiguity.hpp"
#include "amc/apm/block.hpp"
#include "amc/contrast/margin_loss.hpp"
#include "amc/refine/masked_refine.hpp"

namespace amc::net {

enum class Optimizer { AmsGrad, Sgd };

/// Hyperparameters of the segmentation network and its training.
/// Defaults follow the S3DIS settings, with two stages of widths (16, 32)
/// so a scene trains in seconds.
struct ModelConfig {
  // Backbone
  std::size_t stages = 2;
  std::vector<std::size_t> dims{16, 32};
  std::size_t ratio = 4;     // FPS downsampling factor per stage
  std::size_t group_k = 16;  // encoder neighborhood size

  // Ambiguity estimation
  std::size_t k = 24;
  double beta = 0.04;

  // Margins and contrast
  double mu = -1.0;
  double nu = 0.5;
  double tau = 0.3;

  // Objective weights
  double lambda = 0.1;
  double omega = 0.01;

  // Masked refinement
  double epsilon_lo = 0.9;
  double epsilon_hi = 1.0;
  double gamma = 1.0;
  std::size_t k_tilde = 12;
  refine::CrossMaskMode cross_mode = refine::CrossMaskMode::Single;
  bool use_refine = true;

  // Ambiguity prediction
  bool apm_detach = true;
  std::vector<std::size_t> apm_widths = apm::kDefaultWidths;

  // Optimization. `momentum` is the first-moment decay for AMSGrad and the
  // heavy-ball coefficient for SGD.
  Optimizer optimizer = Optimizer::AmsGrad;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 150;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;

  void validate() const;

  aef::AefConfig aef(std::size_t stage_points) const;
  contrast::MarginConfig margin() const { return {mu, nu, tau}; }
  refine::RefineConfig refine() const { return {epsilon_lo, epsilon_hi, gamma, k_tilde, cross_mode}; }

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace amc::net
