#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amc/ad/ops.hpp"
#include "amc/aef/ambiguity.hpp"
#include "amc/geom/point_cloud.hpp"
#include "amc/matrix.hpp"

namespace amc::apm {

/// Hidden and output widths after the (3 + D) input: 32, 16, 8, 4, 2, 1.
inline const std::vector<std::size_t> kDefaultWidths{32, 16, 8, 4, 2, 1};

/// Per-stage ambiguity regressor. Every layer is affine -> batch norm ->
/// sigmoid, ending in a single output per point.
class ApmBlock {
 public:
  struct Layer {
    ad::Tensor weight;  // (out, in)
    ad::Tensor bias;    // (out)
    ad::Tensor gamma;   // batch-norm scale, (out)
    ad::Tensor beta;    // batch-norm shift, (out)
    ad::BatchNormStats stats;

    bool operator==(const Layer&) const = default;
  };

  ApmBlock() = default;
  /// Glorot-uniform weights, zero biases, unit gamma, zero beta.
  ApmBlock(std::size_t stage, std::size_t feature_dim, std::uint64_t seed,
           std::vector<std::size_t> widths = kDefaultWidths);

  std::size_t stage() const { return stage_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t input_dim() const { return feature_dim_ + 3; }
  /// (3 + D, widths...)
  std::vector<std::size_t> layer_dims() const;
  std::size_t layer_count() const { return layers_.size(); }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Trainable tensors in a fixed order: per layer weight, bias, gamma, beta.
  std::vector<ad::Tensor*> parameters();
  std::vector<const ad::Tensor*> parameters() const;
  std::vector<std::string> parameter_names(const std::string& prefix) const;

  bool operator==(const ApmBlock&) const = default;

 private:
  std::size_t stage_ = 0;
  std::size_t feature_dim_ = 0;
  std::vector<Layer> layers_;
};

struct PredictedAmbiguity {
  std::vector<double> values;
  std::size_t stage = 0;
};

/// z = p followed by f. Throws std::invalid_argument when f is empty.
std::vector<double> concat_input(const geom::Vec3& p, std::span<const double> f);
/// Row-wise concat_input over a stage.
Matrix concat_inputs(std::span<const geom::Vec3> positions, const Matrix& features);

/// Leaves for the block's parameters, in parameters() order.
std::vector<ad::Var> bind(ad::Tape& tape, ApmBlock& block, bool requires_grad = true);

/// Forward pass on the tape; returns an (n, 1) matrix of predictions.
/// `update_stats` folds train-mode batch statistics into the running ones.
ad::Var block_forward(ad::Var z, std::span<const ad::Var> params, ApmBlock& block, ad::Mode mode,
                      bool update_stats = true);

/// Value-only forward pass.
PredictedAmbiguity block_forward(const Matrix& z, ApmBlock& block, ad::Mode mode, bool update_stats = true);

/// Mean absolute error between predicted and target ambiguities.
double loss_reg(const PredictedAmbiguity& pred, const aef::AmbiguityMap& target);
double loss_reg(std::span<const double> pred, std::span<const double> target);
/// Same objective on the tape; `pred` is (n, 1).
ad::Var loss_reg(ad::Var pred, std::span<const double> target);

}  // namespace amc::apm
