#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amc/ad/ops.hpp"
#include "amc/aef/ambiguity.hpp"
#include "amc/apm/block.hpp"
#include "amc/geom/point_cloud.hpp"
#include "amc/matrix.hpp"
#include "amc/net/model_config.hpp"

namespace amc::net {

struct NamedTensor {
  std::string name;
  ad::Tensor value;
};

/// Point-based encoder/decoder segmentation network with one ambiguity
/// predictor per downsampled stage.
///
/// Level 0 holds every input point. Encoder stage s samples ceil(n / ratio)
/// points of level s-1 by FPS, groups the `group_k` nearest parent points of
/// each and max-pools affine -> BN -> ReLU of (relative position, parent
/// feature). The decoder walks back up, concatenating each level's encoder
/// features with the nearest coarser-level decoder feature.
class Model {
 public:
  /// Affine -> batch norm -> (ReLU) unit.
  struct Unit {
    ad::Tensor weight;  // (out, in)
    ad::Tensor bias;
    ad::Tensor gamma;
    ad::Tensor beta;
    ad::BatchNormStats stats;

    bool operator==(const Unit&) const = default;
  };

  Model() = default;
  /// `in_features` is the per-point feature width of the input clouds
  /// (possibly 0); weights are Glorot-uniform from `cfg.seed`.
  Model(ModelConfig cfg, std::size_t in_features, std::size_t num_classes);

  const ModelConfig& config() const { return cfg_; }
  std::size_t in_features() const { return in_features_; }
  std::size_t num_classes() const { return num_classes_; }
  /// Feature width at level 0..stages.
  std::size_t level_dim(std::size_t level) const;

  Unit& stem() { return stem_; }
  std::vector<Unit>& encoders() { return encoders_; }
  std::vector<Unit>& decoders() { return decoders_; }  // decoders_[s] produces level s
  ad::Tensor& head_weight() { return head_w_; }
  ad::Tensor& head_bias() { return head_b_; }
  std::vector<apm::ApmBlock>& apm() { return apm_; }  // apm_[s - 1] serves stage s
  const std::vector<apm::ApmBlock>& apm() const { return apm_; }

  /// Trainable tensors in a fixed order, with matching names.
  std::vector<ad::Tensor*> parameters();
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

  /// Every tensor needed to restore the model: parameters, batch-norm
  /// running statistics and shape metadata.
  std::vector<NamedTensor> state() const;
  /// Rebuilds a model from `cfg` and a state(). Throws std::invalid_argument
  /// on missing, unknown or misshapen tensors.
  static Model from_state(const ModelConfig& cfg, std::span<const NamedTensor> state);

  bool operator==(const Model&) const = default;

 private:
  std::vector<std::pair<std::string, ad::BatchNormStats*>> running_stats();

  ModelConfig cfg_;
  std::size_t in_features_ = 0;
  std::size_t num_classes_ = 0;
  Unit stem_;
  std::vector<Unit> encoders_;
  std::vector<Unit> decoders_;
  ad::Tensor head_w_;
  ad::Tensor head_b_;
  std::vector<apm::ApmBlock> apm_;
};

/// Precomputed geometry of one stage of one scene.
struct StagePlan {
  std::vector<std::size_t> indices;     // into the parent level
  std::vector<geom::Vec3> positions;
  std::vector<geom::Label> labels;      // mined from the parent level
  std::size_t group_size = 0;           // group_k capped at the parent size
  std::vector<std::size_t> group;       // group_size parent indices per point, row-major
  std::vector<double> relative;         // parent position - center, per group entry
  std::vector<std::size_t> upsample;    // nearest point of this level for each parent point
  std::vector<aef::NeighborPartition> partitions;
  aef::AmbiguityMap ambiguity;
  std::vector<double> margins;
};

/// Everything about a scene that does not depend on weights.
struct ScenePlan {
  std::vector<geom::Vec3> positions;  // centered input positions
  std::vector<geom::Label> labels;
  Matrix features;                    // input features, possibly 0 columns
  std::size_t num_classes = 0;
  bool labeled = false;
  std::vector<StagePlan> stages;      // stages[s - 1] is stage s
};

/// Builds the sampling, grouping and upsampling plan for a cloud. With
/// `labeled`, also mines stage labels and computes ambiguities and margins.
ScenePlan plan_scene(const geom::PointCloud& cloud, const ModelConfig& cfg, bool labeled = true);

/// Labels of sampled points: the stage inherits the parent labels of the
/// points it keeps.
std::vector<geom::Label> mine_labels(std::span<const geom::Label> parent, std::span<const std::size_t> indices);

/// Per-stage state after a forward pass.
struct StageState {
  std::size_t stage = 0;
  std::vector<std::size_t> indices;
  std::vector<geom::Vec3> positions;
  Matrix encoded;                    // encoder output, the predictor's feature input
  Matrix features;                   // refined decoder features
  std::vector<geom::Label> labels;
  std::vector<double> ambiguity;     // empty for unlabeled scenes
  std::vector<double> margins;
  std::vector<double> predicted;     // APM output used for refinement
};

struct LossReport {
  double l_ce = 0.0;
  std::vector<double> l_am;
  std::vector<double> l_reg;
  double l_seg = 0.0;
  double l_total = 0.0;
};

/// lambda * l_ce + (1 - lambda) * sum(l_am) and that plus omega * sum(l_reg).
LossReport loss_joint(double l_ce, std::vector<double> l_am, std::vector<double> l_reg, double lambda, double omega);

struct ForwardResult {
  Matrix scores;  // (n, C)
  std::vector<StageState> stages;
};

/// Value-only pass. Infer mode uses running statistics and never changes the
/// model.
ForwardResult forward(Model& model, const ScenePlan& plan, ad::Mode mode, bool update_stats = false);

struct GradientResult {
  LossReport report;
  std::vector<ad::Tensor> grads;  // parameters() order
};

/// Train-mode pass with the joint loss and its gradient. Batch-norm running
/// statistics are updated only when `update_stats` is set.
GradientResult compute_gradients(Model& model, const ScenePlan& plan, bool update_stats = true);

struct Prediction {
  std::vector<geom::Label> labels;
  std::vector<double> ambiguity;  // stage-1 prediction carried to every point
};

/// Argmax labels (ties to the lowest class) and predicted ambiguity.
Prediction predict(Model& model, const geom::PointCloud& cloud);

}  // namespace amc::net
