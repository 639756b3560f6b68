#include "amc/apm/block.hpp"

#include <cmath>
#include <stdexcept>

#include "amc/random.hpp"

namespace amc::apm {

ApmBlock::ApmBlock(std::size_t stage, std::size_t feature_dim, std::uint64_t seed, std::vector<std::size_t> widths)
    : stage_(stage), feature_dim_(feature_dim) {
  if (feature_dim == 0) {
    throw std::invalid_argument("ApmBlock: feature dimension must be at least 1");
  }
  if (widths.empty() || widths.back() != 1) {
    throw std::invalid_argument("ApmBlock: the last layer must have width 1");
  }
  Rng rng(seed);
  std::size_t in = input_dim();
  for (std::size_t out : widths) {
    if (out == 0) {
      throw std::invalid_argument("ApmBlock: zero layer width");
    }
    Layer layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    layer.weight = ad::Tensor({out, in});
    for (double& w : layer.weight.data) {
      w = rng.uniform(-limit, limit);
    }
    layer.bias = ad::Tensor({out}, 0.0);
    layer.gamma = ad::Tensor({out}, 1.0);
    layer.beta = ad::Tensor({out}, 0.0);
    layer.stats = ad::BatchNormStats(out);
    layers_.push_back(std::move(layer));
    in = out;
  }
}

std::vector<std::size_t> ApmBlock::layer_dims() const {
  std::vector<std::size_t> dims{input_dim()};
  for (const auto& layer : layers_) {
    dims.push_back(layer.weight.shape[0]);
  }
  return dims;
}

std::vector<ad::Tensor*> ApmBlock::parameters() {
  std::vector<ad::Tensor*> out;
  for (auto& layer : layers_) {
    out.insert(out.end(), {&layer.weight, &layer.bias, &layer.gamma, &layer.beta});
  }
  return out;
}

std::vector<const ad::Tensor*> ApmBlock::parameters() const {
  std::vector<const ad::Tensor*> out;
  for (const auto& layer : layers_) {
    out.insert(out.end(), {&layer.weight, &layer.bias, &layer.gamma, &layer.beta});
  }
  return out;
}

std::vector<std::string> ApmBlock::parameter_names(const std::string& prefix) const {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < layers_.size(); ++t) {
    const std::string base = prefix + "layer" + std::to_string(t + 1) + ".";
    for (const char* name : {"weight", "bias", "bn_gamma", "bn_beta"}) {
      out.push_back(base + name);
    }
  }
  return out;
}

std::vector<double> concat_input(const geom::Vec3& p, std::span<const double> f) {
  if (f.empty()) {
    throw std::invalid_argument("concat_input: feature vector must not be empty");
  }
  std::vector<double> z(p.begin(), p.end());
  z.insert(z.end(), f.begin(), f.end());
  return z;
}

Matrix concat_inputs(std::span<const geom::Vec3> positions, const Matrix& features) {
  if (positions.size() != features.rows) {
    throw std::invalid_argument("concat_inputs: positions and features differ in length");
  }
  if (features.cols == 0) {
    throw std::invalid_argument("concat_inputs: feature vector must not be empty");
  }
  Matrix z(features.rows, features.cols + 3);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto row = concat_input(positions[i], features.row(i));
    std::copy(row.begin(), row.end(), z.row(i).begin());
  }
  return z;
}

std::vector<ad::Var> bind(ad::Tape& tape, ApmBlock& block, bool requires_grad) {
  std::vector<ad::Var> vars;
  for (ad::Tensor* t : block.parameters()) {
    vars.push_back(tape.leaf(*t, requires_grad));
  }
  return vars;
}

ad::Var block_forward(ad::Var z, std::span<const ad::Var> params, ApmBlock& block, ad::Mode mode, bool update_stats) {
  if (params.size() != 4 * block.layer_count()) {
    throw std::invalid_argument("block_forward: parameter count mismatch");
  }
  if (z.value().rank() != 2 || z.value().cols() != block.input_dim()) {
    throw std::invalid_argument("block_forward: expected input width " + std::to_string(block.input_dim()));
  }
  if (z.value().rows() == 0) {
    throw std::invalid_argument("block_forward: empty batch");
  }
  ad::Var h = z;
  for (std::size_t t = 0; t < block.layer_count(); ++t) {
    h = ad::affine(h, params[4 * t], params[4 * t + 1]);
    h = ad::batch_norm(h, params[4 * t + 2], params[4 * t + 3], block.layers()[t].stats, mode, ad::kBatchNormEps,
                       ad::kBatchNormMomentum, update_stats);
    h = ad::sigmoid(h);
  }
  return h;
}

PredictedAmbiguity block_forward(const Matrix& z, ApmBlock& block, ad::Mode mode, bool update_stats) {
  ad::Tape tape;
  const auto params = bind(tape, block, false);
  ad::Var in = tape.constant(ad::Tensor::matrix(z.rows, z.cols, z.data));
  ad::Var out = block_forward(in, params, block, mode, update_stats);
  return PredictedAmbiguity{out.value().data, block.stage()};
}

double loss_reg(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("loss_reg: " + std::to_string(pred.size()) + " predictions for " +
                                std::to_string(target.size()) + " targets");
  }
  if (pred.empty()) {
    return 0.0;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += std::abs(pred[i] - target[i]);
  }
  return s / static_cast<double>(pred.size());
}

double loss_reg(const PredictedAmbiguity& pred, const aef::AmbiguityMap& target) {
  return loss_reg(pred.values, target.values);
}

ad::Var loss_reg(ad::Var pred, std::span<const double> target) {
  if (pred.value().size() != target.size()) {
    throw std::invalid_argument("loss_reg: " + std::to_string(pred.value().size()) + " predictions for " +
                                std::to_string(target.size()) + " targets");
  }
  ad::Var t = pred.tape().constant(ad::Tensor(pred.value().shape, std::vector<double>(target.begin(), target.end())));
  return ad::mean(ad::abs(ad::sub(pred, t)));
}

}  // namespace amc::apm
