#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "amc/ad/tensor.hpp"
#include "amc/geom/point_cloud.hpp"
#include "amc/net/model.hpp"

namespace amc::net {

/// SGD with heavy-ball momentum: v = momentum * v + g; p -= lr * v.
class MomentumSgd {
 public:
  explicit MomentumSgd(double momentum = 0.9);

  void step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, double lr);
  void reset() { velocity_.clear(); }

 private:
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

/// Adam with bias correction and a non-decreasing second-moment estimate
/// (AMSGrad): p -= lr * m_hat / (sqrt(max_t v_hat) + eps).
class AmsGrad {
 public:
  explicit AmsGrad(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, double lr);

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::vector<std::vector<double>> vmax_;
};

/// Cosine schedule from `base` at epoch 0 towards 0 at `epochs`.
double cosine_lr(double base, std::size_t epoch, std::size_t epochs);

struct EpochReport {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossReport loss;  // mean over the epoch's scenes
};

using EpochCallback = std::function<void(const EpochReport&, const Model&)>;

/// Runs cfg.epochs passes over the scenes in order, batch_size scenes per
/// step. Throws std::runtime_error if the loss or any parameter becomes
/// non-finite.
std::vector<EpochReport> train(Model& model, std::span<const geom::PointCloud> scenes,
                               const EpochCallback& on_epoch = {});

/// Same over precomputed plans.
std::vector<EpochReport> train_plans(Model& model, std::span<const ScenePlan> plans,
                                     const EpochCallback& on_epoch = {});

}  // namespace amc::net
