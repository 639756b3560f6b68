#include "amc/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace amc::net {

MomentumSgd::MomentumSgd(double momentum) : momentum_(momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("MomentumSgd: momentum must lie in [0, 1)");
  }
}

void MomentumSgd::step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, double lr) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("MomentumSgd::step: one gradient per parameter required");
  }
  if (velocity_.empty()) {
    for (const ad::Tensor* p : params) velocity_.emplace_back(p->size(), 0.0);
  }
  if (velocity_.size() != params.size()) {
    throw std::invalid_argument("MomentumSgd::step: parameter set changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& v = velocity_[i];
    auto& p = params[i]->data;
    const auto& g = grads[i].data;
    if (g.size() != p.size() || v.size() != p.size()) {
      throw std::invalid_argument("MomentumSgd::step: gradient shape mismatch");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = momentum_ * v[j] + g[j];
      p[j] -= lr * v[j];
    }
  }
}

AmsGrad::AmsGrad(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw std::invalid_argument("AmsGrad: betas must lie in [0, 1) and eps must be positive");
  }
}

void AmsGrad::step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, double lr) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("AmsGrad::step: one gradient per parameter required");
  }
  if (m_.empty()) {
    for (const ad::Tensor* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
      vmax_.emplace_back(p->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("AmsGrad::step: parameter set changed between steps");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i]->data;
    const auto& g = grads[i].data;
    if (g.size() != p.size()) {
      throw std::invalid_argument("AmsGrad::step: gradient shape mismatch");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      vmax_[i][j] = std::max(vmax_[i][j], v_[i][j]);
      p[j] -= lr * (m_[i][j] / c1) / (std::sqrt(vmax_[i][j] / c2) + eps_);
    }
  }
}

double cosine_lr(double base, std::size_t epoch, std::size_t epochs) {
  if (epochs == 0) {
    return base;
  }
  const double t = static_cast<double>(epoch) / static_cast<double>(epochs);
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * t));
}

namespace {

void accumulate(LossReport& acc, const LossReport& r, bool first) {
  if (first) {
    acc = r;
    return;
  }
  acc.l_ce += r.l_ce;
  acc.l_seg += r.l_seg;
  acc.l_total += r.l_total;
  for (std::size_t s = 0; s < acc.l_am.size(); ++s) acc.l_am[s] += r.l_am[s];
  for (std::size_t s = 0; s < acc.l_reg.size(); ++s) acc.l_reg[s] += r.l_reg[s];
}

void divide(LossReport& r, double n) {
  r.l_ce /= n;
  r.l_seg /= n;
  r.l_total /= n;
  for (double& v : r.l_am) v /= n;
  for (double& v : r.l_reg) v /= n;
}

bool all_finite(Model& model) {
  for (const ad::Tensor* t : model.parameters()) {
    for (double v : t->data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<EpochReport> train_plans(Model& model, std::span<const ScenePlan> plans, const EpochCallback& on_epoch) {
  if (plans.empty()) {
    throw std::invalid_argument("train: no scenes");
  }
  const ModelConfig& cfg = model.config();
  AmsGrad adam(cfg.momentum);
  MomentumSgd sgd(cfg.momentum);
  const auto params = model.parameters();
  std::vector<EpochReport> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochReport rep;
    rep.epoch = epoch;
    rep.lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
    std::size_t seen = 0;
    for (std::size_t first = 0; first < plans.size(); first += cfg.batch_size) {
      const std::size_t last = std::min(first + cfg.batch_size, plans.size());
      std::vector<ad::Tensor> grads;
      for (std::size_t i = first; i < last; ++i) {
        GradientResult gr;
        try {
          gr = compute_gradients(model, plans[i], true);
        } catch (const std::runtime_error& e) {
          throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", scene " +
                                   std::to_string(i) + ": " + e.what());
        }
        if (!std::isfinite(gr.report.l_total)) {
          throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", scene " +
                                   std::to_string(i) + ": non-finite loss");
        }
        accumulate(rep.loss, gr.report, seen == 0);
        ++seen;
        if (grads.empty()) {
          grads = std::move(gr.grads);
        } else {
          for (std::size_t p = 0; p < grads.size(); ++p) {
            for (std::size_t j = 0; j < grads[p].size(); ++j) grads[p].data[j] += gr.grads[p].data[j];
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(last - first);
      if (last - first > 1) {
        for (auto& g : grads) {
          for (double& v : g.data) v *= inv;
        }
      }
      if (cfg.optimizer == Optimizer::AmsGrad) {
        adam.step(params, grads, rep.lr);
      } else {
        sgd.step(params, grads, rep.lr);
      }
      if (!all_finite(model)) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": non-finite parameters");
      }
    }
    divide(rep.loss, static_cast<double>(seen));
    history.push_back(rep);
    if (on_epoch) on_epoch(history.back(), model);
  }
  return history;
}

std::vector<EpochReport> train(Model& model, std::span<const geom::PointCloud> scenes, const EpochCallback& on_epoch) {
  std::vector<ScenePlan> plans;
  plans.reserve(scenes.size());
  for (const auto& cloud : scenes) plans.push_back(plan_scene(cloud, model.config(), true));
  return train_plans(model, plans, on_epoch);
}

}  // namespace amc::net
