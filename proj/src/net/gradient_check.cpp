#include "amc/net/gradient_check.hpp"

#include <stdexcept>
#include <vector>

#include "amc/random.hpp"

namespace amc::net {

ToyProblem make_toy_problem(std::uint64_t seed, std::size_t points) {
  if (points < 8 || points > 64) {
    throw std::invalid_argument("make_toy_problem: point count must lie in [8, 64]");
  }
  Rng rng(seed);
  std::vector<geom::Vec3> positions;
  std::vector<geom::Label> labels;
  Matrix features(points, 1);
  for (std::size_t i = 0; i < points; ++i) {
    const geom::Vec3 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)};
    positions.push_back(p);
    // Mostly a planar split with a few flipped labels so every stage has
    // ambiguous points.
    geom::Label l = p[0] + 0.3 * p[1] > 0.0 ? 1 : 0;
    if (rng.uniform() < 0.15) l = 2;
    labels.push_back(l);
    features(i, 0) = rng.normal();
  }
  const geom::PointCloud cloud(std::move(positions), std::move(labels), 3, std::move(features));

  ModelConfig cfg;
  cfg.dims = {4, 6};
  cfg.ratio = 2;
  cfg.group_k = 4;
  cfg.k = 6;
  cfg.k_tilde = 4;
  cfg.apm_widths = {4, 2, 1};
  // The stop-gradient on predictor inputs would make the analytic gradient
  // differ from the true derivative of the loss.
  cfg.apm_detach = false;
  cfg.seed = rng.next();
  ToyProblem toy{Model(cfg, 1, 3), {}};
  toy.plan = plan_scene(cloud, cfg, true);
  return toy;
}

ad::GradCheckReport check_joint_gradient(const Model& model, const ScenePlan& plan, double step) {
  Model work = model;
  const GradientResult analytic = compute_gradients(work, plan, false);
  std::vector<double> flat_grad;
  for (const auto& g : analytic.grads) flat_grad.insert(flat_grad.end(), g.data.begin(), g.data.end());
  const std::vector<double> params = model.flat_parameters();
  auto loss = [&](std::span<const double> p) {
    Model probe = model;
    probe.set_flat_parameters(p);
    return compute_gradients(probe, plan, false).report.l_total;
  };
  return ad::finite_diff_check(loss, params, flat_grad, step);
}

}  // namespace amc::net
