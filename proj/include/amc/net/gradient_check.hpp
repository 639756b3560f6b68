#pragma once

#include <cstddef>
#include <cstdint>

#include "amc/ad/gradcheck.hpp"
#include "amc/net/model.hpp"

namespace amc::net {

struct ToyProblem {
  Model model;
  ScenePlan plan;
};

/// Random two-stage model with under 1k parameters and a labeled random
/// cloud of `points` (at most 64) points with a one-channel feature.
ToyProblem make_toy_problem(std::uint64_t seed, std::size_t points = 48);

/// Central differences of the joint loss against compute_gradients over
/// every trainable parameter. Batch-norm running statistics are not touched.
ad::GradCheckReport check_joint_gradient(const Model& model, const ScenePlan& plan, double step = 1e-5);

}  // namespace amc::net
