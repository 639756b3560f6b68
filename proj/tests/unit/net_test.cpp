#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "amc/geom/scene.hpp"
#include "amc/net/gradient_check.hpp"
#include "amc/net/model.hpp"
#include "amc/net/train.hpp"

using namespace amc;
using namespace amc::net;

namespace {

geom::PointCloud small_scene(std::uint64_t seed = 0) {
  geom::SceneSpec spec;
  spec.points_per_class = 100;
  spec.noise_sigma = 0.005;
  spec.seed = seed;
  return geom::synth_scene(spec);
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.dims = {8, 12};
  cfg.epochs = 4;
  return cfg;
}

}  // namespace

TEST_CASE("mine_labels inherits sampled labels") {
  const std::vector<geom::Label> parent{0, 1, 2};
  CHECK(mine_labels(parent, std::vector<std::size_t>{0, 1, 2}) == parent);
  CHECK(mine_labels(parent, std::vector<std::size_t>{2, 0}) == std::vector<geom::Label>{2, 0});
  CHECK_THROWS_AS(mine_labels(parent, std::vector<std::size_t>{3}), std::invalid_argument);
}

TEST_CASE("loss_joint arithmetic") {
  const LossReport r = loss_joint(2.0, {0.2, 0.3}, {0.1, 0.2}, 0.1, 0.01);
  CHECK(r.l_seg == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(r.l_total == doctest::Approx(0.653).epsilon(1e-15));
  const LossReport no_reg = loss_joint(2.0, {0.2, 0.3}, {0.1, 0.2}, 0.1, 0.0);
  CHECK(no_reg.l_total == no_reg.l_seg);
  CHECK(loss_joint(2.0, {0.2, 0.3}, {0.1, 0.2}, 1.0, 0.0).l_total == 2.0);
}

TEST_CASE("config validation") {
  ModelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dims = {16};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ModelConfig{};
  cfg.lambda = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ModelConfig{};
  cfg.epsilon_lo = 0.95;
  cfg.epsilon_hi = 0.9;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("scene plan bookkeeping") {
  const geom::PointCloud cloud = small_scene();
  const ModelConfig cfg = small_config();
  const ScenePlan plan = plan_scene(cloud, cfg);
  REQUIRE(plan.stages.size() == 2);
  std::size_t parent = cloud.size();
  for (const StagePlan& st : plan.stages) {
    const std::size_t n = (parent + cfg.ratio - 1) / cfg.ratio;
    CHECK(st.indices.size() == n);
    CHECK(st.positions.size() == n);
    CHECK(st.labels.size() == n);
    CHECK(st.upsample.size() == parent);
    CHECK(st.group.size() == n * st.group_size);
    CHECK(st.ambiguity.values.size() == n);
    CHECK(st.margins.size() == n);
    for (std::size_t u : st.upsample) CHECK(u < n);
    parent = n;
  }
  // Stage labels come from the kept points.
  for (std::size_t i = 0; i < plan.stages[0].indices.size(); ++i) {
    CHECK(plan.stages[0].labels[i] == cloud.label(plan.stages[0].indices[i]));
  }
  const ScenePlan bare = plan_scene(cloud, cfg, false);
  CHECK_FALSE(bare.labeled);
  CHECK(bare.stages[0].ambiguity.values.empty());
}

TEST_CASE("forward is deterministic and leaves the model unchanged in infer mode") {
  const geom::PointCloud cloud = small_scene();
  Model model(small_config(), 0, cloud.num_classes());
  const Model before = model;
  const ScenePlan plan = plan_scene(cloud, model.config());
  const ForwardResult a = forward(model, plan, ad::Mode::Infer);
  const ForwardResult b = forward(model, plan_scene(cloud, model.config()), ad::Mode::Infer);
  CHECK(a.scores == b.scores);
  CHECK(model == before);
  CHECK(a.scores.rows == cloud.size());
  CHECK(a.scores.cols == cloud.num_classes());
}

TEST_CASE("disabled refinement leaves decoder features bit-identical") {
  const geom::PointCloud cloud = small_scene(3);
  ModelConfig off = small_config();
  off.use_refine = false;
  ModelConfig zero_gamma = small_config();
  zero_gamma.gamma = 0.0;
  zero_gamma.epsilon_lo = 0.0;  // every self bit set
  ModelConfig no_self = small_config();
  no_self.epsilon_lo = 1.0;  // predictions never reach 1

  Model base(off, 0, 2);
  const ForwardResult ref = forward(base, plan_scene(cloud, off), ad::Mode::Infer);
  for (const ModelConfig& cfg : {zero_gamma, no_self}) {
    Model m = Model::from_state(cfg, base.state());
    const ForwardResult r = forward(m, plan_scene(cloud, cfg), ad::Mode::Infer);
    CHECK(r.scores == ref.scores);
    for (std::size_t s = 0; s < r.stages.size(); ++s) CHECK(r.stages[s].features == ref.stages[s].features);
  }
}

TEST_CASE("predict breaks score ties towards class 0") {
  const geom::PointCloud cloud = small_scene();
  Model model(small_config(), 0, 2);
  std::fill(model.head_weight().data.begin(), model.head_weight().data.end(), 0.0);
  std::fill(model.head_bias().data.begin(), model.head_bias().data.end(), 0.0);
  const Prediction p = predict(model, cloud);
  CHECK(p.labels == std::vector<geom::Label>(cloud.size(), 0));
  CHECK(p.ambiguity.size() == cloud.size());
  for (double a : p.ambiguity) {
    CHECK(a > 0.0);
    CHECK(a < 1.0);
  }
}

TEST_CASE("joint loss gradient matches central differences on toy models") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ToyProblem toy = make_toy_problem(seed);
    CHECK(toy.model.parameter_count() <= 1000);
    CHECK(check_joint_gradient(toy.model, toy.plan).max_rel_error <= 1e-4);
  }
  CHECK_THROWS_AS(make_toy_problem(0, 65), std::invalid_argument);
}

TEST_CASE("cross-entropy only objective ignores the predictor branch") {
  const geom::PointCloud cloud = small_scene();
  ModelConfig cfg = small_config();
  cfg.lambda = 1.0;
  cfg.omega = 0.0;
  Model model(cfg, 0, 2);
  const GradientResult g = compute_gradients(model, plan_scene(cloud, cfg), false);
  CHECK(g.report.l_total == g.report.l_ce);
  const auto names = model.parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].rfind("apm", 0) != 0) continue;
    for (double v : g.grads[i].data) CHECK(v == 0.0);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const std::vector<geom::PointCloud> scenes{small_scene()};
  for (Optimizer opt : {Optimizer::AmsGrad, Optimizer::Sgd}) {
    ModelConfig cfg = small_config();
    cfg.lr = 0.0;
    cfg.optimizer = opt;
    Model model(cfg, 0, 2);
    const auto before = model.flat_parameters();
    train(model, scenes);
    CHECK(model.flat_parameters() == before);
  }
}

TEST_CASE("training is reproducible and reduces the loss") {
  const std::vector<geom::PointCloud> scenes{small_scene(5)};
  ModelConfig cfg = small_config();
  cfg.epochs = 25;
  Model a(cfg, 0, 2);
  Model b(cfg, 0, 2);
  const auto ha = train(a, scenes);
  const auto hb = train(b, scenes);
  REQUIRE(ha.size() == 25);
  for (std::size_t e = 0; e < ha.size(); ++e) CHECK(ha[e].loss.l_total == hb[e].loss.l_total);
  CHECK(a == b);
  CHECK(ha.back().loss.l_total < ha.front().loss.l_total);
  CHECK(ha.front().lr == cfg.lr);
  CHECK(ha.back().lr < cfg.lr);
}

TEST_CASE("cosine learning rate schedule") {
  CHECK(cosine_lr(0.01, 0, 100) == 0.01);
  CHECK(cosine_lr(0.01, 50, 100) == doctest::Approx(0.005));
  CHECK(cosine_lr(0.01, 100, 100) == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("optimizer steps") {
  std::vector<ad::Tensor> params{ad::Tensor::vector({1.0, -2.0})};
  std::vector<ad::Tensor*> ptrs{&params[0]};
  const std::vector<ad::Tensor> grads{ad::Tensor::vector({0.5, -0.5})};
  MomentumSgd sgd(0.9);
  sgd.step(ptrs, grads, 0.1);
  CHECK(params[0].data[0] == doctest::Approx(0.95));
  sgd.step(ptrs, grads, 0.1);  // velocity 0.9 * 0.5 + 0.5
  CHECK(params[0].data[0] == doctest::Approx(0.95 - 0.1 * 0.95));

  params[0] = ad::Tensor::vector({1.0, -2.0});
  AmsGrad adam;
  adam.step(ptrs, grads, 0.1);
  // The first bias-corrected step moves every coordinate by lr against the gradient sign.
  CHECK(params[0].data[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(params[0].data[1] == doctest::Approx(-1.9).epsilon(1e-6));
}

TEST_CASE("model state round trip") {
  Model model(small_config(), 2, 3);
  const Model back = Model::from_state(model.config(), model.state());
  CHECK(back == model);
  auto state = model.state();
  state.pop_back();
  CHECK_THROWS_AS(Model::from_state(model.config(), state), std::invalid_argument);
  state = model.state();
  state.push_back({"stray", ad::Tensor::scalar(1.0)});
  CHECK_THROWS_AS(Model::from_state(model.config(), state), std::invalid_argument);
  state = model.state();
  state[3].value.data.push_back(0.0);
  state[3].value.shape.back() += 1;
  CHECK_THROWS_AS(Model::from_state(model.config(), state), std::invalid_argument);
}
