#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "amc/ad/gradcheck.hpp"
#include "amc/apm/block.hpp"
#include "oracles.hpp"

using namespace amc;
using namespace amc::apm;

namespace {

Matrix random_inputs(Rng& rng, std::size_t n, std::size_t dim) {
  Matrix z(n, dim);
  for (double& v : z.data) v = rng.normal();
  return z;
}

std::vector<double> flatten(ApmBlock& block) {
  std::vector<double> flat;
  for (const ad::Tensor* t : block.parameters()) flat.insert(flat.end(), t->data.begin(), t->data.end());
  return flat;
}

void assign(ApmBlock& block, std::span<const double> flat) {
  std::size_t at = 0;
  for (ad::Tensor* t : block.parameters()) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(at), flat.begin() + static_cast<std::ptrdiff_t>(at + t->size()),
              t->data.begin());
    at += t->size();
  }
}

double train_loss(const ApmBlock& block, const Matrix& z, std::span<const double> target) {
  ApmBlock copy = block;
  return loss_reg(block_forward(z, copy, ad::Mode::Train, false).values, target);
}

}  // namespace

TEST_CASE("concat_input") {
  CHECK(concat_input({1, 2, 3}, std::vector<double>{4, 5}) == std::vector<double>{1, 2, 3, 4, 5});
  CHECK_THROWS_AS(concat_input({1, 2, 3}, std::vector<double>{}), std::invalid_argument);
  const Matrix rows = concat_inputs(std::vector<geom::Vec3>{{1, 2, 3}, {4, 5, 6}}, Matrix(2, 1, {7, 8}));
  CHECK(rows.data == std::vector<double>{1, 2, 3, 7, 4, 5, 6, 8});
}

TEST_CASE("block layout") {
  ApmBlock block(2, 5, 1, {4, 2, 1});
  CHECK(block.input_dim() == 8);
  CHECK(block.layer_dims() == std::vector<std::size_t>{8, 4, 2, 1});
  CHECK(block.parameters().size() == 12);
  CHECK(block.parameter_names("apm2").size() == 12);
  CHECK(ApmBlock(1, 4, 7) == ApmBlock(1, 4, 7));
  CHECK_FALSE(ApmBlock(1, 4, 7) == ApmBlock(1, 4, 8));
}

TEST_CASE("predictions lie strictly inside (0, 1)") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    ApmBlock block(1, 6, rng.next());
    const Matrix z = random_inputs(rng, 30, 9);
    for (ad::Mode mode : {ad::Mode::Train, ad::Mode::Infer}) {
      for (double a : block_forward(z, block, mode).values) {
        CHECK(a > 0.0);
        CHECK(a < 1.0);
      }
    }
  }
}

TEST_CASE("zero weights give 0.5 at every layer in train mode") {
  Rng rng(4);
  ApmBlock block(1, 4, 1);
  for (auto& layer : block.layers()) {
    std::fill(layer.weight.data.begin(), layer.weight.data.end(), 0.0);
    std::fill(layer.bias.data.begin(), layer.bias.data.end(), 0.0);
  }
  for (double a : block_forward(random_inputs(rng, 12, 7), block, ad::Mode::Train).values) CHECK(a == 0.5);
}

TEST_CASE("loss_reg values") {
  CHECK(loss_reg(std::vector<double>{0.2, 0.8}, std::vector<double>{0.4, 0.6}) == doctest::Approx(0.2));
  CHECK(loss_reg(std::vector<double>{0.3, 0.3}, std::vector<double>{0.3, 0.3}) == 0.0);
  CHECK_THROWS_AS(loss_reg(std::vector<double>{0.2}, std::vector<double>{0.4, 0.6}), std::invalid_argument);
  PredictedAmbiguity pred{{0.0, 1.0}, 1};
  aef::AmbiguityMap target{{1.0, 0.0}, 1};
  CHECK(loss_reg(pred, target) == 1.0);
}

TEST_CASE("regression gradient through the block passes the finite difference check") {
  Rng rng(21);
  int checked = 0;
  while (checked < 10) {
    ApmBlock block(1, 3, rng.next(), {5, 3, 1});
    const Matrix z = random_inputs(rng, 12, 6);
    std::vector<double> target(12);
    for (double& t : target) t = rng.uniform();
    // Resample when a residual sits on the |.| kink.
    ApmBlock probe = block;
    const auto pred = block_forward(z, probe, ad::Mode::Train, false).values;
    bool near_kink = false;
    for (std::size_t i = 0; i < pred.size(); ++i) near_kink |= std::abs(pred[i] - target[i]) < 1e-6;
    if (near_kink) continue;

    ad::Tape tape;
    const auto params = bind(tape, block);
    const ad::Var loss = loss_reg(block_forward(tape.constant(ad::Tensor({12, 6}, z.data)), params, block,
                                                ad::Mode::Train, false),
                                  target);
    tape.backward(loss);
    std::vector<double> analytic;
    for (const auto& p : params) analytic.insert(analytic.end(), p.grad().data.begin(), p.grad().data.end());
    CHECK(loss.value().item() == doctest::Approx(train_loss(block, z, target)).epsilon(1e-14));

    const auto f = [&](std::span<const double> flat) {
      ApmBlock moved = block;
      assign(moved, flat);
      return train_loss(moved, z, target);
    };
    CHECK(ad::finite_diff_check(f, flatten(block), analytic).max_rel_error <= 1e-4);
    ++checked;
  }
}

TEST_CASE("infer mode is deterministic and independent of batch size") {
  Rng rng(5);
  ApmBlock block(1, 2, 77);
  // Give the running statistics non-trivial values.
  for (int i = 0; i < 5; ++i) block_forward(random_inputs(rng, 20, 5), block, ad::Mode::Train);
  const ApmBlock before = block;
  const Matrix z = random_inputs(rng, 9, 5);
  const auto batch = block_forward(z, block, ad::Mode::Infer).values;
  CHECK(block == before);
  CHECK(block_forward(z, block, ad::Mode::Infer).values == batch);
  for (std::size_t i = 0; i < z.rows; ++i) {
    const Matrix one(1, 5, std::vector<double>(z.row(i).begin(), z.row(i).end()));
    CHECK(block_forward(one, block, ad::Mode::Infer).values[0] == batch[i]);
  }
}
