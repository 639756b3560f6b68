#include <doctest.h>

#include <numeric>
#include <stdexcept>

#include "amc/aef/ambiguity.hpp"
#include "amc/geom/scene.hpp"
#include "amc/metrics/metrics.hpp"
#include "oracles.hpp"

using namespace amc;
using namespace amc::metrics;
using geom::Label;

TEST_CASE("confusion counts") {
  const std::vector<Label> pred{0, 0, 1, 1};
  const std::vector<Label> gt{0, 1, 1, 1};
  const ConfusionMatrix cm = confusion(pred, gt, 2);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 0);
  CHECK(cm.at(1, 0) == 1);
  CHECK(cm.at(1, 1) == 2);
  CHECK(cm.total() == 4);
  CHECK(confusion({}, {}, 3) == ConfusionMatrix(3));
  CHECK_THROWS_AS(confusion(std::vector<Label>{2}, std::vector<Label>{0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(confusion(std::vector<Label>{0}, std::vector<Label>{0, 1}, 2), std::invalid_argument);
}

TEST_CASE("hand-tallied scores") {
  const Scores s = scores(confusion(std::vector<Label>{0, 0, 1, 1}, std::vector<Label>{0, 1, 1, 1}, 2));
  CHECK(s.oa == doctest::Approx(75.0));
  // ACC: A 1/1, B 2/3; IoU: A 1/2, B 2/3.
  CHECK(s.macc == doctest::Approx(100.0 * (1.0 + 2.0 / 3.0) / 2.0));
  CHECK(s.miou == doctest::Approx(100.0 * (0.5 + 2.0 / 3.0) / 2.0));
  CHECK(s.macc == doctest::Approx(83.33).epsilon(1e-4));
  CHECK(s.miou == doctest::Approx(58.33).epsilon(1e-4));
}

TEST_CASE("perfect prediction and absent classes") {
  const std::vector<Label> labels{0, 2, 2, 0};
  const Scores s = scores(confusion(labels, labels, 4));
  CHECK(s.oa == 100.0);
  CHECK(s.macc == 100.0);
  CHECK(s.miou == 100.0);
  // Class 1 and 3 never appear, so they do not drag the means down.
  const Scores mixed = scores(confusion(std::vector<Label>{0, 0, 2, 2}, labels, 4));
  CHECK(mixed.macc == doctest::Approx(50.0));
}

TEST_CASE("scores ignore point order") {
  Rng rng(1);
  const auto pred = testing::random_labels(rng, 200, 4);
  const auto gt = testing::random_labels(rng, 200, 4);
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<Label> p2, g2;
  for (std::size_t i : perm) {
    p2.push_back(pred[i]);
    g2.push_back(gt[i]);
  }
  const Scores a = scores(confusion(pred, gt, 4));
  const Scores b = scores(confusion(p2, g2, 4));
  CHECK(a.oa == b.oa);
  CHECK(a.macc == b.macc);
  CHECK(a.miou == b.miou);
  for (double v : {a.oa, a.macc, a.miou}) {
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }
}

TEST_CASE("ambiguity bins") {
  CHECK(ambiguity_bin(0.0) == AmbiguityBin::Zero);
  CHECK(ambiguity_bin(0.25) == AmbiguityBin::Low);
  CHECK(ambiguity_bin(0.5) == AmbiguityBin::Semi);
  CHECK(ambiguity_bin(0.75) == AmbiguityBin::High);
  CHECK(ambiguity_bin(1.0) == AmbiguityBin::One);
}

TEST_CASE("unambiguous points fill only the zero bin") {
  const std::vector<Label> labels{0, 1, 1};
  const auto bins = breakdown(labels, labels, std::vector<double>(3, 0.0), 2);
  CHECK(bins[0].count == 3);
  for (std::size_t b = 1; b < kBinCount; ++b) CHECK(bins[b].count == 0);
}

TEST_CASE("bins partition the points and sum to the full confusion matrix") {
  Rng rng(2);
  const auto pred = testing::random_labels(rng, 500, 3);
  const auto gt = testing::random_labels(rng, 500, 3);
  std::vector<double> amb(500);
  for (double& a : amb) {
    const auto r = rng.below(5);
    a = r == 0 ? 0.0 : r == 1 ? 0.5 : r == 2 ? 1.0 : rng.uniform();
  }
  const auto bins = breakdown(pred, gt, amb, 3);
  std::size_t count = 0;
  ConfusionMatrix sum(3);
  for (const auto& b : bins) {
    count += b.count;
    sum += b.cm;
  }
  CHECK(count == 500);
  CHECK(sum == confusion(pred, gt, 3));
}

TEST_CASE("ambiguous-point accuracy matches a filtered recomputation") {
  geom::SceneSpec spec;
  spec.points_per_class = 512;
  const geom::PointCloud cloud = geom::synth_scene(spec);
  const auto amb = aef::ambiguity_map(cloud, aef::AefConfig{}).values;
  Rng rng(3);
  std::vector<Label> pred = cloud.labels();
  for (auto& p : pred) {
    if (rng.uniform() < 0.3) p = 1 - p;
  }
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (amb[i] > 0.0) {
      ++total;
      hit += pred[i] == cloud.label(i);
    }
  }
  REQUIRE(total > 0);
  CHECK(ambiguous_accuracy(pred, cloud.labels(), amb) == doctest::Approx(100.0 * hit / total));
}
