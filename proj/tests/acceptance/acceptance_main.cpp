// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance <path to the amc executable>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "amc/ad/gradcheck.hpp"
#include "amc/aef/ambiguity.hpp"
#include "amc/apm/block.hpp"
#include "amc/contrast/margin_loss.hpp"
#include "amc/geom/neighbors.hpp"
#include "amc/geom/scene.hpp"
#include "amc/io/checkpoint.hpp"
#include "amc/io/cloud_file.hpp"
#include "amc/io/export.hpp"
#include "amc/metrics/metrics.hpp"
#include "amc/net/gradient_check.hpp"
#include "amc/net/model.hpp"
#include "amc/net/train.hpp"
#include "amc/random.hpp"
#include "amc/refine/masked_refine.hpp"

namespace fs = std::filesystem;
using namespace amc;

namespace {

// Pinned tolerances and budgets.
constexpr std::size_t kOracleClouds = 20;
constexpr std::size_t kOracleCloudSize = 1000;
constexpr double kOracleSeconds = 10.0;
constexpr double kSpotTolerance = 1e-12;
constexpr std::size_t kMarginGrid = 10000;
constexpr std::size_t kReductionBatches = 100;
constexpr double kReductionTolerance = 1e-12;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientStep = 1e-5;
constexpr double kGradientSeconds = 60.0;
constexpr std::size_t kToyParameterLimit = 1000;
constexpr std::size_t kOverfitEpochs = 200;
constexpr double kOverfitAccuracy = 99.0;
constexpr std::size_t kMovingWindow = 20;
constexpr double kOverfitSeconds = 120.0;
constexpr std::size_t kSeeds = 5;
constexpr double kDirectionSlack = 0.5;
constexpr double kHeldOutNoise = 0.01;
constexpr std::size_t kApmSteps = 500;
constexpr double kApmLearningRate = 0.01;
constexpr double kApmMaxError = 0.1;
constexpr std::size_t kCrossTrials = 10000;
constexpr double kPlyTolerance = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Independent reference implementations.

double sq_dist(const geom::Vec3& a, const geom::Vec3& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

// Every distance from the anchor, fully sorted by (distance, index) with the
// anchor in front; closeness and ambiguity evaluated directly.
std::vector<double> ambiguity_oracle(std::span<const geom::Vec3> pts, std::span<const geom::Label> labels,
                                     std::size_t k, double beta) {
  std::vector<double> out(pts.size());
  std::vector<std::pair<double, std::size_t>> order(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) order[j] = {sq_dist(pts[i], pts[j]), j};
    order[i].first = -1.0;  // anchor first
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    order[0].first = 0.0;
    double d_plus = 0.0, d_minus = 0.0;
    std::size_t n_plus = 0, n_minus = 0;
    for (std::size_t r = 0; r < k; ++r) {
      const auto [d, j] = order[r];
      if (labels[j] == labels[i]) {
        d_plus += d;
        ++n_plus;
      } else {
        d_minus += d;
        ++n_minus;
      }
    }
    if (n_plus == k) {
      out[i] = 0.0;
    } else if (n_plus == 1) {
      out[i] = 1.0;
    } else {
      const double cc_plus = static_cast<double>(n_plus) / std::max(d_plus, 1e-9);
      const double cc_minus = static_cast<double>(n_minus) / std::max(d_minus, 1e-9);
      out[i] = 1.0 / (1.0 + std::exp(beta * (cc_plus - cc_minus)));
    }
  }
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    uv += u[c] * v[c];
    uu += u[c] * u[c];
    vv += v[c] * v[c];
  }
  return uv / (std::max(std::sqrt(uu), 1e-12) * std::max(std::sqrt(vv), 1e-12));
}

// Supervised contrastive loss without margins: mean over anchors with
// negatives of -log(sum_pos e^{s/tau} / (sum_pos + sum_neg)).
double supervised_contrastive(const Matrix& f, std::span<const aef::NeighborPartition> parts, double tau) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& p : parts) {
    if (p.inter.empty()) continue;
    double pos = 0.0, neg = 0.0;
    for (std::size_t j : p.intra) pos += std::exp(cosine(f.row(p.anchor), f.row(j)) / tau);
    for (std::size_t k : p.inter) neg += std::exp(cosine(f.row(p.anchor), f.row(k)) / tau);
    total -= std::log(pos / (pos + neg));
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

std::vector<geom::Vec3> random_points(Rng& rng, std::size_t n, bool lattice) {
  std::vector<geom::Vec3> pts(n);
  for (auto& p : pts) {
    for (auto& c : p) c = lattice ? static_cast<double>(rng.below(10)) : rng.uniform();
  }
  return pts;
}

std::vector<geom::Label> random_labels(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<geom::Label> l(n);
  for (auto& v : l) v = static_cast<geom::Label>(rng.below(classes));
  return l;
}

geom::PointCloud toy_scene(double noise = 0.0, std::uint64_t seed = 0) {
  geom::SceneSpec spec;
  spec.kind = geom::SceneKind::PlanarBoundary;
  spec.points_per_class = 1000;
  spec.noise_sigma = noise;
  spec.seed = seed;
  return geom::synth_scene(spec);
}

// ---------------------------------------------------------------------------
// Criteria.

Outcome aef_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  std::size_t mismatches = 0, ambiguous = 0;
  for (std::size_t c = 0; c < kOracleClouds; ++c) {
    const auto pts = random_points(rng, kOracleCloudSize, c % 2 == 1);
    const auto labels = random_labels(rng, kOracleCloudSize, 2 + c % 3);
    const aef::AefConfig cfg{24, 0.04};
    const auto fast = aef::ambiguity_map(pts, labels, cfg, geom::SearchMethod::KdTree).values;
    const auto slow = ambiguity_oracle(pts, labels, cfg.k, cfg.beta);
    for (std::size_t i = 0; i < fast.size(); ++i) {
      mismatches += fast[i] != slow[i];
      ambiguous += fast[i] > 0.0;
    }
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < kOracleSeconds,
          fmt("%zu clouds x %zu points, %zu mismatches, %zu ambiguous points, %.2fs", kOracleClouds, kOracleCloudSize,
              mismatches, ambiguous, secs)};
}

Outcome ambiguity_spot_values() {
  const aef::Closeness cc{2.0, 0.25};
  const double a = aef::ambiguity(cc, 2, 4, 0.04);
  const double expected = 1.0 / (1.0 + std::exp(0.07));
  const bool spot = std::abs(a - expected) <= kSpotTolerance;

  const geom::PointCloud worked({{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 2}}, {0, 0, 1, 1}, 2);
  const auto part = aef::partition_neighbors(worked, 0, 4);
  const auto wcc = aef::closeness(part);
  const bool worked_ok = part.d_plus == 1.0 && part.d_minus == 8.0 && wcc.cc_plus == 2.0 && wcc.cc_minus == 0.25 &&
                         std::abs(aef::ambiguity(wcc, part.intra.size(), 4, 0.04) - expected) <= kSpotTolerance;

  const geom::PointCloud pure({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {1, 1, 1, 1}, 2);
  const geom::PointCloud alone({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {0, 1, 1, 1}, 2);
  const auto a_pure = aef::ambiguity_map(pure, aef::AefConfig{4, 0.04}).values[0];
  const auto a_alone = aef::ambiguity_map(alone, aef::AefConfig{4, 0.04}).values[0];
  return {spot && worked_ok && a_pure == 0.0 && a_alone == 1.0,
          fmt("a = %.15f (expected %.15f), |N+|=K -> %g, |N+|=1 -> %g", a, expected, a_pure, a_alone)};
}

Outcome margin_signs() {
  const contrast::MarginConfig cfg{-1.0, 0.5, 0.3};
  std::size_t bad = 0;
  for (std::size_t i = 0; i <= kMarginGrid; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(kMarginGrid);
    const double m = contrast::margin(a, cfg);
    if (a == 0.5) {
      bad += m != 0.0;
    } else if (a < 0.5) {
      bad += !(m > 0.0);
    } else {
      bad += !(m < 0.0);
    }
  }
  return {bad == 0, fmt("%zu grid values, %zu sign violations", kMarginGrid + 1, bad)};
}

Outcome margin_zero_reduction() {
  Rng rng(7);
  double worst = 0.0;
  for (std::size_t b = 0; b < kReductionBatches; ++b) {
    const std::size_t n = 8 + rng.below(57);
    const std::size_t d = 2 + rng.below(15);
    Matrix f(n, d);
    for (double& v : f.data) v = rng.normal();
    const auto pts = random_points(rng, n, false);
    const auto parts = aef::partition_all(pts, random_labels(rng, n, 3), std::min<std::size_t>(8, n));
    const double tau = rng.uniform(0.1, 1.0);
    // Margins of zero come from mu = nu = 0 whatever the ambiguity.
    std::vector<double> margins(n);
    for (double& m : margins) m = contrast::margin(rng.uniform(), {0.0, 0.0, tau});
    const double ours = contrast::loss_am({f, parts, margins}, {0.0, 0.0, tau}).loss;
    const double ref = supervised_contrastive(f, parts, tau);
    worst = std::max(worst, std::abs(ours - ref) / std::max(1.0, std::abs(ref)));
  }
  return {worst <= kReductionTolerance, fmt("%zu batches, max deviation %.3g", kReductionBatches, worst)};
}

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(5);
  double am = 0.0, reg = 0.0, ce = 0.0, joint = 0.0;
  std::size_t largest = 0;

  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 16 + rng.below(49);
    const std::size_t d = 2 + rng.below(15);
    Matrix f(n, d);
    for (double& v : f.data) v = rng.normal();
    const auto pts = random_points(rng, n, false);
    const auto parts = aef::partition_all(pts, random_labels(rng, n, 3), 8);
    std::vector<double> margins(n);
    for (double& m : margins) m = contrast::margin(rng.uniform(), {});
    const contrast::MarginConfig cfg{-1.0, 0.5, 0.3};
    const auto r = contrast::loss_am({f, parts, margins}, cfg);
    const auto fn = [&](std::span<const double> p) {
      return contrast::loss_am({Matrix(n, d, std::vector<double>(p.begin(), p.end())), parts, margins}, cfg).loss;
    };
    am = std::max(am, ad::finite_diff_check(fn, f.data, r.grad.data, kGradientStep).max_rel_error);
  }

  for (int t = 0; t < 10;) {
    apm::ApmBlock block(1, 4, rng.next(), {6, 3, 1});
    Matrix z(16, 7);
    for (double& v : z.data) v = rng.normal();
    std::vector<double> target(16);
    for (double& v : target) v = rng.uniform();
    const auto loss_of = [&](apm::ApmBlock b) {
      return apm::loss_reg(apm::block_forward(z, b, ad::Mode::Train, false).values, target);
    };
    const auto pred = apm::block_forward(z, block, ad::Mode::Train, false).values;
    bool kink = false;
    for (std::size_t i = 0; i < pred.size(); ++i) kink |= std::abs(pred[i] - target[i]) < 1e-6;
    if (kink) continue;
    ad::Tape tape;
    const auto params = apm::bind(tape, block);
    tape.backward(apm::loss_reg(
        apm::block_forward(tape.constant(ad::Tensor({16, 7}, z.data)), params, block, ad::Mode::Train, false), target));
    std::vector<double> analytic, flat;
    for (const auto& p : params) analytic.insert(analytic.end(), p.grad().data.begin(), p.grad().data.end());
    for (const auto* p : block.parameters()) flat.insert(flat.end(), p->data.begin(), p->data.end());
    largest = std::max(largest, flat.size());
    const auto fn = [&](std::span<const double> p) {
      apm::ApmBlock moved = block;
      std::size_t at = 0;
      for (ad::Tensor* t : moved.parameters()) {
        std::copy(p.begin() + static_cast<std::ptrdiff_t>(at), p.begin() + static_cast<std::ptrdiff_t>(at + t->size()),
                  t->data.begin());
        at += t->size();
      }
      return loss_of(moved);
    };
    reg = std::max(reg, ad::finite_diff_check(fn, flat, analytic, kGradientStep).max_rel_error);
    ++t;
  }

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const net::ToyProblem toy = net::make_toy_problem(seed);
    largest = std::max(largest, toy.model.parameter_count());
    joint = std::max(joint, net::check_joint_gradient(toy.model, toy.plan, kGradientStep).max_rel_error);
    net::ModelConfig ce_only = toy.model.config();
    ce_only.lambda = 1.0;
    ce_only.omega = 0.0;
    const net::Model ce_model = net::Model::from_state(ce_only, toy.model.state());
    ce = std::max(ce, net::check_joint_gradient(ce_model, toy.plan, kGradientStep).max_rel_error);
  }

  const double secs = seconds_since(start);
  const double worst = std::max({am, reg, ce, joint});
  return {worst <= kGradientTolerance && secs < kGradientSeconds && largest <= kToyParameterLimit,
          fmt("max rel error L_AM %.2g, L_REG %.2g, L_CE %.2g, joint %.2g; largest model %zu params; %.1fs", am, reg,
              ce, joint, largest, secs)};
}

struct OverfitRun {
  net::Model model;
  double oa = 0.0;
  std::size_t violations = 0;
  double seconds = 0.0;
};

std::vector<OverfitRun>& overfit_runs() {
  static std::vector<OverfitRun> runs;
  return runs;
}

Outcome toy_overfit() {
  const geom::PointCloud scene = toy_scene();
  const std::vector<geom::PointCloud> scenes{scene};
  bool pass = scene.size() == 2000;
  std::string detail;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    net::ModelConfig cfg;
    cfg.epochs = kOverfitEpochs;
    cfg.seed = seed;
    OverfitRun run{net::Model(cfg, 0, scene.num_classes())};
    const auto start = std::chrono::steady_clock::now();
    const auto history = net::train(run.model, scenes);
    run.seconds = seconds_since(start);
    double prev = INFINITY;
    for (std::size_t e = kMovingWindow - 1; e < history.size(); ++e) {
      double avg = 0.0;
      for (std::size_t j = e + 1 - kMovingWindow; j <= e; ++j) avg += history[j].loss.l_total;
      avg /= static_cast<double>(kMovingWindow);
      run.violations += avg > prev;
      prev = avg;
    }
    const auto pred = net::predict(run.model, scene);
    run.oa = metrics::scores(metrics::confusion(pred.labels, scene.labels(), scene.num_classes())).oa;
    pass = pass && run.oa >= kOverfitAccuracy && run.violations == 0 && run.seconds < kOverfitSeconds;
    detail += fmt("%sseed %llu OA %.2f%% ma-rises %zu %.1fs", seed ? "; " : "", static_cast<unsigned long long>(seed),
                  run.oa, run.violations, run.seconds);
    overfit_runs().push_back(std::move(run));
  }
  return {pass, fmt("%zu points, %zu epochs: ", scene.size(), kOverfitEpochs) + detail};
}

Outcome adaptive_vs_constant() {
  std::vector<double> adaptive, constant;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const std::vector<geom::PointCloud> train_scene{toy_scene(kHeldOutNoise, seed)};
    const geom::PointCloud test = toy_scene(kHeldOutNoise, 1000 + seed);
    const auto truth = aef::ambiguity_map(test, aef::AefConfig{}).values;
    for (bool adapt : {true, false}) {
      net::ModelConfig cfg;
      cfg.epochs = kOverfitEpochs;
      cfg.seed = seed;
      if (!adapt) {
        cfg.mu = 0.0;
        cfg.nu = 0.5;
      }
      net::Model model(cfg, 0, 2);
      net::train(model, train_scene);
      const double acc = metrics::ambiguous_accuracy(net::predict(model, test).labels, test.labels(), truth);
      (adapt ? adaptive : constant).push_back(acc);
    }
  }
  const double ma = median(adaptive), mc = median(constant);
  std::string per_seed;
  for (std::size_t i = 0; i < adaptive.size(); ++i) per_seed += fmt(" %.2f/%.2f", adaptive[i], constant[i]);
  return {ma >= mc - kDirectionSlack,
          fmt("held-out ambiguous-point accuracy median adaptive %.2f%% vs constant %.2f%% (per seed:%s)", ma, mc,
              per_seed.c_str())};
}

Outcome ambiguity_vs_k() {
  const geom::PointCloud scene = toy_scene();
  std::vector<double> fractions;
  for (std::size_t k : {12u, 18u, 24u, 30u}) {
    const auto a = aef::ambiguity_map(scene, aef::AefConfig{k, 0.04}).values;
    fractions.push_back(100.0 * static_cast<double>(std::count_if(a.begin(), a.end(), [](double v) { return v > 0; })) /
                        static_cast<double>(a.size()));
  }
  const bool pass = std::is_sorted(fractions.begin(), fractions.end());
  return {pass, fmt("fraction with a > 0 for K = 12, 18, 24, 30: %.2f%% %.2f%% %.2f%% %.2f%%", fractions[0],
                    fractions[1], fractions[2], fractions[3])};
}

Outcome apm_regression() {
  if (overfit_runs().size() != kSeeds) return {false, "overfit models unavailable"};
  const geom::PointCloud scene = toy_scene();
  std::vector<double> worst_per_seed;
  std::string detail;
  for (std::size_t i = 0; i < kSeeds; ++i) {
    net::Model& model = overfit_runs()[i].model;
    const net::ScenePlan plan = net::plan_scene(scene, model.config());
    const net::ForwardResult frozen = net::forward(model, plan, ad::Mode::Infer);
    double worst = 0.0;
    for (const net::StageState& st : frozen.stages) {
      const Matrix z = apm::concat_inputs(st.positions, st.encoded);
      apm::ApmBlock block(st.stage, st.encoded.cols, 1000 + i);
      net::AmsGrad opt(0.9);
      for (std::size_t step = 0; step < kApmSteps; ++step) {
        ad::Tape tape;
        const auto params = apm::bind(tape, block);
        const ad::Var pred =
            apm::block_forward(tape.constant(ad::Tensor({z.rows, z.cols}, z.data)), params, block, ad::Mode::Train);
        tape.backward(apm::loss_reg(pred, st.ambiguity));
        std::vector<ad::Tensor> grads;
        for (const auto& p : params) grads.push_back(p.grad());
        opt.step(block.parameters(), grads, kApmLearningRate);
      }
      const double mae = apm::loss_reg(apm::block_forward(z, block, ad::Mode::Infer, false).values, st.ambiguity);
      const double zero_baseline =
          std::accumulate(st.ambiguity.begin(), st.ambiguity.end(), 0.0) / static_cast<double>(st.ambiguity.size());
      worst = std::max(worst, mae);
      detail += fmt("%sseed %zu stage %zu MAE %.4f (predict-0 %.4f)", detail.empty() ? "" : "; ", i, st.stage, mae,
                    zero_baseline);
    }
    worst_per_seed.push_back(worst);
  }
  const double med = median(worst_per_seed);
  return {med <= kApmMaxError, fmt("median over seeds of worst-stage MAE %.4f after %zu steps: ", med, kApmSteps) + detail};
}

Outcome refinement_invariants() {
  const geom::PointCloud scene = toy_scene();
  net::ModelConfig off;
  off.use_refine = false;
  net::Model base = overfit_runs().empty() ? net::Model(off, 0, 2) : overfit_runs()[0].model;
  base = net::Model::from_state(off, base.state());
  const net::ForwardResult ref = net::forward(base, net::plan_scene(scene, off), ad::Mode::Infer);

  net::ModelConfig zero_gamma = off;
  zero_gamma.use_refine = true;
  zero_gamma.gamma = 0.0;
  zero_gamma.epsilon_lo = 0.0;
  net::ModelConfig no_self = off;
  no_self.use_refine = true;
  no_self.epsilon_lo = 1.0;  // predictions are strictly below 1
  bool identical = true;
  for (const net::ModelConfig& cfg : {zero_gamma, no_self}) {
    net::Model m = net::Model::from_state(cfg, base.state());
    const net::ForwardResult r = net::forward(m, net::plan_scene(scene, cfg), ad::Mode::Infer);
    identical = identical && r.scores == ref.scores;
    for (std::size_t s = 0; s < r.stages.size(); ++s) identical = identical && r.stages[s].features == ref.stages[s].features;
  }

  Rng rng(10);
  std::size_t pool_bad = 0, bit_bad = 0;
  for (std::size_t t = 0; t < kCrossTrials; ++t) {
    std::vector<double> a(1 + rng.below(24));
    for (double& v : a) v = rng.below(4) == 0 ? 0.25 : rng.uniform();
    const refine::CrossMask m = refine::cross_mask(a);
    double lowest = a[0];
    std::size_t first = 0;
    for (std::size_t j = 1; j < a.size(); ++j) {
      if (a[j] < lowest) {
        lowest = a[j];
        first = j;
      }
    }
    pool_bad += m.pooled != lowest;
    bit_bad += std::count(m.bits.begin(), m.bits.end(), 1) != 1 || m.bits[first] != 1;
  }
  return {identical && pool_bad == 0 && bit_bad == 0,
          fmt("no-op refinements bit-identical: %s; %zu neighborhoods, %zu pooled mismatches, %zu bad bit sets",
              identical ? "yes" : "no", kCrossTrials, pool_bad, bit_bad)};
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& dir) {
  const std::string cmd = cli + " " + args + " > " + (dir / "out.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_round_trip(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / "amc_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cloud = (dir / "scene.xyz").string();
  const std::string csv = (dir / "amb.csv").string();
  const std::string ply = (dir / "amb.ply").string();
  const std::string ckpt = (dir / "model.ckpt").string();
  if (run_cli(cli, "synth --kind two-rooms --points-per-class 300 --noise 0.002 --seed 3 --out " + cloud, dir) != 0 ||
      run_cli(cli, "ambiguity --in " + cloud + " --out " + csv + " --ply " + ply, dir) != 0) {
    return {false, "cli synth/ambiguity failed"};
  }
  const geom::PointCloud scene = io::read_cloud_file(cloud);
  const auto amb = aef::ambiguity_map(scene, aef::AefConfig{}).values;
  const auto verts = io::read_ply_file(ply);
  double max_dev = 0.0;
  std::size_t color_bad = verts.size() == scene.size() ? 0 : 1;
  for (std::size_t i = 0; i < std::min(verts.size(), scene.size()); ++i) {
    for (int c = 0; c < 3; ++c) max_dev = std::max(max_dev, std::abs(verts[i].position[c] - scene.position(i)[c]));
    const auto r = static_cast<long>(std::lround(255.0 * amb[i]));
    color_bad += verts[i].rgb[0] != r || verts[i].rgb[1] != 0 || verts[i].rgb[2] != 255 - r;
  }

  if (run_cli(cli, "train --in " + cloud + " --set epochs=10 --log-every 0 --out " + ckpt, dir) != 0) {
    return {false, "cli train failed"};
  }
  net::Model loaded = io::load_checkpoint(ckpt);
  const auto first = net::predict(loaded, scene);
  std::stringstream buf;
  io::save_checkpoint(buf, loaded);
  net::Model again = io::load_checkpoint(buf);
  const auto second = net::predict(again, scene);
  const bool bit_identical = again == loaded && first.labels == second.labels && first.ambiguity == second.ambiguity;

  // The CLI's own predictions match the in-process ones.
  const std::string pred_csv = (dir / "pred.csv").string();
  std::ostringstream expected;
  io::write_prediction_csv(expected, first.labels, first.ambiguity);
  bool cli_match = run_cli(cli, "predict --model " + ckpt + " --in " + cloud + " --out " + pred_csv, dir) == 0;
  std::ifstream in(pred_csv);
  std::ostringstream got;
  got << in.rdbuf();
  cli_match = cli_match && got.str() == expected.str();

  return {max_dev <= kPlyTolerance && color_bad == 0 && bit_identical && cli_match,
          fmt("%zu PLY vertices, max position deviation %.2g, %zu colormap mismatches, checkpoint reload "
              "bit-identical: %s, cli predict matches: %s",
              verts.size(), max_dev, color_bad, bit_identical ? "yes" : "no", cli_match ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <amc executable>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"AEF oracle equivalence", aef_oracle},
      {"ambiguity spot values and branches", ambiguity_spot_values},
      {"margin arithmetic signs", margin_signs},
      {"margin-zero reduction to supervised contrastive loss", margin_zero_reduction},
      {"gradient suite", gradient_suite},
      {"toy overfit", toy_overfit},
      {"adaptive vs constant margin direction", adaptive_vs_constant},
      {"ambiguity fraction monotone in K", ambiguity_vs_k},
      {"ambiguity predictor regression", apm_regression},
      {"masked refinement invariants", refinement_invariants},
      {"CLI round trip", [&] { return cli_round_trip(cli); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
