#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "amc/ad/tape.hpp"

namespace amc::ad {

enum class Mode { Train, Infer };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// Per-channel running statistics. Updated as
/// running = momentum * running + (1 - momentum) * batch.
struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;

  BatchNormStats() = default;
  explicit BatchNormStats(std::size_t channels) : mean(channels, 0.0), var(channels, 1.0) {}
  bool operator==(const BatchNormStats&) const = default;
};

// Linear algebra -----------------------------------------------------------

/// y = x W^T + b. x is (n, in) or a vector of length in; W is (out, in);
/// b has length out.
Var affine(Var x, Var weight, Var bias);

/// Column concatenation of two matrices with equal row counts.
Var concat(Var a, Var b);

/// Rows of x selected by index (repeats allowed).
Var gather_rows(Var x, std::vector<std::size_t> indices);

/// Max over consecutive row groups of `group` rows; ties take the first.
Var group_max(Var x, std::size_t group);

/// One output row per plan entry: the weighted sum of the listed input rows.
/// A single (i, 1.0) term reproduces row i exactly.
using RowMix = std::vector<std::vector<std::pair<std::size_t, double>>>;
Var mix_rows(Var x, RowMix plan);

// Elementwise ----------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var x);
Var relu(Var x);
Var exp(Var x);
/// Natural log; inputs must be positive.
Var log(Var x);
/// |x| with subgradient 0 at 0.
Var abs(Var x);
/// Value copy that blocks gradient flow.
Var detach(Var x);

// Normalization ---------------------------------------------------------------

/// Per-column batch normalization of an (n, c) matrix followed by a
/// per-channel affine gamma * xhat + beta. Train mode normalizes with batch
/// statistics (biased variance, eps added) and, when `update_stats` is set,
/// folds them into `stats`; infer mode uses `stats`.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats, Mode mode, double eps = kBatchNormEps,
               double momentum = kBatchNormMomentum, bool update_stats = true);
/// Same without the learnable affine.
Var batch_norm(Var x, BatchNormStats& stats, Mode mode, double eps = kBatchNormEps,
               double momentum = kBatchNormMomentum, bool update_stats = true);

// Reductions and losses -------------------------------------------------------

Var sum(Var x);
Var mean(Var x);

/// Row-wise cosine similarity of two (n, d) matrices; output has length n.
Var cosine_similarity(Var a, Var b, double norm_epsilon = 1e-12);

/// Mean softmax cross-entropy of (n, C) scores against labels.
Var softmax_cross_entropy(Var scores, std::span<const std::size_t> labels);

/// Scalar node whose value and local gradients were computed outside the
/// tape (e.g. by an analytic loss). Backward adds out_grad * local_grads[i]
/// to input i.
Var external_scalar(std::span<const Var> inputs, double value, std::vector<Tensor> local_grads);

}  // namespace amc::ad
