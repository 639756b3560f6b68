#include "amc/ad/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace amc::ad {

namespace {

std::string shape_str(const Tensor& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    s += (i ? ", " : "") + std::to_string(t.shape[i]);
  }
  return s + ")";
}

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) {
    throw std::invalid_argument("autograd: operands live on different tapes");
  }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a matrix, got shape " + shape_str(t));
  }
}

template <typename F, typename D>
Var unary(Var x, F forward, D derivative) {
  const Tensor& in = x.value();
  Tensor out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.data[i] = forward(in.data[i]);
  }
  const std::array<Var, 1> inputs{x};
  return x.tape().record(std::move(out), inputs, [derivative](const BackwardContext& ctx) {
    Tensor& g = *ctx.input_grads[0];
    const Tensor& xin = *ctx.inputs[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.data[i] += ctx.output_grad.data[i] * derivative(xin.data[i], ctx.output.data[i]);
    }
  });
}

}  // namespace

Var affine(Var x, Var weight, Var bias) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  if (wv.rank() != 2 || xv.rank() < 1 || xv.rank() > 2) {
    throw std::invalid_argument("affine: W must be a matrix and x a vector or matrix");
  }
  const std::size_t n = xv.rows();
  const std::size_t in = xv.cols();
  const std::size_t out = wv.shape[0];
  if (wv.shape[1] != in || bv.size() != out || bv.rank() != 1) {
    throw std::invalid_argument("affine: incompatible shapes x" + shape_str(xv) + " W" + shape_str(wv) + " b" +
                                shape_str(bv));
  }
  Tensor y(xv.rank() == 1 ? std::vector<std::size_t>{out} : std::vector<std::size_t>{n, out});
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = xv.data.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = wv.data.data() + o * in;
      double s = bv.data[o];
      for (std::size_t c = 0; c < in; ++c) {
        s += wr[c] * xr[c];
      }
      y.data[r * out + o] = s;
    }
  }
  const std::array<Var, 3> inputs{x, weight, bias};
  return x.tape().record(std::move(y), inputs, [n, in, out](const BackwardContext& ctx) {
    const Tensor& xin = *ctx.inputs[0];
    const Tensor& w = *ctx.inputs[1];
    const Tensor& gy = ctx.output_grad;
    if (Tensor* gx = ctx.input_grads[0]) {
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
          const double g = gy.data[r * out + o];
          const double* wr = w.data.data() + o * in;
          for (std::size_t c = 0; c < in; ++c) {
            gx->data[r * in + c] += g * wr[c];
          }
        }
      }
    }
    if (Tensor* gw = ctx.input_grads[1]) {
      for (std::size_t r = 0; r < n; ++r) {
        const double* xr = xin.data.data() + r * in;
        for (std::size_t o = 0; o < out; ++o) {
          const double g = gy.data[r * out + o];
          double* gwr = gw->data.data() + o * in;
          for (std::size_t c = 0; c < in; ++c) {
            gwr[c] += g * xr[c];
          }
        }
      }
    }
    if (Tensor* gb = ctx.input_grads[2]) {
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
          gb->data[o] += gy.data[r * out + o];
        }
      }
    }
  });
}

Var concat(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("concat", av);
  require_matrix("concat", bv);
  if (av.rows() != bv.rows()) {
    throw std::invalid_argument("concat: row counts differ " + shape_str(av) + " vs " + shape_str(bv));
  }
  const std::size_t n = av.rows();
  const std::size_t ca = av.cols();
  const std::size_t cb = bv.cols();
  Tensor y({n, ca + cb});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(av.data.begin() + static_cast<std::ptrdiff_t>(r * ca), ca,
                y.data.begin() + static_cast<std::ptrdiff_t>(r * (ca + cb)));
    std::copy_n(bv.data.begin() + static_cast<std::ptrdiff_t>(r * cb), cb,
                y.data.begin() + static_cast<std::ptrdiff_t>(r * (ca + cb) + ca));
  }
  const std::array<Var, 2> inputs{a, b};
  return a.tape().record(std::move(y), inputs, [n, ca, cb](const BackwardContext& ctx) {
    const Tensor& gy = ctx.output_grad;
    for (std::size_t r = 0; r < n; ++r) {
      if (Tensor* ga = ctx.input_grads[0]) {
        for (std::size_t c = 0; c < ca; ++c) ga->data[r * ca + c] += gy.data[r * (ca + cb) + c];
      }
      if (Tensor* gb = ctx.input_grads[1]) {
        for (std::size_t c = 0; c < cb; ++c) gb->data[r * cb + c] += gy.data[r * (ca + cb) + ca + c];
      }
    }
  });
}

Var gather_rows(Var x, std::vector<std::size_t> indices) {
  const Tensor& xv = x.value();
  require_matrix("gather_rows", xv);
  const std::size_t cols = xv.cols();
  for (std::size_t idx : indices) {
    if (idx >= xv.rows()) {
      throw std::invalid_argument("gather_rows: index " + std::to_string(idx) + " out of range");
    }
  }
  Tensor y({indices.size(), cols});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy_n(xv.data.begin() + static_cast<std::ptrdiff_t>(indices[r] * cols), cols,
                y.data.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  const std::array<Var, 1> inputs{x};
  return x.tape().record(std::move(y), inputs, [idx = std::move(indices), cols](const BackwardContext& ctx) {
    Tensor& g = *ctx.input_grads[0];
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        g.data[idx[r] * cols + c] += ctx.output_grad.data[r * cols + c];
      }
    }
  });
}

Var group_max(Var x, std::size_t group) {
  const Tensor& xv = x.value();
  require_matrix("group_max", xv);
  if (group == 0 || xv.rows() % group != 0) {
    throw std::invalid_argument("group_max: " + std::to_string(xv.rows()) + " rows not divisible into groups of " +
                                std::to_string(group));
  }
  const std::size_t groups = xv.rows() / group;
  const std::size_t cols = xv.cols();
  Tensor y({groups, cols});
  std::vector<std::size_t> argmax(groups * cols);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t best = g * group;
      for (std::size_t r = g * group + 1; r < (g + 1) * group; ++r) {
        if (xv.data[r * cols + c] > xv.data[best * cols + c]) {
          best = r;
        }
      }
      argmax[g * cols + c] = best;
      y.data[g * cols + c] = xv.data[best * cols + c];
    }
  }
  const std::array<Var, 1> inputs{x};
  return x.tape().record(std::move(y), inputs, [arg = std::move(argmax), cols](const BackwardContext& ctx) {
    Tensor& gx = *ctx.input_grads[0];
    for (std::size_t i = 0; i < arg.size(); ++i) {
      gx.data[arg[i] * cols + i % cols] += ctx.output_grad.data[i];
    }
  });
}

Var mix_rows(Var x, RowMix plan) {
  const Tensor& xv = x.value();
  require_matrix("mix_rows", xv);
  const std::size_t cols = xv.cols();
  Tensor y({plan.size(), cols});
  for (std::size_t r = 0; r < plan.size(); ++r) {
    if (plan[r].empty()) {
      throw std::invalid_argument("mix_rows: empty plan for row " + std::to_string(r));
    }
    for (std::size_t t = 0; t < plan[r].size(); ++t) {
      const auto [src, w] = plan[r][t];
      if (src >= xv.rows()) {
        throw std::invalid_argument("mix_rows: source row out of range");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        const double term = w * xv.data[src * cols + c];
        y.data[r * cols + c] = t == 0 ? term : y.data[r * cols + c] + term;
      }
    }
  }
  const std::array<Var, 1> inputs{x};
  return x.tape().record(std::move(y), inputs, [p = std::move(plan), cols](const BackwardContext& ctx) {
    Tensor& gx = *ctx.input_grads[0];
    for (std::size_t r = 0; r < p.size(); ++r) {
      for (const auto& [src, w] : p[r]) {
        for (std::size_t c = 0; c < cols; ++c) {
          gx.data[src * cols + c] += w * ctx.output_grad.data[r * cols + c];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += b.value().data[i];
  const std::array<Var, 2> inputs{a, b};
  return a.tape().record(std::move(y), inputs, [](const BackwardContext& ctx) {
    for (Tensor* g : ctx.input_grads) {
      if (g) {
        for (std::size_t i = 0; i < g->size(); ++i) g->data[i] += ctx.output_grad.data[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] -= b.value().data[i];
  const std::array<Var, 2> inputs{a, b};
  return a.tape().record(std::move(y), inputs, [](const BackwardContext& ctx) {
    if (Tensor* ga = ctx.input_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) ga->data[i] += ctx.output_grad.data[i];
    }
    if (Tensor* gb = ctx.input_grads[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) gb->data[i] -= ctx.output_grad.data[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= b.value().data[i];
  const std::array<Var, 2> inputs{a, b};
  return a.tape().record(std::move(y), inputs, [](const BackwardContext& ctx) {
    const Tensor& av = *ctx.inputs[0];
    const Tensor& bv = *ctx.inputs[1];
    if (Tensor* ga = ctx.input_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) ga->data[i] += ctx.output_grad.data[i] * bv.data[i];
    }
    if (Tensor* gb = ctx.input_grads[1]) {
      for (std::size_t i = 0; i < gb->size(); ++i) gb->data[i] += ctx.output_grad.data[i] * av.data[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(
      a, [factor](double v) { return factor * v; }, [factor](double, double) { return factor; });
}

Var sigmoid(Var x) {
  return unary(
      x,
      [](double v) {
        // Split by sign so exp never overflows.
        if (v >= 0.0) {
          return 1.0 / (1.0 + std::exp(-v));
        }
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().data) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("log: input must be positive");
    }
  }
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var abs(Var x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var detach(Var x) { return x.tape().constant(x.value()); }

Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats& stats, Mode mode, double eps, double momentum,
               bool update_stats) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  const Tensor& xv = x.value();
  require_matrix("batch_norm", xv);
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  if (n == 0) {
    throw std::invalid_argument("batch_norm: empty batch");
  }
  if (gamma.value().size() != c || beta.value().size() != c || stats.mean.size() != c || stats.var.size() != c) {
    throw std::invalid_argument("batch_norm: channel count mismatch");
  }
  std::vector<double> mu(c, 0.0);
  std::vector<double> var(c, 0.0);
  if (mode == Mode::Train) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < c; ++j) mu[j] += xv.data[r * c + j];
    }
    for (double& m : mu) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const double d = xv.data[r * c + j] - mu[j];
        var[j] += d * d;
      }
    }
    for (double& v : var) v /= static_cast<double>(n);
    if (update_stats) {
      for (std::size_t j = 0; j < c; ++j) {
        stats.mean[j] = momentum * stats.mean[j] + (1.0 - momentum) * mu[j];
        stats.var[j] = momentum * stats.var[j] + (1.0 - momentum) * var[j];
      }
    }
  } else {
    mu = stats.mean;
    var = stats.var;
  }
  std::vector<double> inv_std(c);
  for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps);

  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor xhat({n, c});
  Tensor y({n, c});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (xv.data[r * c + j] - mu[j]) * inv_std[j];
      xhat.data[r * c + j] = h;
      y.data[r * c + j] = gv.data[j] * h + bv.data[j];
    }
  }
  const std::array<Var, 3> inputs{x, gamma, beta};
  const bool train = mode == Mode::Train;
  return x.tape().record(std::move(y), inputs,
                         [xh = std::move(xhat), inv = std::move(inv_std), n, c, train](const BackwardContext& ctx) {
                           const Tensor& gy = ctx.output_grad;
                           const Tensor& gam = *ctx.inputs[1];
                           if (Tensor* gg = ctx.input_grads[1]) {
                             for (std::size_t r = 0; r < n; ++r)
                               for (std::size_t j = 0; j < c; ++j) gg->data[j] += gy.data[r * c + j] * xh.data[r * c + j];
                           }
                           if (Tensor* gb = ctx.input_grads[2]) {
                             for (std::size_t r = 0; r < n; ++r)
                               for (std::size_t j = 0; j < c; ++j) gb->data[j] += gy.data[r * c + j];
                           }
                           Tensor* gx = ctx.input_grads[0];
                           if (!gx) return;
                           if (!train) {
                             for (std::size_t r = 0; r < n; ++r)
                               for (std::size_t j = 0; j < c; ++j)
                                 gx->data[r * c + j] += gy.data[r * c + j] * gam.data[j] * inv[j];
                             return;
                           }
                           const double nn = static_cast<double>(n);
                           for (std::size_t j = 0; j < c; ++j) {
                             double sum_d = 0.0;
                             double sum_dx = 0.0;
                             for (std::size_t r = 0; r < n; ++r) {
                               const double d = gy.data[r * c + j] * gam.data[j];
                               sum_d += d;
                               sum_dx += d * xh.data[r * c + j];
                             }
                             for (std::size_t r = 0; r < n; ++r) {
                               const double d = gy.data[r * c + j] * gam.data[j];
                               gx->data[r * c + j] += inv[j] / nn * (nn * d - sum_d - xh.data[r * c + j] * sum_dx);
                             }
                           }
                         });
}

Var batch_norm(Var x, BatchNormStats& stats, Mode mode, double eps, double momentum, bool update_stats) {
  const std::size_t c = x.value().cols();
  Var gamma = x.tape().constant(Tensor({c}, 1.0));
  Var beta = x.tape().constant(Tensor({c}, 0.0));
  return batch_norm(x, gamma, beta, stats, mode, eps, momentum, update_stats);
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  const std::array<Var, 1> inputs{x};
  return x.tape().record(Tensor::scalar(s), inputs, [](const BackwardContext& ctx) {
    const double g = ctx.output_grad.data[0];
    for (double& v : ctx.input_grads[0]->data) v += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) {
    throw std::invalid_argument("mean: empty tensor");
  }
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var cosine_similarity(Var a, Var b, double norm_epsilon) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("cosine_similarity", av);
  require_same_shape("cosine_similarity", av, bv);
  const std::size_t n = av.rows();
  const std::size_t d = av.cols();
  Tensor y({n});
  std::vector<double> na(n);
  std::vector<double> nb(n);
  std::vector<double> raw(n);
  for (std::size_t r = 0; r < n; ++r) {
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double x = av.data[r * d + c];
      const double z = bv.data[r * d + c];
      dot += x * z;
      aa += x * x;
      bb += z * z;
    }
    na[r] = std::sqrt(aa);
    nb[r] = std::sqrt(bb);
    raw[r] = dot / (std::max(na[r], norm_epsilon) * std::max(nb[r], norm_epsilon));
    y.data[r] = std::clamp(raw[r], -1.0, 1.0);
  }
  const std::array<Var, 2> inputs{a, b};
  return a.tape().record(std::move(y), inputs,
                         [na = std::move(na), nb = std::move(nb), s = std::move(raw), n, d,
                          norm_epsilon](const BackwardContext& ctx) {
                           const Tensor& av = *ctx.inputs[0];
                           const Tensor& bv = *ctx.inputs[1];
                           for (std::size_t r = 0; r < n; ++r) {
                             const double g = ctx.output_grad.data[r];
                             const double inv = 1.0 / (std::max(na[r], norm_epsilon) * std::max(nb[r], norm_epsilon));
                             const double sa = na[r] > norm_epsilon ? s[r] / (na[r] * na[r]) : 0.0;
                             const double sb = nb[r] > norm_epsilon ? s[r] / (nb[r] * nb[r]) : 0.0;
                             for (std::size_t c = 0; c < d; ++c) {
                               const double x = av.data[r * d + c];
                               const double z = bv.data[r * d + c];
                               if (Tensor* ga = ctx.input_grads[0]) ga->data[r * d + c] += g * (z * inv - sa * x);
                               if (Tensor* gb = ctx.input_grads[1]) gb->data[r * d + c] += g * (x * inv - sb * z);
                             }
                           }
                         });
}

Var softmax_cross_entropy(Var scores, std::span<const std::size_t> labels) {
  const Tensor& sv = scores.value();
  require_matrix("softmax_cross_entropy", sv);
  const std::size_t n = sv.rows();
  const std::size_t classes = sv.cols();
  if (labels.size() != n || n == 0) {
    throw std::invalid_argument("softmax_cross_entropy: need one label per row");
  }
  Tensor probs({n, classes});
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] >= classes) {
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    }
    const double* row = sv.data.data() + r * classes;
    const double top = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs.data[r * classes + c] = std::exp(row[c] - top);
      z += probs.data[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs.data[r * classes + c] /= z;
    total += std::log(z) + top - row[labels[r]];
  }
  const std::array<Var, 1> inputs{scores};
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return scores.tape().record(
      Tensor::scalar(total / static_cast<double>(n)), inputs,
      [p = std::move(probs), lab = std::move(lab), n, classes](const BackwardContext& ctx) {
        Tensor& g = *ctx.input_grads[0];
        const double scale = ctx.output_grad.data[0] / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < classes; ++c) {
            const double target = c == lab[r] ? 1.0 : 0.0;
            g.data[r * classes + c] += scale * (p.data[r * classes + c] - target);
          }
        }
      });
}

Var external_scalar(std::span<const Var> inputs, double value, std::vector<Tensor> local_grads) {
  if (inputs.empty()) {
    throw std::invalid_argument("external_scalar: at least one input required");
  }
  if (local_grads.size() != inputs.size()) {
    throw std::invalid_argument("external_scalar: one local gradient per input required");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (local_grads[i].shape != inputs[i].value().shape) {
      throw std::invalid_argument("external_scalar: local gradient shape mismatch for input " + std::to_string(i));
    }
  }
  return inputs[0].tape().record(Tensor::scalar(value), inputs, [lg = std::move(local_grads)](const BackwardContext& ctx) {
    const double g = ctx.output_grad.data[0];
    for (std::size_t i = 0; i < lg.size(); ++i) {
      if (Tensor* gi = ctx.input_grads[i]) {
        for (std::size_t k = 0; k < gi->size(); ++k) gi->data[k] += g * lg[i].data[k];
      }
    }
  });
}

}  // namespace amc::ad
