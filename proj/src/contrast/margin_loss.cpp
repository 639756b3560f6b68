#include "amc/contrast/margin_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace amc::contrast {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

double raw_cosine(std::span<const double> u, std::span<const double> v, double eps, double& nu, double& nv) {
  nu = std::sqrt(dot(u, u));
  nv = std::sqrt(dot(v, v));
  return dot(u, v) / (std::max(nu, eps) * std::max(nv, eps));
}

}  // namespace

void MarginConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("MarginConfig: tau must be positive");
  }
  if (!std::isfinite(mu) || !std::isfinite(nu)) {
    throw std::invalid_argument("MarginConfig: mu and nu must be finite");
  }
}

double margin(double a, const MarginConfig& cfg) { return cfg.mu * a + cfg.nu; }

MarginMap margin_map(const aef::AmbiguityMap& ambiguities, const MarginConfig& cfg) {
  MarginMap out;
  out.stage = ambiguities.stage;
  out.values.reserve(ambiguities.values.size());
  for (double a : ambiguities.values) {
    out.values.push_back(margin(a, cfg));
  }
  return out;
}

double cosine_sim(std::span<const double> u, std::span<const double> v, double norm_epsilon) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine_sim: dimension mismatch");
  }
  double nu = 0.0;
  double nv = 0.0;
  return std::clamp(raw_cosine(u, v, norm_epsilon, nu, nv), -1.0, 1.0);
}

void cosine_sim_grad(std::span<const double> u, std::span<const double> v, std::span<double> du,
                     std::span<double> dv, double norm_epsilon) {
  double nu = 0.0;
  double nv = 0.0;
  const double s = raw_cosine(u, v, norm_epsilon, nu, nv);
  const double inv = 1.0 / (std::max(nu, norm_epsilon) * std::max(nv, norm_epsilon));
  const double su = nu > norm_epsilon ? s / (nu * nu) : 0.0;
  const double sv = nv > norm_epsilon ? s / (nv * nv) : 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    du[i] = v[i] * inv - su * u[i];
    dv[i] = u[i] * inv - sv * v[i];
  }
}

EmbeddingPair contrastive_embeddings(double sim_plus, double sim_minus, double m, double tau) {
  return {std::exp((sim_plus - m) / tau), std::exp(sim_minus / tau)};
}

LossResult loss_am(const ContrastBatch& batch, const MarginConfig& cfg) {
  cfg.validate();
  const Matrix& f = batch.features;
  const std::size_t n = f.rows;
  if (batch.partitions.size() != n || batch.margins.size() != n) {
    throw std::invalid_argument("loss_am: features, partitions and margins must share length " + std::to_string(n));
  }

  LossResult out;
  out.grad = Matrix(n, f.cols, 0.0);
  out.margin_grad.assign(n, 0.0);

  std::vector<double> logits;
  std::vector<std::size_t> partners;
  std::vector<double> du(f.cols);
  std::vector<double> dv(f.cols);
  std::vector<double> dlogit;

  // Per-point terms summed in index order; the mean is taken at the end.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& part = batch.partitions[i];
    if (part.inter.empty()) {
      continue;
    }
    if (part.anchor != i) {
      throw std::invalid_argument("loss_am: partition " + std::to_string(i) + " is anchored at " +
                                  std::to_string(part.anchor));
    }
    const double m = batch.margins[i];
    const std::size_t n_intra = part.intra.size();
    logits.clear();
    partners.clear();
    for (std::size_t j : part.intra) {
      logits.push_back((cosine_sim(f.row(i), f.row(j)) - m) / cfg.tau);
      partners.push_back(j);
    }
    for (std::size_t k : part.inter) {
      logits.push_back(cosine_sim(f.row(i), f.row(k)) / cfg.tau);
      partners.push_back(k);
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double s_intra = 0.0;
    double s_inter = 0.0;
    for (std::size_t r = 0; r < logits.size(); ++r) {
      logits[r] = std::exp(logits[r] - top);  // reused as shifted exponentials
      (r < n_intra ? s_intra : s_inter) += logits[r];
    }
    const double s_all = s_intra + s_inter;
    total += std::log1p(s_inter / s_intra);
    ++out.contributing;

    dlogit.resize(logits.size());
    for (std::size_t r = 0; r < logits.size(); ++r) {
      dlogit[r] = r < n_intra ? logits[r] / s_all - logits[r] / s_intra : logits[r] / s_all;
    }
    out.margin_grad[i] = s_inter / s_all / cfg.tau;

    for (std::size_t r = 0; r < partners.size(); ++r) {
      const std::size_t j = partners[r];
      const double w = dlogit[r] / cfg.tau;
      if (w == 0.0) {
        continue;
      }
      cosine_sim_grad(f.row(i), f.row(j), du, dv);
      auto gi = out.grad.row(i);
      for (std::size_t d = 0; d < f.cols; ++d) {
        gi[d] += w * du[d];
      }
      auto gj = out.grad.row(j);
      for (std::size_t d = 0; d < f.cols; ++d) {
        gj[d] += w * dv[d];
      }
    }
  }

  if (out.contributing == 0) {
    return out;
  }
  const double scale = 1.0 / static_cast<double>(out.contributing);
  out.loss = total * scale;
  for (double& g : out.grad.data) {
    g *= scale;
  }
  for (double& g : out.margin_grad) {
    g *= scale;
  }
  return out;
}

double loss_seg(double l_ce, std::span<const double> l_am_stages, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("loss_seg: lambda must lie in [0, 1]");
  }
  double sum = 0.0;
  for (double l : l_am_stages) {
    sum += l;
  }
  return lambda * l_ce + (1.0 - lambda) * sum;
}

}  // namespace amc::contrast
