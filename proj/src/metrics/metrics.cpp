#include "amc/metrics/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace amc::metrics {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t gt) const {
  std::uint64_t t = 0;
  for (std::size_t p = 0; p < classes_; ++p) t += at(gt, p);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t t = 0;
  for (std::size_t g = 0; g < classes_; ++g) t += at(g, pred);
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) {
    throw std::invalid_argument("ConfusionMatrix: class count mismatch");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const geom::Label> pred, std::span<const geom::Label> gt, std::size_t classes) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(pred.size()) + " predictions for " +
                                std::to_string(gt.size()) + " labels");
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= classes || gt[i] >= classes) {
      throw std::invalid_argument("confusion: label at point " + std::to_string(i) + " is not below " +
                                  std::to_string(classes));
    }
    cm.add(gt[i], pred[i]);
  }
  return cm;
}

Scores scores(const ConfusionMatrix& cm) {
  Scores s;
  const std::uint64_t total = cm.total();
  if (total == 0) {
    return s;
  }
  std::uint64_t trace = 0;
  double acc_sum = 0.0;
  double iou_sum = 0.0;
  std::size_t acc_n = 0;
  std::size_t iou_n = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t row = cm.row_sum(c);
    const std::uint64_t col = cm.col_sum(c);
    trace += tp;
    if (row > 0) {
      acc_sum += static_cast<double>(tp) / static_cast<double>(row);
      ++acc_n;
    }
    if (row + col > 0) {
      iou_sum += static_cast<double>(tp) / static_cast<double>(row + col - tp);
      ++iou_n;
    }
  }
  s.oa = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
  s.macc = acc_n ? 100.0 * acc_sum / static_cast<double>(acc_n) : 0.0;
  s.miou = iou_n ? 100.0 * iou_sum / static_cast<double>(iou_n) : 0.0;
  return s;
}

AmbiguityBin ambiguity_bin(double a) {
  if (!(a >= -kBinTolerance && a <= 1.0 + kBinTolerance)) {
    throw std::invalid_argument("ambiguity_bin: ambiguity outside [0, 1]");
  }
  if (std::abs(a) <= kBinTolerance) return AmbiguityBin::Zero;
  if (std::abs(a - 0.5) <= kBinTolerance) return AmbiguityBin::Semi;
  if (std::abs(a - 1.0) <= kBinTolerance) return AmbiguityBin::One;
  return a < 0.5 ? AmbiguityBin::Low : AmbiguityBin::High;
}

std::string_view to_string(AmbiguityBin bin) {
  switch (bin) {
    case AmbiguityBin::Zero:
      return "unambiguous";
    case AmbiguityBin::Low:
      return "low";
    case AmbiguityBin::Semi:
      return "semi";
    case AmbiguityBin::High:
      return "high";
    case AmbiguityBin::One:
      return "extreme";
  }
  return "unknown";
}

std::array<BinReport, kBinCount> breakdown(std::span<const geom::Label> pred, std::span<const geom::Label> gt,
                                           std::span<const double> ambiguities, std::size_t classes) {
  if (pred.size() != gt.size() || ambiguities.size() != gt.size()) {
    throw std::invalid_argument("breakdown: predictions, labels and ambiguities must share length");
  }
  std::array<BinReport, kBinCount> out;
  for (std::size_t b = 0; b < kBinCount; ++b) {
    out[b].bin = static_cast<AmbiguityBin>(b);
    out[b].cm = ConfusionMatrix(classes);
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred[i] >= classes || gt[i] >= classes) {
      throw std::invalid_argument("breakdown: label at point " + std::to_string(i) + " is not below " +
                                  std::to_string(classes));
    }
    auto& r = out[static_cast<std::size_t>(ambiguity_bin(ambiguities[i]))];
    r.cm.add(gt[i], pred[i]);
    ++r.count;
  }
  for (auto& r : out) {
    r.scores = scores(r.cm);
  }
  return out;
}

double ambiguous_accuracy(std::span<const geom::Label> pred, std::span<const geom::Label> gt,
                          std::span<const double> ambiguities) {
  if (pred.size() != gt.size() || ambiguities.size() != gt.size()) {
    throw std::invalid_argument("ambiguous_accuracy: inputs must share length");
  }
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ambiguity_bin(ambiguities[i]) == AmbiguityBin::Zero) {
      continue;
    }
    ++total;
    hit += pred[i] == gt[i] ? 1 : 0;
  }
  return total ? 100.0 * static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace amc::metrics
