#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "amc/geom/point_cloud.hpp"

namespace amc::metrics {

/// C x C counts; rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * classes_ + pred]; }
  void add(std::size_t gt, std::size_t pred, std::uint64_t count = 1) { counts_[gt * classes_ + pred] += count; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t gt) const;
  std::uint64_t col_sum(std::size_t pred) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

/// Percentages in [0, 100].
struct Scores {
  double oa = 0.0;
  double macc = 0.0;
  double miou = 0.0;
};

ConfusionMatrix confusion(std::span<const geom::Label> pred, std::span<const geom::Label> gt, std::size_t classes);

/// OA, mean class accuracy and mean IoU. Classes absent from both ground
/// truth and prediction are left out of the means; classes predicted but
/// absent from ground truth count with accuracy excluded and IoU 0.
Scores scores(const ConfusionMatrix& cm);

/// Ambiguity levels: {0}, (0, 0.5), {0.5}, (0.5, 1), {1}.
enum class AmbiguityBin { Zero = 0, Low, Semi, High, One };
inline constexpr std::size_t kBinCount = 5;
inline constexpr double kBinTolerance = 1e-12;

AmbiguityBin ambiguity_bin(double a);
std::string_view to_string(AmbiguityBin bin);

struct BinReport {
  AmbiguityBin bin = AmbiguityBin::Zero;
  std::size_t count = 0;
  ConfusionMatrix cm;
  Scores scores;  // zeros when the bin is empty
};

/// Scores restricted to the points falling in each ambiguity bin.
std::array<BinReport, kBinCount> breakdown(std::span<const geom::Label> pred, std::span<const geom::Label> gt,
                                           std::span<const double> ambiguities, std::size_t classes);

/// Overall accuracy (percent) over points with a > 0.
double ambiguous_accuracy(std::span<const geom::Label> pred, std::span<const geom::Label> gt,
                          std::span<const double> ambiguities);

}  // namespace amc::metrics
