#include "amc/geom/scene.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "amc/random.hpp"

namespace amc::geom {

namespace {

constexpr std::size_t kTwoRoomsClasses = 3;
constexpr std::size_t kMaxCheckerClasses = 8;
constexpr std::size_t kCheckerGrid = 4;

struct Builder {
  std::vector<Vec3> positions;
  std::vector<Label> labels;
  Rng rng;
  double sigma;

  Builder(std::uint64_t seed, double noise) : rng(seed), sigma(noise) {}

  void add(Vec3 p, Label label) {
    if (sigma > 0.0) {
      for (double& c : p) {
        c += rng.normal(0.0, sigma);
      }
    }
    positions.push_back(p);
    labels.push_back(label);
  }
};

void planar_boundary(const SceneSpec& spec, std::size_t classes, Builder& b) {
  const std::size_t n = spec.points_per_class;
  const auto side = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-9));
  const std::size_t nx = side;
  const std::size_t ny = side;
  const double h = spec.lattice_step;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t idx = 0; idx < n; ++idx) {
      const std::size_t ix = idx % nx;
      const std::size_t iy = (idx / nx) % ny;
      const std::size_t iz = idx / (nx * ny);
      double x = 0.0;
      if (c == 0) {
        x = -(static_cast<double>(ix) + 0.5) * h;  // mirrored: ix = 0 hugs the plane x = 0
      } else {
        x = (static_cast<double>((c - 1) * nx + ix) + 0.5) * h;
      }
      b.add({x, static_cast<double>(iy) * h, static_cast<double>(iz) * h}, static_cast<Label>(c));
    }
  }
}

// Uniform sample on an axis-aligned rectangle; `fixed_axis` is held at `value`.
Vec3 sample_rect(Rng& rng, int fixed_axis, double value, const Vec3& lo, const Vec3& hi) {
  Vec3 p{};
  for (int a = 0; a < 3; ++a) {
    p[a] = a == fixed_axis ? value : rng.uniform(lo[a], hi[a]);
  }
  return p;
}

void two_rooms(const SceneSpec& spec, Builder& b) {
  const std::size_t n = spec.points_per_class;
  const double width = 1.0;   // per room, along x
  const double depth = 1.0;   // along y
  const double height = 0.6;  // wall height
  Rng& rng = b.rng;

  for (std::size_t i = 0; i < n; ++i) {
    b.add(sample_rect(rng, 2, 0.0, {0.0, 0.0, 0.0}, {2.0 * width, depth, 0.0}), 0);
  }

  // Walls: x = 0, x = width (divider), x = 2 width, y = 0, y = depth,
  // weighted by area so density is uniform.
  const double x_wall = depth * height;
  const double y_wall = 2.0 * width * height;
  const double total = 3.0 * x_wall + 2.0 * y_wall;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform() * total;
    if (r < 3.0 * x_wall) {
      const double x = std::floor(r / x_wall) * width;
      b.add(sample_rect(rng, 0, x, {0.0, 0.0, 0.0}, {0.0, depth, height}), 1);
    } else {
      const double y = r < 3.0 * x_wall + y_wall ? 0.0 : depth;
      b.add(sample_rect(rng, 1, y, {0.0, 0.0, 0.0}, {2.0 * width, 0.0, height}), 1);
    }
  }

  // One box per room standing on the floor: top face plus four sides.
  const double box = 0.3;
  const double box_h = 0.25;
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = (i % 2 == 0) ? 0.35 * width : 1.35 * width;
    const double y0 = 0.35 * depth;
    const Vec3 lo{x0, y0, 0.0};
    const Vec3 hi{x0 + box, y0 + box, box_h};
    const double top = box * box;
    const double side = box * box_h;
    const double r = rng.uniform() * (top + 4.0 * side);
    if (r < top) {
      b.add(sample_rect(rng, 2, box_h, lo, hi), 2);
    } else {
      const auto face = static_cast<int>((r - top) / side);
      const int axis = face < 2 ? 0 : 1;
      const double value = (face % 2 == 0) ? lo[axis] : hi[axis];
      b.add(sample_rect(rng, axis, value, lo, hi), 2);
    }
  }
}

void checker_columns(const SceneSpec& spec, std::size_t classes, Builder& b) {
  const std::size_t n = spec.points_per_class;
  const double cell = 0.2;
  const double height = 0.5;
  std::vector<std::vector<std::size_t>> columns(classes);
  for (std::size_t ix = 0; ix < kCheckerGrid; ++ix) {
    for (std::size_t iy = 0; iy < kCheckerGrid; ++iy) {
      columns[(ix + iy) % classes].push_back(ix * kCheckerGrid + iy);
    }
  }
  Rng& rng = b.rng;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t col = columns[c][i % columns[c].size()];
      const double x0 = static_cast<double>(col / kCheckerGrid) * cell;
      const double y0 = static_cast<double>(col % kCheckerGrid) * cell;
      b.add({rng.uniform(x0, x0 + cell), rng.uniform(y0, y0 + cell), rng.uniform(0.0, height)}, static_cast<Label>(c));
    }
  }
}

void validate(const SceneSpec& spec) {
  if (spec.points_per_class < kMinPointsPerClass) {
    throw std::invalid_argument("synth_scene: points-per-class must be at least " + std::to_string(kMinPointsPerClass));
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw std::invalid_argument("synth_scene: noise-sigma must be a finite value >= 0");
  }
  if (!(spec.lattice_step > 0.0) || !std::isfinite(spec.lattice_step)) {
    throw std::invalid_argument("synth_scene: lattice step must be positive");
  }
}

}  // namespace

std::string_view to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::TwoRooms:
      return "two-rooms";
    case SceneKind::PlanarBoundary:
      return "planar-boundary";
    case SceneKind::CheckerColumns:
      return "checker-columns";
  }
  return "unknown";
}

SceneKind parse_scene_kind(std::string_view text) {
  if (text == "two-rooms") return SceneKind::TwoRooms;
  if (text == "planar-boundary") return SceneKind::PlanarBoundary;
  if (text == "checker-columns") return SceneKind::CheckerColumns;
  throw std::invalid_argument("unknown scene kind '" + std::string(text) +
                              "' (expected two-rooms, planar-boundary or checker-columns)");
}

std::size_t scene_class_count(const SceneSpec& spec) {
  switch (spec.kind) {
    case SceneKind::PlanarBoundary: {
      const std::size_t c = spec.classes == 0 ? 2 : spec.classes;
      if (c < 2 || c > 3) {
        throw std::invalid_argument("synth_scene: planar-boundary supports 2 or 3 classes");
      }
      return c;
    }
    case SceneKind::TwoRooms:
      if (spec.classes != 0 && spec.classes != kTwoRoomsClasses) {
        throw std::invalid_argument("synth_scene: two-rooms always has 3 classes");
      }
      return kTwoRoomsClasses;
    case SceneKind::CheckerColumns: {
      const std::size_t c = spec.classes == 0 ? 2 : spec.classes;
      if (c < 2 || c > kMaxCheckerClasses) {
        throw std::invalid_argument("synth_scene: checker-columns supports 2 to 8 classes");
      }
      return c;
    }
  }
  throw std::invalid_argument("synth_scene: unknown kind");
}

PointCloud synth_scene(const SceneSpec& spec) {
  validate(spec);
  const std::size_t classes = scene_class_count(spec);
  Builder b(spec.seed, spec.noise_sigma);
  b.positions.reserve(classes * spec.points_per_class);
  b.labels.reserve(classes * spec.points_per_class);
  switch (spec.kind) {
    case SceneKind::PlanarBoundary:
      planar_boundary(spec, classes, b);
      break;
    case SceneKind::TwoRooms:
      two_rooms(spec, b);
      break;
    case SceneKind::CheckerColumns:
      checker_columns(spec, classes, b);
      break;
  }
  return PointCloud(std::move(b.positions), std::move(b.labels), classes);
}

}  // namespace amc::geom
