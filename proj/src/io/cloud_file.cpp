#include "amc/io/cloud_file.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "amc/io/text.hpp"

namespace amc::io {

geom::PointCloud read_cloud(std::istream& in, std::optional<std::size_t> num_classes) {
  std::vector<geom::Vec3> positions;
  std::vector<geom::Label> labels;
  std::vector<double> features;
  std::size_t tokens_per_line = 0;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    split_whitespace(line, tokens);
    if (tokens.empty() || tokens.front().front() == '#') {
      continue;
    }
    const auto where = [&] { return "cloud line " + std::to_string(line_no) + ": "; };
    if (tokens.size() < 4) {
      throw std::invalid_argument(where() + "expected at least x y z label");
    }
    if (tokens_per_line == 0) {
      tokens_per_line = tokens.size();
    } else if (tokens.size() != tokens_per_line) {
      throw std::invalid_argument(where() + std::to_string(tokens.size()) + " tokens, earlier lines have " +
                                  std::to_string(tokens_per_line));
    }
    try {
      positions.push_back({to_real(tokens[0]), to_real(tokens[1]), to_real(tokens[2])});
      for (std::size_t t = 3; t + 1 < tokens.size(); ++t) {
        features.push_back(to_real(tokens[t]));
      }
      const std::uint64_t label = to_count(tokens.back());
      if (label > 0xffffffffu) {
        throw std::invalid_argument("label out of range");
      }
      labels.push_back(static_cast<geom::Label>(label));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where() + e.what());
    }
  }
  if (positions.empty()) {
    throw std::invalid_argument("cloud: no points");
  }
  std::size_t classes = 0;
  for (geom::Label l : labels) classes = std::max<std::size_t>(classes, l + 1);
  if (num_classes) {
    if (*num_classes < classes) {
      throw std::invalid_argument("cloud: label " + std::to_string(classes - 1) + " is not below " +
                                  std::to_string(*num_classes) + " classes");
    }
    classes = *num_classes;
  }
  std::optional<Matrix> feats;
  const std::size_t d = tokens_per_line - 4;
  if (d > 0) {
    feats = Matrix(positions.size(), d, std::move(features));
  }
  return geom::PointCloud(std::move(positions), std::move(labels), classes, std::move(feats));
}

geom::PointCloud read_cloud_file(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open cloud file " + path.string());
  }
  return read_cloud(in, num_classes);
}

void write_cloud(std::ostream& out, const geom::PointCloud& cloud) {
  out << "# x y z";
  for (std::size_t f = 0; f < cloud.feature_dim(); ++f) out << " f" << f;
  out << " label\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.position(i);
    out << format_real(p[0], 17) << ' ' << format_real(p[1], 17) << ' ' << format_real(p[2], 17);
    if (cloud.has_features()) {
      for (double v : cloud.features()->row(i)) out << ' ' << format_real(v, 17);
    }
    out << ' ' << cloud.label(i) << '\n';
  }
}

void write_cloud_file(const std::filesystem::path& path, const geom::PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write cloud file " + path.string());
  }
  write_cloud(out, cloud);
  if (!out) {
    throw std::runtime_error("failed writing cloud file " + path.string());
  }
}

}  // namespace amc::io
