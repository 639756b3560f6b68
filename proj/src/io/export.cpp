#include "amc/io/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "amc/io/text.hpp"

namespace amc::io {

void write_ambiguity_csv(std::ostream& out, std::span<const geom::Vec3> positions, std::span<const double> ambiguity,
                         std::span<const double> margins) {
  if (ambiguity.size() != positions.size() || margins.size() != positions.size()) {
    throw std::invalid_argument("write_ambiguity_csv: inputs must share length");
  }
  out << "index,x,y,z,ambiguity,margin\n";
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto& p = positions[i];
    out << i << ',' << format_real(p[0], 9) << ',' << format_real(p[1], 9) << ',' << format_real(p[2], 9) << ','
        << format_real(ambiguity[i], 9) << ',' << format_real(margins[i], 9) << '\n';
  }
}

std::array<std::uint8_t, 3> ambiguity_color(double a) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw std::invalid_argument("ambiguity_color: ambiguity outside [0, 1]");
  }
  const auto c = static_cast<std::uint8_t>(std::lround(255.0 * a));
  return {c, 0, static_cast<std::uint8_t>(255 - c)};
}

void write_ply(std::ostream& out, std::span<const geom::Vec3> positions, std::span<const double> ambiguity) {
  if (ambiguity.size() != positions.size()) {
    throw std::invalid_argument("write_ply: one ambiguity per point required");
  }
  out << "ply\nformat ascii 1.0\nelement vertex " << positions.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto rgb = ambiguity_color(ambiguity[i]);
    for (int a = 0; a < 3; ++a) {
      out << format_real(static_cast<float>(positions[i][a]), 9) << ' ';
    }
    out << int(rgb[0]) << ' ' << int(rgb[1]) << ' ' << int(rgb[2]) << '\n';
  }
}

void write_ply_file(const std::filesystem::path& path, std::span<const geom::Vec3> positions,
                    std::span<const double> ambiguity) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  write_ply(out, positions, ambiguity);
}

std::vector<PlyVertex> read_ply(std::istream& in) {
  std::string line;
  std::vector<std::string_view> tok;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw std::invalid_argument(std::string("ply: unexpected end of file in ") + what);
    }
    split_whitespace(line, tok);
  };
  next("header");
  if (tok.size() != 1 || tok[0] != "ply") {
    throw std::invalid_argument("ply: missing magic line");
  }
  std::size_t count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::vector<std::string> props;
  while (true) {
    next("header");
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") throw std::invalid_argument("ply: only ascii format is supported");
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw std::invalid_argument("ply: malformed element line");
      if (seen_vertex) throw std::invalid_argument("ply: only a single vertex element is supported");
      in_vertex = tok[1] == "vertex";
      if (!in_vertex) throw std::invalid_argument("ply: unsupported element '" + std::string(tok[1]) + "'");
      seen_vertex = true;
      count = static_cast<std::size_t>(to_count(tok[2]));
    } else if (tok[0] == "property") {
      if (!in_vertex || tok.size() != 3) throw std::invalid_argument("ply: malformed property line");
      props.emplace_back(tok[2]);
    } else if (tok[0] != "comment" && tok[0] != "obj_info") {
      throw std::invalid_argument("ply: unexpected header line '" + line + "'");
    }
  }
  auto column = [&](const char* name) {
    const auto it = std::find(props.begin(), props.end(), name);
    if (it == props.end()) throw std::invalid_argument(std::string("ply: missing property ") + name);
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::size_t cols[6] = {column("x"), column("y"), column("z"), column("red"), column("green"), column("blue")};
  std::vector<PlyVertex> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    next("vertex data");
    if (tok.size() != props.size()) {
      throw std::invalid_argument("ply: vertex " + std::to_string(i) + " has " + std::to_string(tok.size()) +
                                  " values, expected " + std::to_string(props.size()));
    }
    for (int a = 0; a < 3; ++a) out[i].position[a] = to_real(tok[cols[a]]);
    for (int c = 0; c < 3; ++c) {
      const auto v = to_count(tok[cols[3 + c]]);
      if (v > 255) throw std::invalid_argument("ply: color channel above 255");
      out[i].rgb[c] = static_cast<std::uint8_t>(v);
    }
  }
  return out;
}

std::vector<PlyVertex> read_ply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return read_ply(in);
}

void write_prediction_csv(std::ostream& out, std::span<const geom::Label> labels, std::span<const double> ambiguity) {
  if (ambiguity.size() != labels.size()) {
    throw std::invalid_argument("write_prediction_csv: inputs must share length");
  }
  out << "index,label,ambiguity\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << labels[i] << ',' << format_real(ambiguity[i], 9) << '\n';
  }
}

void write_breakdown_csv(std::ostream& out, const metrics::Scores& overall, std::size_t total,
                         std::span<const metrics::BinReport> bins) {
  out << "subset,points,oa,macc,miou\n";
  auto row = [&](std::string_view name, std::size_t n, const metrics::Scores& s) {
    out << name << ',' << n << ',' << format_real(s.oa, 9) << ',' << format_real(s.macc, 9) << ','
        << format_real(s.miou, 9) << '\n';
  };
  row("all", total, overall);
  for (const auto& b : bins) row(metrics::to_string(b.bin), b.count, b.scores);
}

}  // namespace amc::io
