#include "amc/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "amc/io/config.hpp"

namespace amc::io {
namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

/// false on a clean end of file before the first byte.
template <typename T>
bool get_le(std::istream& in, T& v, bool eof_ok = false) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof bytes);
  if (in.gcount() == 0 && eof_ok && in.eof()) {
    return false;
  }
  if (in.gcount() != static_cast<std::streamsize>(sizeof bytes)) {
    throw std::invalid_argument("checkpoint: truncated file");
  }
  v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return true;
}

std::string get_bytes(std::istream& in, std::uint64_t n, std::uint64_t limit) {
  if (n > limit) {
    throw std::invalid_argument("checkpoint: implausible length " + std::to_string(n));
  }
  std::string s(static_cast<std::size_t>(n), '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::invalid_argument("checkpoint: truncated file");
  }
  return s;
}

constexpr std::uint64_t kMaxText = 1u << 20;
constexpr std::uint64_t kMaxElements = 1ull << 32;

}  // namespace

void save_checkpoint(std::ostream& out, const net::Model& model) {
  out.write(kCheckpointMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const std::string cfg = serialize_config(model.config());
  put_le<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  for (const auto& t : model.state()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape) put_le<std::uint64_t>(out, d);
    for (double v : t.value.data) put_f64(out, v);
  }
}

void save_checkpoint(const std::filesystem::path& path, const net::Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint " + path.string());
  }
  save_checkpoint(out, model);
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing checkpoint " + path.string());
  }
}

net::Model load_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw std::invalid_argument("checkpoint: bad magic");
  }
  std::uint32_t version = 0;
  get_le(in, version);
  if (version != kCheckpointVersion) {
    throw std::invalid_argument("checkpoint: unsupported version " + std::to_string(version));
  }
  std::uint64_t cfg_len = 0;
  get_le(in, cfg_len);
  const net::ModelConfig cfg = parse_config(get_bytes(in, cfg_len, kMaxText));

  std::vector<net::NamedTensor> state;
  std::uint32_t name_len = 0;
  while (get_le(in, name_len, true)) {
    net::NamedTensor t;
    t.name = get_bytes(in, name_len, kMaxText);
    std::uint32_t rank = 0;
    get_le(in, rank);
    if (rank > 8) {
      throw std::invalid_argument("checkpoint: tensor '" + t.name + "' has rank " + std::to_string(rank));
    }
    std::uint64_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint64_t d = 0;
      get_le(in, d);
      if (d > kMaxElements || count * d > kMaxElements) {
        throw std::invalid_argument("checkpoint: tensor '" + t.name + "' is implausibly large");
      }
      count *= d;
      t.value.shape.push_back(static_cast<std::size_t>(d));
    }
    t.value.data.resize(static_cast<std::size_t>(count));
    for (double& v : t.value.data) {
      std::uint64_t bits = 0;
      get_le(in, bits);
      v = std::bit_cast<double>(bits);
    }
    state.push_back(std::move(t));
  }
  return net::Model::from_state(cfg, state);
}

net::Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint " + path.string());
  }
  return load_checkpoint(in);
}

}  // namespace amc::io
