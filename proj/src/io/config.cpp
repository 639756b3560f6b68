#include "amc/io/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "amc/io/text.hpp"

namespace amc::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_real(std::string_view v) { return to_real(v); }

std::uint64_t parse_count(std::string_view v) { return to_count(v); }

bool parse_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> parse_dims(std::string_view v) {
  std::vector<std::size_t> dims;
  while (true) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    const auto d = parse_count(item);
    if (d == 0) {
      throw std::invalid_argument("dims must be positive");
    }
    dims.push_back(static_cast<std::size_t>(d));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return dims;
}

std::string format_real17(double v) { return format_real(v, 17); }

}  // namespace

ConfigError::ConfigError(std::string source, std::size_t line, const std::string& message)
    : std::invalid_argument(line ? source + " line " + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

void ConfigBuilder::apply_text(std::string_view text, const std::string& source) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    apply_assignment(t, source, line_no);
  }
}

void ConfigBuilder::apply_assignment(std::string_view assignment, const std::string& source, std::size_t line) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(source, line, "expected 'key = value'");
  }
  const std::string key(trim(assignment.substr(0, eq)));
  const auto value = trim(assignment.substr(eq + 1));
  if (key.empty()) {
    throw ConfigError(source, line, "missing key");
  }
  if (value.empty()) {
    throw ConfigError(source, line, "missing value for '" + key + "'");
  }
  try {
    set(key, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, line, key + ": " + e.what());
  }
  where_[key] = Location{source, line, ++assignments_};
}

void ConfigBuilder::set(const std::string& key, std::string_view v) {
  auto unit = [](double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    }
    return x;
  };
  net::ModelConfig& c = cfg_;
  if (key == "k") {
    c.k = parse_count(v);
    if (c.k < 2) throw std::invalid_argument("must be at least 2");
  } else if (key == "beta") {
    c.beta = parse_real(v);
    if (!(c.beta > 0.0)) throw std::invalid_argument("must be positive");
  } else if (key == "tau") {
    c.tau = parse_real(v);
    if (!(c.tau > 0.0)) throw std::invalid_argument("must be positive");
  } else if (key == "mu") {
    c.mu = parse_real(v);
  } else if (key == "nu") {
    c.nu = parse_real(v);
  } else if (key == "lambda") {
    c.lambda = unit(parse_real(v), "lambda");
  } else if (key == "omega") {
    c.omega = parse_real(v);
    if (c.omega < 0.0) throw std::invalid_argument("must be non-negative");
  } else if (key == "epsilon_lo") {
    c.epsilon_lo = unit(parse_real(v), "epsilon_lo");
  } else if (key == "epsilon_hi") {
    c.epsilon_hi = unit(parse_real(v), "epsilon_hi");
  } else if (key == "gamma") {
    c.gamma = unit(parse_real(v), "gamma");
  } else if (key == "k_tilde") {
    c.k_tilde = parse_count(v);
    if (c.k_tilde < 2) throw std::invalid_argument("must be at least 2");
  } else if (key == "stages") {
    c.stages = parse_count(v);
    if (c.stages < 1) throw std::invalid_argument("must be at least 1");
  } else if (key == "dims") {
    c.dims = parse_dims(v);
  } else if (key == "lr") {
    c.lr = parse_real(v);
    if (c.lr < 0.0) throw std::invalid_argument("must be non-negative");
  } else if (key == "epochs") {
    c.epochs = parse_count(v);
  } else if (key == "seed") {
    c.seed = parse_count(v);
  } else if (key == "cross_mask_mode") {
    if (v == "single") {
      c.cross_mode = refine::CrossMaskMode::Single;
    } else if (v == "sum") {
      c.cross_mode = refine::CrossMaskMode::Sum;
    } else {
      throw std::invalid_argument("expected single or sum, got '" + std::string(v) + "'");
    }
  } else if (key == "apm_detach") {
    c.apm_detach = parse_bool(v);
  } else if (key == "optimizer") {
    if (v == "amsgrad") {
      c.optimizer = net::Optimizer::AmsGrad;
    } else if (v == "sgd") {
      c.optimizer = net::Optimizer::Sgd;
    } else {
      throw std::invalid_argument("expected amsgrad or sgd, got '" + std::string(v) + "'");
    }
  } else {
    throw std::invalid_argument("unknown key");
  }
}

void ConfigBuilder::fail_at(const std::string& key, const std::string& message) const {
  const auto it = where_.find(key);
  if (it == where_.end()) {
    throw ConfigError("config", 0, message);
  }
  throw ConfigError(it->second.source, it->second.line, message);
}

net::ModelConfig ConfigBuilder::finish() const {
  auto later = [&](const char* a, const char* b) -> std::string {
    const auto ia = where_.find(a);
    const auto ib = where_.find(b);
    if (ia == where_.end()) return b;
    if (ib == where_.end()) return a;
    return ia->second.order > ib->second.order ? a : b;
  };
  if (cfg_.epsilon_lo > cfg_.epsilon_hi) {
    fail_at(later("epsilon_lo", "epsilon_hi"), "epsilon_lo must not exceed epsilon_hi");
  }
  if (cfg_.dims.size() != cfg_.stages) {
    fail_at(later("dims", "stages"), "dims lists " + std::to_string(cfg_.dims.size()) + " widths for " +
                                         std::to_string(cfg_.stages) + " stages");
  }
  try {
    cfg_.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config", 0, e.what());
  }
  return cfg_;
}

net::ModelConfig parse_config(std::string_view text) {
  ConfigBuilder b;
  b.apply_text(text);
  return b.finish();
}

net::ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  ConfigBuilder b;
  b.apply_text(ss.str(), path.string());
  return b.finish();
}

std::string serialize_config(const net::ModelConfig& c) {
  std::string dims;
  for (std::size_t i = 0; i < c.dims.size(); ++i) {
    dims += (i ? "," : "") + std::to_string(c.dims[i]);
  }
  std::ostringstream out;
  out << "k = " << c.k << "\n"
      << "beta = " << format_real17(c.beta) << "\n"
      << "tau = " << format_real17(c.tau) << "\n"
      << "mu = " << format_real17(c.mu) << "\n"
      << "nu = " << format_real17(c.nu) << "\n"
      << "lambda = " << format_real17(c.lambda) << "\n"
      << "omega = " << format_real17(c.omega) << "\n"
      << "epsilon_lo = " << format_real17(c.epsilon_lo) << "\n"
      << "epsilon_hi = " << format_real17(c.epsilon_hi) << "\n"
      << "gamma = " << format_real17(c.gamma) << "\n"
      << "k_tilde = " << c.k_tilde << "\n"
      << "stages = " << c.stages << "\n"
      << "dims = " << dims << "\n"
      << "lr = " << format_real17(c.lr) << "\n"
      << "epochs = " << c.epochs << "\n"
      << "seed = " << c.seed << "\n"
      << "cross_mask_mode = " << (c.cross_mode == refine::CrossMaskMode::Single ? "single" : "sum") << "\n"
      << "apm_detach = " << (c.apm_detach ? "true" : "false") << "\n"
      << "optimizer = " << (c.optimizer == net::Optimizer::AmsGrad ? "amsgrad" : "sgd") << "\n";
  return out.str();
}

}  // namespace amc::io
