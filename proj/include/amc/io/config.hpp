#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "amc/net/model_config.hpp"

namespace amc::io {

/// Invalid configuration text. `line` is 1-based, or 0 when the problem is
/// not tied to one line.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Accumulates `key = value` assignments over the defaults. Later
/// assignments win. finish() checks cross-key constraints.
class ConfigBuilder {
 public:
  ConfigBuilder() = default;
  explicit ConfigBuilder(net::ModelConfig base) : cfg_(std::move(base)) {}

  /// One assignment per line; blank lines and lines starting with `#` are
  /// skipped.
  void apply_text(std::string_view text, const std::string& source = "config");
  /// A single `key=value` (spaces around `=` allowed).
  void apply_assignment(std::string_view assignment, const std::string& source, std::size_t line);

  net::ModelConfig finish() const;

 private:
  struct Location {
    std::string source;
    std::size_t line = 0;
    std::size_t order = 0;
  };
  void set(const std::string& key, std::string_view value);
  [[noreturn]] void fail_at(const std::string& key, const std::string& message) const;

  net::ModelConfig cfg_;
  std::map<std::string, Location> where_;
  std::size_t assignments_ = 0;
};

net::ModelConfig parse_config(std::string_view text);
net::ModelConfig load_config(const std::filesystem::path& path);

/// Every key, one `key = value` line each, numbers printed with %.17g so the
/// text parses back to an identical config.
std::string serialize_config(const net::ModelConfig& cfg);

}  // namespace amc::io
