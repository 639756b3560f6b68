#include "amc/io/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace amc::io {

std::string format_real(double v, int digits) {
  // printf's %g honors LC_NUMERIC; to_chars does not.
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  if (ec != std::errc()) {
    throw std::runtime_error("format_real: conversion failed");
  }
  return std::string(buf, ptr);
}

double to_real(std::string_view token) {
  double out = 0.0;
  const char* first = token.data();
  if (!token.empty() && token.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), out);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw std::invalid_argument("'" + std::string(token) + "' is not a number");
  }
  if (!std::isfinite(out)) {
    throw std::invalid_argument("'" + std::string(token) + "' is not finite");
  }
  return out;
}

std::uint64_t to_count(std::string_view token) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw std::invalid_argument("'" + std::string(token) + "' is not a non-negative integer");
  }
  return out;
}

void split_whitespace(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
}

}  // namespace amc::io
