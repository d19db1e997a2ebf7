#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "meshparts/errors.hpp"

namespace meshparts {

/// Hyperparameters for training and the experiment pipeline. Defaults follow
/// the reference configuration: 300 epochs, batch 32, 64-dim latent,
/// Chebyshev order 6, 4 parts, SGD momentum 0.9 with learning rate 0.0125
/// decayed by 0.99 per epoch, NMF sparsity 7.5.
struct RunConfig {
  std::size_t epochs = 300;
  std::size_t batch = 32;
  std::size_t latent = 64;      // Z
  std::size_t cheb_order = 6;   // K of the Chebyshev filter
  std::size_t parts = 4;        // K part encodings
  double sparsity = 7.5;        // lambda of the NMF L1 penalty
  double cycle_weight = 0.5;    // gamma on the cycle loss
  double lr = 0.0125;
  double lr_decay = 0.99;
  double momentum = 0.9;
  std::size_t levels = 4;
  double factor = 4.0;
  std::size_t nmf_restarts = 5;
  std::size_t nmf_iterations = 2000;
  std::uint64_t seed = 0;
  bool no_local_weights = false;
  bool no_projection = false;

  void validate() const {
    require(epochs >= 1 && batch >= 1 && latent >= 1 && cheb_order >= 1 && parts >= 1,
            "config: counts must be positive");
    require(levels >= 1 && factor > 1.0, "config: hierarchy needs levels >= 1, factor > 1");
    require(nmf_restarts >= 1 && nmf_iterations >= 1, "config: NMF needs restarts/iterations");
    require(lr > 0.0 && lr_decay > 0.0 && lr_decay <= 1.0, "config: bad learning-rate schedule");
    require(momentum >= 0.0 && momentum < 1.0, "config: momentum must be in [0, 1)");
    require(sparsity >= 0.0 && cycle_weight >= 0.0, "config: weights must be non-negative");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_bool(std::string_view v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(line, "expected a boolean, got '" + std::string(v) + "'");
}

template <typename T>
T parse_number(std::string_view v, std::size_t line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ParseError(line, "malformed value '" + std::string(v) + "'");
  return out;
}

}  // namespace detail

/// Parses `key = value` lines with optional `[section]` headers (sections are
/// cosmetic; keys are global). Unknown keys are rejected. `#` and `;` start
/// comments.
inline RunConfig parse_config_text(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));

    using detail::parse_number;
    if (key == "epochs") config.epochs = parse_number<std::size_t>(value, line_no);
    else if (key == "batch") config.batch = parse_number<std::size_t>(value, line_no);
    else if (key == "latent") config.latent = parse_number<std::size_t>(value, line_no);
    else if (key == "cheb_order") config.cheb_order = parse_number<std::size_t>(value, line_no);
    else if (key == "parts") config.parts = parse_number<std::size_t>(value, line_no);
    else if (key == "sparsity") config.sparsity = parse_number<double>(value, line_no);
    else if (key == "cycle_weight") config.cycle_weight = parse_number<double>(value, line_no);
    else if (key == "lr") config.lr = parse_number<double>(value, line_no);
    else if (key == "lr_decay") config.lr_decay = parse_number<double>(value, line_no);
    else if (key == "momentum") config.momentum = parse_number<double>(value, line_no);
    else if (key == "levels") config.levels = parse_number<std::size_t>(value, line_no);
    else if (key == "factor") config.factor = parse_number<double>(value, line_no);
    else if (key == "nmf_restarts") config.nmf_restarts = parse_number<std::size_t>(value, line_no);
    else if (key == "nmf_iterations")
      config.nmf_iterations = parse_number<std::size_t>(value, line_no);
    else if (key == "seed") config.seed = parse_number<std::uint64_t>(value, line_no);
    else if (key == "no_local_weights") config.no_local_weights = detail::parse_bool(value, line_no);
    else if (key == "no_projection") config.no_projection = detail::parse_bool(value, line_no);
    else throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
  }
  config.validate();
  return config;
}

inline std::string config_to_text(const RunConfig& c) {
  std::ostringstream out;
  out << "[training]\n"
      << "epochs = " << c.epochs << "\n"
      << "batch = " << c.batch << "\n";
  char buf[64];
  auto number = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "lr = " << number(c.lr) << "\n"
      << "lr_decay = " << number(c.lr_decay) << "\n"
      << "momentum = " << number(c.momentum) << "\n"
      << "cycle_weight = " << number(c.cycle_weight) << "\n"
      << "[model]\n"
      << "latent = " << c.latent << "\n"
      << "cheb_order = " << c.cheb_order << "\n"
      << "parts = " << c.parts << "\n"
      << "no_local_weights = " << (c.no_local_weights ? "true" : "false") << "\n"
      << "no_projection = " << (c.no_projection ? "true" : "false") << "\n"
      << "[hierarchy]\n"
      << "levels = " << c.levels << "\n"
      << "factor = " << number(c.factor) << "\n"
      << "[nmf]\n"
      << "sparsity = " << number(c.sparsity) << "\n"
      << "nmf_restarts = " << c.nmf_restarts << "\n"
      << "nmf_iterations = " << c.nmf_iterations << "\n"
      << "[run]\n"
      << "seed = " << c.seed << "\n";
  return out.str();
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace meshparts
