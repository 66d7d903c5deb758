#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "chanest/bench.hpp"
#include "chanest/errors.hpp"

namespace chanest {
namespace detail {

inline std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

inline long long parse_integer(std::string_view text, const std::string& key, int line) {
  long long value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
    throw config_error("expected an integer, got '" + std::string(text) + "'", key, line);
  return value;
}

inline std::uint64_t parse_unsigned(std::string_view text, const std::string& key, int line) {
  std::uint64_t value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
    throw config_error("expected an unsigned integer, got '" + std::string(text) + "'", key, line);
  return value;
}

inline double parse_real(std::string_view text, const std::string& key, int line) {
  if (text == "inf" || text == "+inf")
    return std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
    throw config_error("expected a real number, got '" + std::string(text) + "'", key, line);
  return value;
}

inline bool parse_flag(std::string_view text, const std::string& key, int line) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw config_error("expected true/false or 1/0, got '" + std::string(text) + "'", key, line);
}

inline std::vector<std::string_view> split(std::string_view text, char separator) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = text.find(separator, begin);
    if (end == std::string_view::npos) {
      parts.push_back(text.substr(begin));
      return parts;
    }
    parts.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
}

/// Splits a range token "a..b..step" into its three parts, or returns the
/// token alone when it carries no "..".
inline std::vector<std::string_view> split_range(std::string_view token) {
  if (token.find("..") == std::string_view::npos) return {token};
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = token.find("..", begin);
    if (end == std::string_view::npos) {
      parts.push_back(token.substr(begin));
      return parts;
    }
    parts.push_back(token.substr(begin, end - begin));
    begin = end + 2;
  }
}

/// Comma-separated integers; each element may be an inclusive range
/// "first..last..step" with a positive step.
inline std::vector<int> parse_integer_list(std::string_view text, const std::string& key,
                                           int line) {
  std::vector<int> values;
  for (std::string_view token : split(text, ',')) {
    token = trim(token);
    const auto parts = split_range(token);
    if (parts.size() == 1) {
      values.push_back(static_cast<int>(parse_integer(parts[0], key, line)));
    } else if (parts.size() == 3) {
      const long long first = parse_integer(trim(parts[0]), key, line);
      const long long last = parse_integer(trim(parts[1]), key, line);
      const long long step = parse_integer(trim(parts[2]), key, line);
      if (step < 1) throw config_error("range step must be >= 1", key, line);
      if (last < first) throw config_error("range end is below its start", key, line);
      for (long long v = first; v <= last; v += step)
        values.push_back(static_cast<int>(v));
    } else {
      throw config_error("malformed range '" + std::string(token) + "', expected first..last..step",
                         key, line);
    }
  }
  return values;
}

/// Comma-separated reals; each element may be an inclusive range
/// "first..last..step" with a positive finite step, or "inf".
inline std::vector<double> parse_real_list(std::string_view text, const std::string& key,
                                           int line) {
  std::vector<double> values;
  for (std::string_view token : split(text, ',')) {
    token = trim(token);
    const auto parts = split_range(token);
    if (parts.size() == 1) {
      values.push_back(parse_real(parts[0], key, line));
    } else if (parts.size() == 3) {
      const double first = parse_real(trim(parts[0]), key, line);
      const double last = parse_real(trim(parts[1]), key, line);
      const double step = parse_real(trim(parts[2]), key, line);
      if (!(step > 0.0) || std::isinf(step) || std::isinf(first) || std::isinf(last))
        throw config_error("range endpoints and step must be finite with step > 0", key, line);
      if (last < first) throw config_error("range end is below its start", key, line);
      // Half-step slack absorbs accumulated rounding at the range end.
      for (double v = first; v <= last + 0.5 * step; v += step)
        values.push_back(std::min(v, last));
    } else {
      throw config_error("malformed range '" + std::string(token) + "', expected first..last..step",
                         key, line);
    }
  }
  return values;
}

inline std::vector<std::string> parse_string_list(std::string_view text) {
  std::vector<std::string> values;
  for (std::string_view token : split(text, ',')) {
    const std::string_view trimmed = trim(token);
    if (!trimmed.empty()) values.emplace_back(trimmed);
  }
  return values;
}

}  // namespace detail

/// Applies one key = value assignment. Line 0 marks command-line overrides.
inline void apply_config_value(ExperimentConfig& config, std::string_view key_view,
                               std::string_view value, int line) {
  const std::string key(key_view);
  using namespace detail;
  if (key == "channel_length") {
    config.channel_length = static_cast<int>(parse_integer(value, key, line));
  } else if (key == "training_length") {
    config.training_length = static_cast<int>(parse_integer(value, key, line));
  } else if (key == "sparsity_values") {
    config.sparsity_values = parse_integer_list(value, key, line);
  } else if (key == "snr_values_db") {
    config.snr_values_db = parse_real_list(value, key, line);
  } else if (key == "trials") {
    config.trials = static_cast<int>(parse_integer(value, key, line));
  } else if (key == "base_seed") {
    config.base_seed = parse_unsigned(value, key, line);
  } else if (key == "algorithms") {
    config.algorithms = parse_string_list(value);
  } else if (key == "tap_std") {
    config.tap_std = parse_real(value, key, line);
  } else if (key == "msl0.sigma_decay") {
    config.msl0.sigma_decay = parse_real(value, key, line);
  } else if (key == "msl0.sigma_floor_factor") {
    config.msl0.sigma_floor_factor = parse_real(value, key, line);
  } else if (key == "msl0.inner_iterations") {
    config.msl0.inner_iterations = static_cast<int>(parse_integer(value, key, line));
  } else if (key == "msl0.step_size") {
    config.msl0.step_size = parse_real(value, key, line);
  } else if (key == "msl0.max_sigma_levels") {
    config.msl0.max_sigma_levels = static_cast<int>(parse_integer(value, key, line));
  } else if (key == "msl0.residual_budget") {
    config.msl0.residual_budget = parse_real(value, key, line);
  } else if (key == "msl0.residual_budget_factor") {
    config.msl0.residual_budget_factor = parse_real(value, key, line);
  } else if (key == "msl0.correlation_budget") {
    config.msl0.correlation_budget = parse_real(value, key, line);
  } else if (key == "lasso.lambda") {
    config.lasso.lambda = parse_real(value, key, line);
  } else if (key == "lasso.max_iterations") {
    config.lasso.max_iterations = static_cast<int>(parse_integer(value, key, line));
  } else if (key == "lasso.objective_tolerance") {
    config.lasso.objective_tolerance = parse_real(value, key, line);
  } else if (key == "lasso.step_size") {
    config.lasso.step_size = parse_real(value, key, line);
  } else if (key == "lasso.accelerate") {
    config.lasso.accelerate = parse_flag(value, key, line);
  } else if (key == "greedy.max_iterations") {
    config.greedy.max_iterations = static_cast<int>(parse_integer(value, key, line));
  } else if (key == "greedy.residual_tolerance") {
    config.greedy.residual_tolerance = parse_real(value, key, line);
  } else {
    throw config_error("unknown configuration key", key, line);
  }
}

/// Parses "key = value" lines ('#' starts a comment, blank lines ignored),
/// then applies overrides ("key=value" strings) in order, then validates.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::vector<std::string>& overrides = {}) {
  ExperimentConfig config;
  std::istringstream stream(text);
  std::string raw_line;
  int line_number = 0;
  while (std::getline(stream, raw_line)) {
    ++line_number;
    std::string_view line = raw_line;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto equals = line.find('=');
    if (equals == std::string_view::npos)
      throw config_error("expected key = value", std::string(line), line_number);
    apply_config_value(config, detail::trim(line.substr(0, equals)),
                       detail::trim(line.substr(equals + 1)), line_number);
  }
  for (const std::string& override_text : overrides) {
    const std::string_view entry = detail::trim(override_text);
    const auto equals = entry.find('=');
    if (equals == std::string_view::npos)
      throw config_error("override must have the form key=value", std::string(entry), 0);
    apply_config_value(config, detail::trim(entry.substr(0, equals)),
                       detail::trim(entry.substr(equals + 1)), 0);
  }
  config.validate();
  return config;
}

/// Reads and parses a configuration file; an empty path yields the defaults
/// plus overrides.
inline ExperimentConfig parse_config(const std::string& path,
                                     const std::vector<std::string>& overrides = {}) {
  if (path.empty()) return parse_config_text("", overrides);
  std::ifstream input(path);
  if (!input)
    throw config_error("cannot open configuration file '" + path + "'", path, 0);
  std::ostringstream content;
  content << input.rdbuf();
  return parse_config_text(content.str(), overrides);
}

/// Human-readable summary of the effective configuration.
inline std::string describe(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "channel_length = " << config.channel_length << '\n'
      << "training_length = " << config.training_length << '\n';
  out << "sparsity_values =";
  for (int v : config.sparsity_values) out << ' ' << v;
  out << '\n' << "snr_values_db =";
  for (double v : config.snr_values_db) out << ' ' << v;
  out << '\n'
      << "trials = " << config.trials << '\n'
      << "base_seed = " << config.base_seed << '\n';
  out << "algorithms =";
  for (const auto& name : config.algorithms) out << ' ' << name;
  out << '\n' << "tap_std = " << config.tap_std << '\n';
  out << "msl0: sigma_decay = " << config.msl0.sigma_decay
      << ", inner_iterations = " << config.msl0.inner_iterations
      << ", step_size = " << config.msl0.step_size
      << ", max_sigma_levels = " << config.msl0.max_sigma_levels
      << ", residual_budget_factor = " << config.msl0.residual_budget_factor << '\n';
  out << "lasso: lambda = ";
  if (config.lasso.lambda)
    out << *config.lasso.lambda;
  else
    out << "auto";
  out << ", max_iterations = " << config.lasso.max_iterations << '\n';
  out << "greedy: max_iterations = " << config.greedy.max_iterations
      << ", residual_tolerance = " << config.greedy.residual_tolerance << '\n';
  return out.str();
}

}  // namespace chanest
