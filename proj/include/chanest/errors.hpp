#pragma once

#include <stdexcept>
#include <string>

namespace chanest {

/// A matrix (or column subset) required to be full rank is numerically rank deficient.
class numerical_rank_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver produced a non-finite or overflowing iterate.
class solver_divergence_error : public std::runtime_error {
 public:
  solver_divergence_error(const std::string& what, double sigma_level)
      : std::runtime_error(what), sigma_level_(sigma_level) {}

  /// Smoothing width active when the divergence was detected; 0 if not applicable.
  double sigma_level() const noexcept { return sigma_level_; }

 private:
  double sigma_level_;
};

/// Configuration file, override, or field value rejected.
class config_error : public std::runtime_error {
 public:
  config_error(const std::string& what, std::string key, int line = 0)
      : std::runtime_error(line > 0 ? what + " (key '" + key + "', line " + std::to_string(line) + ")"
                                    : what + " (key '" + key + "')"),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }

  /// 1-based line in the configuration file; 0 for overrides and field validation.
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace chanest
