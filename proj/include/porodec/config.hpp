#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "porodec/expr.hpp"

namespace porodec {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat sectioned `key = value` configuration.
///
///     # comment
///     [mesh]
///     n = 16
///
/// Entries are addressed as `section.key`. Every key is checked against a
/// fixed schema; unknown keys are rejected with their name. Values stay
/// text until read through one of the typed accessors.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load_file(const std::string& path);
  /// Throws ConfigError listing the available names.
  static Config preset(const std::string& name);
  static std::vector<std::string> preset_names();

  /// Sets `section.key`; the key must be known.
  void set(const std::string& key, const std::string& value);
  /// Applies a `section.key=value` override.
  void apply_override(const std::string& assignment);
  void erase(const std::string& key);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  /// Constant expression value (so `1/16` is accepted).
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  Expression expression(const std::string& key) const;
  Expression expression_or(const std::string& key, const std::string& fallback) const;
  /// Comma-separated list of constant expressions.
  std::vector<double> list(const std::string& key) const;

  /// Value of model.kind: two-field, network or toy.
  std::string kind() const;

  /// Canonical text form; `parse(to_text())` reproduces the config.
  std::string to_text() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  static bool known_key(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace porodec
