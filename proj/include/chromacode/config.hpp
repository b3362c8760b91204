#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chromacode/errors.hpp"

namespace chromacode {

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Hierarchical configuration addressed by dotted keys ("camera.kind").
/// Backed by YAML; `--set key=value` overrides parse the value as YAML too,
/// so lists (`[7, 9]`) and maps can be overridden from the command line.
class Config {
 public:
  Config();
  ~Config();
  Config(const Config& other);
  Config& operator=(const Config& other);
  Config(Config&&) noexcept;
  Config& operator=(Config&&) noexcept;

  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text);

  /// Applies "key=value".
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value_yaml);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  /// Elements of a sequence of maps, each exposed as its own Config.
  std::vector<Config> get_list(const std::string& key) const;

  /// Fully resolved configuration as YAML text.
  std::string dump() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chromacode
