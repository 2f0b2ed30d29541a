#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace racegan {

/// Flat `key = value` config with dotted section prefixes (train.*, post.*,
/// proposer.*, synth.*, paths.*). Lines starting with # are comments.
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& file);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  std::string get_str(const std::string& key, const std::string& dflt) const;
  int get_int(const std::string& key, int dflt) const;
  std::int64_t get_i64(const std::string& key, std::int64_t dflt) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  /// Later entries win.
  void merge(const Config& other);

  /// Canonical text form: sorted `key = value` lines.
  std::string serialize() const;

  /// FNV-1a over the canonical form; embedded in checkpoints and manifests.
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace racegan
