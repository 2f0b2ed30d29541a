#pragma once

#include "racegan/net/model.hpp"
#include "racegan/net/spec.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace racegan {

/// Tagged binary container for trained float parameters: magic, format
/// version, the serialized network spec, the config hash of the run that
/// produced it, and the trainable plus running vectors of both networks.
struct Checkpoint {
  static constexpr std::uint32_t kMagic = 0x4b434752;  // "RGCK"
  static constexpr std::uint32_t kVersion = 1;

  net::NetworkSpec spec;
  std::uint64_t config_hash = 0;
  net::Vec<float> generator_flat, generator_running;
  net::Vec<float> discriminator_flat, discriminator_running;

  static Checkpoint from_model(const net::Model<float>& model,
                               std::uint64_t config_hash);
  net::Model<float> to_model() const;

  void save(const std::filesystem::path& file) const;
  static Checkpoint load(const std::filesystem::path& file);
};

}  // namespace racegan
