#pragma once

#include "racegan/config.hpp"
#include "racegan/image.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace racegan {

enum class ScenarioTag {
  normal,
  curved_road,
  color_imbalance_green,
  color_imbalance_underexposed,
  blurry,
  dazzle_light
};

std::string to_string(ScenarioTag tag);
ScenarioTag scenario_tag_from_string(const std::string& s);

enum class Camera { front_left, front_right, synthetic };

struct Sample {
  RasterImage<float> image;
  BinaryMask mask;
  Camera camera = Camera::synthetic;
  std::set<ScenarioTag> tags;
  std::string name;

  void require_valid() const;
};

struct CorpusSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

/// Synthetic scene recipe: a curved road band over textured grass, optional
/// chassis wedge at the bottom edge, and tag-driven augmentations calibrated
/// so a large corpus approximates the reference scenario mix
/// (dazzle 53%, blurry 40%, curved 27%, color imbalance 25%, normal 10%).
struct SynthConfig {
  int resolution = 128;
  double curvature_max = 0.85;      // signed road bend, fraction of half-width
  double curvature_threshold = 0.25;  // |bend| at or above this tags curved_road
  double road_halfwidth_min = 0.24;  // fraction of image width, at bottom row
  double road_halfwidth_max = 0.40;
  bool occluder = true;

  // Per-tag draw probabilities. p_normal is consumed first; the remaining
  // flags are drawn independently and redrawn until at least one is set,
  // which is what the calibration below assumes.
  double p_normal = 0.105;
  double p_curved = 0.242;
  double p_dazzle = 0.474;
  double p_blurry = 0.356;
  double p_green = 0.121;
  double p_underexposed = 0.121;

  double asphalt_noise = 0.02;
  double grass_noise = 0.045;

  void require_valid() const;
};

SynthConfig synth_config_from(const Config& cfg);

struct LoadReport {
  std::vector<Sample> samples;
  std::vector<std::string> unmatched_masks;  // masks without an image; non-fatal
};

/// Loads `root/images/*.png|jpg` + `root/masks/*.png` pairs matched by stem,
/// with optional `root/tags.csv` rows of the form `filename,tag1;tag2`.
/// Images lacking a mask (or with mismatched dimensions) are a hard error.
LoadReport load_corpus(const std::filesystem::path& root);

/// Deterministic shuffle by seed; first floor(ratio*N) samples go to train.
CorpusSplit split(std::vector<Sample> samples, double ratio, std::uint64_t seed);

Sample synth_scene(std::uint64_t seed, const SynthConfig& cfg);
std::vector<Sample> synth_corpus(int n, std::uint64_t seed,
                                 const SynthConfig& cfg);

namespace detail {
/// synth_scene plus the geometry-only render it started from, so tests can
/// check that the road is darker than the background before exposure effects.
struct SynthDebug {
  RasterImage<float> pre_augmentation;
  Sample sample;
};
SynthDebug synth_scene_debug(std::uint64_t seed, const SynthConfig& cfg);
}  // namespace detail

}  // namespace racegan
