#include "racegan/dataset.hpp"

#include "racegan/image_io.hpp"
#include "racegan/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace racegan {

std::string to_string(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::normal: return "normal";
    case ScenarioTag::curved_road: return "curved_road";
    case ScenarioTag::color_imbalance_green: return "color_imbalance_green";
    case ScenarioTag::color_imbalance_underexposed:
      return "color_imbalance_underexposed";
    case ScenarioTag::blurry: return "blurry";
    case ScenarioTag::dazzle_light: return "dazzle_light";
  }
  throw std::logic_error("unknown ScenarioTag");
}

ScenarioTag scenario_tag_from_string(const std::string& s) {
  static const std::map<std::string, ScenarioTag> table = {
      {"normal", ScenarioTag::normal},
      {"curved_road", ScenarioTag::curved_road},
      {"color_imbalance_green", ScenarioTag::color_imbalance_green},
      {"color_imbalance_underexposed", ScenarioTag::color_imbalance_underexposed},
      {"blurry", ScenarioTag::blurry},
      {"dazzle_light", ScenarioTag::dazzle_light},
  };
  auto it = table.find(s);
  if (it == table.end()) throw std::runtime_error("unknown scenario tag: " + s);
  return it->second;
}

void Sample::require_valid() const {
  image.require_valid();
  require_binary(mask, "Sample");
  if (mask.rows() != image.height() || mask.cols() != image.width())
    throw std::invalid_argument("Sample " + name +
                                ": image and mask dimensions differ");
  if (tags.empty())
    throw std::invalid_argument("Sample " + name + ": tags must be non-empty");
  if (tags.count(ScenarioTag::normal) && tags.size() > 1)
    throw std::invalid_argument("Sample " + name +
                                ": normal excludes all other tags");
}

void SynthConfig::require_valid() const {
  if (resolution < 16) throw std::invalid_argument("synth: resolution too small");
  if (road_halfwidth_min <= 0.0 || road_halfwidth_max >= 0.5 ||
      road_halfwidth_min > road_halfwidth_max)
    throw std::invalid_argument("synth: road half-width range invalid");
  for (double p : {p_normal, p_curved, p_dazzle, p_blurry, p_green,
                   p_underexposed})
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("synth: probability outside [0,1]");
  if (curvature_max < 0.0 || curvature_threshold < 0.0)
    throw std::invalid_argument("synth: curvature values must be >= 0");
}

SynthConfig synth_config_from(const Config& cfg) {
  SynthConfig s;
  s.resolution = cfg.get_int("synth.resolution", s.resolution);
  s.curvature_max = cfg.get_double("synth.curvature_max", s.curvature_max);
  s.curvature_threshold =
      cfg.get_double("synth.curvature_threshold", s.curvature_threshold);
  s.road_halfwidth_min =
      cfg.get_double("synth.road_halfwidth_min", s.road_halfwidth_min);
  s.road_halfwidth_max =
      cfg.get_double("synth.road_halfwidth_max", s.road_halfwidth_max);
  s.occluder = cfg.get_bool("synth.occluder", s.occluder);
  s.p_normal = cfg.get_double("synth.p_normal", s.p_normal);
  s.p_curved = cfg.get_double("synth.p_curved", s.p_curved);
  s.p_dazzle = cfg.get_double("synth.p_dazzle", s.p_dazzle);
  s.p_blurry = cfg.get_double("synth.p_blurry", s.p_blurry);
  s.p_green = cfg.get_double("synth.p_green", s.p_green);
  s.p_underexposed = cfg.get_double("synth.p_underexposed", s.p_underexposed);
  s.asphalt_noise = cfg.get_double("synth.asphalt_noise", s.asphalt_noise);
  s.grass_noise = cfg.get_double("synth.grass_noise", s.grass_noise);
  s.require_valid();
  return s;
}

namespace {

struct TagPlan {
  bool normal = false;
  bool curved = false, dazzle = false, blurry = false, green = false,
       underexposed = false;
};

TagPlan draw_tags(Rng& rng, const SynthConfig& cfg) {
  TagPlan plan;
  const double flag_mass =
      cfg.p_curved + cfg.p_dazzle + cfg.p_blurry + cfg.p_green + cfg.p_underexposed;
  if (flag_mass <= 0.0 || rng.uniform() < cfg.p_normal) {
    plan.normal = true;
    return plan;
  }
  // at least one challenge flag must be present in a non-normal sample
  for (;;) {
    plan.curved = rng.bernoulli(cfg.p_curved);
    plan.dazzle = rng.bernoulli(cfg.p_dazzle);
    plan.blurry = rng.bernoulli(cfg.p_blurry);
    plan.green = rng.bernoulli(cfg.p_green);
    plan.underexposed = rng.bernoulli(cfg.p_underexposed);
    if (plan.curved || plan.dazzle || plan.blurry || plan.green ||
        plan.underexposed)
      return plan;
  }
}

float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

void gaussian_blur(Planef& p, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  float sum = 0.0f;
  for (int i = -radius; i <= radius; ++i) {
    const float v = std::exp(static_cast<float>(-0.5 * (i * i) / (sigma * sigma)));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (float& v : k) v /= sum;
  const Eigen::Index h = p.rows(), w = p.cols();
  Planef tmp(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        Eigen::Index xx = x + i;
        xx = xx < 0 ? 0 : (xx >= w ? w - 1 : xx);
        acc += k[static_cast<std::size_t>(i + radius)] * p(y, xx);
      }
      tmp(y, x) = acc;
    }
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        Eigen::Index yy = y + i;
        yy = yy < 0 ? 0 : (yy >= h ? h - 1 : yy);
        acc += k[static_cast<std::size_t>(i + radius)] * tmp(yy, x);
      }
      p(y, x) = acc;
    }
}

}  // namespace

namespace detail {

SynthDebug synth_scene_debug(std::uint64_t seed, const SynthConfig& cfg) {
  cfg.require_valid();
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
  const int R = cfg.resolution;

  const TagPlan plan = draw_tags(rng, cfg);

  // geometry
  double bend;
  if (plan.normal || !plan.curved) {
    const double lim = std::min(cfg.curvature_threshold * 0.9, cfg.curvature_max);
    bend = rng.uniform(-lim, lim);
  } else {
    const double lo = std::min(cfg.curvature_threshold, cfg.curvature_max);
    const double mag = rng.uniform(lo, cfg.curvature_max);
    bend = rng.bernoulli(0.5) ? mag : -mag;
  }
  const double horizon = rng.uniform(0.22, 0.38) * R;
  const double hw_bottom = rng.uniform(cfg.road_halfwidth_min,
                                       cfg.road_halfwidth_max) * R;
  const double hw_top = hw_bottom * rng.uniform(0.10, 0.22);
  const double center_bottom = 0.5 * R + rng.uniform(-0.12, 0.12) * R;

  // colors, jittered per scene
  const float grass_r = static_cast<float>(0.16 + rng.uniform(-0.04, 0.04));
  const float grass_g = static_cast<float>(0.42 + rng.uniform(-0.06, 0.06));
  const float grass_b = static_cast<float>(0.13 + rng.uniform(-0.03, 0.03));
  const float road_r = static_cast<float>(0.21 + rng.uniform(-0.03, 0.03));
  const float road_g = road_r + static_cast<float>(rng.uniform(-0.01, 0.01));
  const float road_b = road_r + static_cast<float>(rng.uniform(0.0, 0.03));

  // low-frequency grass mottling
  const double f1x = rng.uniform(0.02, 0.08), f1y = rng.uniform(0.02, 0.08);
  const double ph1 = rng.uniform(0.0, 6.283185307179586);
  const double f2x = rng.uniform(0.08, 0.2), f2y = rng.uniform(0.08, 0.2);
  const double ph2 = rng.uniform(0.0, 6.283185307179586);

  RasterImage<float> img;
  img.mode = PixelMode::unit;
  img.r.resize(R, R);
  img.g.resize(R, R);
  img.b.resize(R, R);
  BinaryMask mask = BinaryMask::Zero(R, R);

  const double span = (R - 1) - horizon;
  for (int y = 0; y < R; ++y) {
    // s: 0 at the bottom row, 1 at the horizon
    const double s = y >= horizon ? ((R - 1) - y) / span : 1.0;
    const double xc = center_bottom + bend * (0.5 * R) * s * s;
    const double hw = hw_bottom + (hw_top - hw_bottom) * s;
    for (int x = 0; x < R; ++x) {
      const bool road = y >= horizon && std::abs(x - xc) <= hw;
      float r, g, b;
      if (road) {
        const float n = static_cast<float>(rng.normal(0.0, cfg.asphalt_noise));
        r = road_r + n;
        g = road_g + n;
        b = road_b + n;
        mask(y, x) = 1;
      } else {
        const float mottle = static_cast<float>(
            0.03 * std::sin(6.283185307179586 * (f1x * x + f1y * y) + ph1) +
            0.02 * std::sin(6.283185307179586 * (f2x * x + f2y * y) + ph2));
        const float n = static_cast<float>(rng.normal(0.0, cfg.grass_noise));
        r = grass_r + 0.5f * mottle + n;
        g = grass_g + mottle + n;
        b = grass_b + 0.3f * mottle + n;
      }
      img.r(y, x) = clamp01(r);
      img.g(y, x) = clamp01(g);
      img.b(y, x) = clamp01(b);
    }
  }

  // chassis wedge along the bottom edge, excluded from the positive mask
  if (cfg.occluder) {
    const double ch = rng.uniform(0.06, 0.14) * R;
    for (int x = 0; x < R; ++x) {
      const double u = (x - 0.5 * R) / (0.5 * R);
      const double height = ch * (1.0 - u * u);
      for (int y = static_cast<int>(std::ceil((R - 1) - height)); y < R; ++y) {
        const float n = static_cast<float>(rng.normal(0.0, 0.01));
        img.r(y, x) = clamp01(0.05f + n);
        img.g(y, x) = clamp01(0.05f + n);
        img.b(y, x) = clamp01(0.06f + n);
        mask(y, x) = 0;
      }
    }
  }

  SynthDebug out;
  out.pre_augmentation = img;

  // augmentations: color imbalance, then dazzle, then blur
  if (plan.green) {
    const float gain = static_cast<float>(rng.uniform(1.3, 1.7));
    img.g = (img.g * gain).cwiseMin(1.0f);
  }
  if (plan.underexposed) {
    const float gamma = static_cast<float>(rng.uniform(1.8, 2.8));
    img.r = img.r.pow(gamma);
    img.g = img.g.pow(gamma);
    img.b = img.b.pow(gamma);
  }
  if (plan.dazzle) {
    const double cx = rng.uniform(0.15, 0.85) * R;
    const double cy = rng.uniform(0.05, 0.55) * R;
    const double rx = rng.uniform(0.12, 0.30) * R;
    const double ry = rng.uniform(0.12, 0.30) * R;
    const float amp = static_cast<float>(rng.uniform(0.45, 0.85));
    for (int y = 0; y < R; ++y)
      for (int x = 0; x < R; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        const float glow = amp * static_cast<float>(std::exp(-(dx * dx + dy * dy)));
        if (glow > 0.003f) {
          img.r(y, x) = clamp01(img.r(y, x) + glow);
          img.g(y, x) = clamp01(img.g(y, x) + glow);
          img.b(y, x) = clamp01(img.b(y, x) + glow);
        }
      }
  }
  if (plan.blurry) {
    const double sigma = rng.uniform(0.9, 2.2);
    gaussian_blur(img.r, sigma);
    gaussian_blur(img.g, sigma);
    gaussian_blur(img.b, sigma);
    // kernel weights only sum to 1 up to rounding
    img.r = img.r.cwiseMax(0.0f).cwiseMin(1.0f);
    img.g = img.g.cwiseMax(0.0f).cwiseMin(1.0f);
    img.b = img.b.cwiseMax(0.0f).cwiseMin(1.0f);
  }

  Sample sample;
  sample.image = std::move(img);
  sample.mask = std::move(mask);
  sample.camera = Camera::synthetic;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth_%08llu",
                static_cast<unsigned long long>(seed));
  sample.name = buf;
  if (plan.normal) {
    sample.tags = {ScenarioTag::normal};
  } else {
    if (plan.curved) sample.tags.insert(ScenarioTag::curved_road);
    if (plan.dazzle) sample.tags.insert(ScenarioTag::dazzle_light);
    if (plan.blurry) sample.tags.insert(ScenarioTag::blurry);
    if (plan.green) sample.tags.insert(ScenarioTag::color_imbalance_green);
    if (plan.underexposed)
      sample.tags.insert(ScenarioTag::color_imbalance_underexposed);
  }
  sample.require_valid();
  out.sample = std::move(sample);
  return out;
}

}  // namespace detail

Sample synth_scene(std::uint64_t seed, const SynthConfig& cfg) {
  return detail::synth_scene_debug(seed, cfg).sample;
}

std::vector<Sample> synth_corpus(int n, std::uint64_t seed,
                                 const SynthConfig& cfg) {
  if (n < 1) throw std::invalid_argument("synth_corpus: n must be >= 1");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back(synth_scene(seed + static_cast<std::uint64_t>(i), cfg));
  return out;
}

CorpusSplit split(std::vector<Sample> samples, double ratio,
                  std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw std::invalid_argument("split: ratio must lie in (0,1)");
  if (samples.empty()) throw std::invalid_argument("split: empty corpus");
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(samples.size()) + 1e-9));
  CorpusSplit out;
  out.seed = seed;
  out.ratio = ratio;
  out.train.reserve(n_train);
  out.test.reserve(samples.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    Sample& s = samples[order[i]];
    if (i < n_train)
      out.train.push_back(std::move(s));
    else
      out.test.push_back(std::move(s));
  }
  return out;
}

namespace {

std::map<std::string, std::set<ScenarioTag>> load_tags_csv(
    const std::filesystem::path& file) {
  std::map<std::string, std::set<ScenarioTag>> out;
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("tags.csv: malformed row: " + line);
    const std::string fname = line.substr(0, comma);
    std::set<ScenarioTag> tags;
    std::stringstream tag_stream(line.substr(comma + 1));
    std::string tag;
    while (std::getline(tag_stream, tag, ';'))
      if (!tag.empty()) tags.insert(scenario_tag_from_string(tag));
    out[fname] = std::move(tags);
  }
  return out;
}

Camera camera_from_name(const std::string& stem) {
  if (stem.rfind("front_left_", 0) == 0) return Camera::front_left;
  if (stem.rfind("front_right_", 0) == 0) return Camera::front_right;
  return Camera::synthetic;
}

}  // namespace

LoadReport load_corpus(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path images_dir = root / "images";
  const fs::path masks_dir = root / "masks";
  if (!fs::is_directory(images_dir))
    throw std::runtime_error("missing images directory: " + images_dir.string());
  if (!fs::is_directory(masks_dir))
    throw std::runtime_error("missing masks directory: " + masks_dir.string());

  std::map<std::string, fs::path> images, masks;
  for (const auto& e : fs::directory_iterator(images_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
      images[e.path().stem().string()] = e.path();
  }
  for (const auto& e : fs::directory_iterator(masks_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".png") masks[e.path().stem().string()] = e.path();
  }

  std::vector<std::string> missing;
  for (const auto& [stem, path] : images)
    if (!masks.count(stem)) missing.push_back(path.filename().string());
  if (!missing.empty()) {
    std::string msg = "images without masks:";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  std::map<std::string, std::set<ScenarioTag>> tag_table;
  if (fs::exists(root / "tags.csv")) tag_table = load_tags_csv(root / "tags.csv");

  LoadReport report;
  for (const auto& [stem, path] : masks)
    if (!images.count(stem))
      report.unmatched_masks.push_back(path.filename().string());

  for (const auto& [stem, path] : images) {
    Sample s;
    s.image = load_image(path);
    s.mask = load_mask_png(masks.at(stem));
    if (s.mask.rows() != s.image.height() || s.mask.cols() != s.image.width())
      throw std::runtime_error("dimension mismatch between image and mask: " +
                               path.filename().string());
    s.name = stem;
    s.camera = camera_from_name(stem);
    auto it = tag_table.find(path.filename().string());
    if (it == tag_table.end()) it = tag_table.find(stem);
    s.tags = it != tag_table.end() && !it->second.empty()
                 ? it->second
                 : std::set<ScenarioTag>{ScenarioTag::normal};
    s.require_valid();
    report.samples.push_back(std::move(s));
  }
  return report;
}

}  // namespace racegan
