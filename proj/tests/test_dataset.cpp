#include "racegan/dataset.hpp"
#include "racegan/proposer.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace racegan;

namespace {

Sample tiny_sample(int id) {
  Sample s;
  s.image = RasterImage<float>::constant(4, 4, 0.5f, 0.5f, 0.5f);
  s.mask = BinaryMask::Zero(4, 4);
  s.tags = {ScenarioTag::normal};
  s.name = "s" + std::to_string(id);
  return s;
}

std::vector<Sample> tiny_corpus(int n) {
  std::vector<Sample> v;
  v.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v.push_back(tiny_sample(i));
  return v;
}

}  // namespace

TEST_CASE("split produces the reference 1398 -> 1118/280 partition") {
  const CorpusSplit s = split(tiny_corpus(1398), 0.8, 3);
  CHECK(s.train.size() == 1118);
  CHECK(s.test.size() == 280);
}

TEST_CASE("split halves ten samples for any seed") {
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const CorpusSplit s = split(tiny_corpus(10), 0.5, seed);
    CHECK(s.train.size() == 5);
    CHECK(s.test.size() == 5);
    std::set<std::string> names;
    for (const Sample& x : s.train) names.insert(x.name);
    for (const Sample& x : s.test) names.insert(x.name);
    CHECK(names.size() == 10);  // disjoint and exhaustive
  }
}

TEST_CASE("split is deterministic in (ratio, seed)") {
  for (std::uint64_t seed : {7ull, 8ull}) {
    const CorpusSplit a = split(tiny_corpus(37), 0.73, seed);
    const CorpusSplit b = split(tiny_corpus(37), 0.73, seed);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i)
      CHECK(a.train[i].name == b.train[i].name);
    for (std::size_t i = 0; i < a.test.size(); ++i)
      CHECK(a.test[i].name == b.test[i].name);
  }
}

TEST_CASE("split rejects bad arguments") {
  CHECK_THROWS_AS(split({}, 0.8, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(tiny_corpus(4), 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(tiny_corpus(4), 1.0, 1), std::invalid_argument);
}

TEST_CASE("synth_scene is deterministic per seed") {
  const SynthConfig cfg;
  const Sample a = synth_scene(1234, cfg);
  const Sample b = synth_scene(1234, cfg);
  CHECK((a.image.r == b.image.r).all());
  CHECK((a.image.g == b.image.g).all());
  CHECK((a.image.b == b.image.b).all());
  CHECK((a.mask == b.mask).all());
  CHECK(a.tags == b.tags);

  const Sample c = synth_scene(1235, cfg);
  CHECK_FALSE((a.image.r == c.image.r).all());
}

TEST_CASE("all augmentation probabilities zero yields normal samples") {
  SynthConfig cfg;
  cfg.p_curved = cfg.p_dazzle = cfg.p_blurry = cfg.p_green = cfg.p_underexposed = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Sample s = synth_scene(seed, cfg);
    CHECK(s.tags == std::set<ScenarioTag>{ScenarioTag::normal});
  }
}

TEST_CASE("normal never co-occurs with another tag") {
  const SynthConfig cfg;
  for (std::uint64_t seed = 100; seed < 400; ++seed) {
    const Sample s = synth_scene(seed, cfg);
    CHECK_FALSE(s.tags.empty());
    if (s.tags.count(ScenarioTag::normal)) CHECK(s.tags.size() == 1);
  }
}

TEST_CASE("road is darker than background before exposure augmentations") {
  const SynthConfig cfg;
  for (std::uint64_t seed = 500; seed < 530; ++seed) {
    const auto dbg = detail::synth_scene_debug(seed, cfg);
    const GrayImage<float> g = to_grayscale(dbg.pre_augmentation);
    double in_sum = 0, out_sum = 0;
    long long in_n = 0, out_n = 0;
    for (int y = 0; y < g.rows(); ++y)
      for (int x = 0; x < g.cols(); ++x) {
        if (dbg.sample.mask(y, x)) {
          in_sum += g(y, x);
          ++in_n;
        } else {
          out_sum += g(y, x);
          ++out_n;
        }
      }
    REQUIRE(in_n > 0);
    REQUIRE(out_n > 0);
    CHECK(in_sum / in_n < out_sum / out_n);
  }
}

TEST_CASE("corpus-scale synthetic statistics (frozen regression bounds)") {
  const SynthConfig cfg;
  const int n = 1398;
  std::map<ScenarioTag, int> tag_counts;
  int normal_count = 0, color_union = 0;
  int fraction_checked = 0;

  for (int i = 0; i < n; ++i) {
    const Sample s = synth_scene(static_cast<std::uint64_t>(9000 + i), cfg);
    for (ScenarioTag t : s.tags) ++tag_counts[t];
    if (s.tags.count(ScenarioTag::normal)) ++normal_count;
    if (s.tags.count(ScenarioTag::color_imbalance_green) ||
        s.tags.count(ScenarioTag::color_imbalance_underexposed))
      ++color_union;

    if (fraction_checked < 1000) {
      const double frac =
          static_cast<double>(foreground_count(s.mask)) /
          static_cast<double>(s.mask.rows() * s.mask.cols());
      CHECK(frac >= 0.10);
      CHECK(frac <= 0.55);
      ++fraction_checked;
    }
  }

  const auto pct = [&](ScenarioTag t) {
    return 100.0 * tag_counts[t] / static_cast<double>(n);
  };
  const double color_pct = 100.0 * color_union / static_cast<double>(n);

  // reference composition: dazzle 53.3, blurry 39.8, curved 27.0,
  // color imbalance 25.0, normal 10.4 (all +/- 5 points)
  CHECK(pct(ScenarioTag::dazzle_light) == doctest::Approx(53.3).epsilon(0.094));
  CHECK(pct(ScenarioTag::blurry) == doctest::Approx(39.8).epsilon(0.126));
  CHECK(pct(ScenarioTag::curved_road) == doctest::Approx(27.0).epsilon(0.185));
  CHECK(color_pct == doctest::Approx(25.0).epsilon(0.2));
  CHECK(100.0 * normal_count / n == doctest::Approx(10.4).epsilon(0.48));
}

TEST_CASE("synth_corpus basics") {
  const SynthConfig cfg;
  const auto one = synth_corpus(1, 77, cfg);
  REQUIRE(one.size() == 1);
  const Sample direct = synth_scene(77, cfg);
  CHECK((one[0].mask == direct.mask).all());

  CHECK_THROWS_AS(synth_corpus(0, 1, cfg), std::invalid_argument);

  const auto many = synth_corpus(16, 200, cfg);
  CHECK(many.size() == 16);
  std::set<std::string> names;
  for (const Sample& s : many) names.insert(s.name);
  CHECK(names.size() == 16);
}

TEST_CASE("Sample validation") {
  Sample s = tiny_sample(0);
  CHECK_NOTHROW(s.require_valid());
  s.tags = {ScenarioTag::normal, ScenarioTag::blurry};
  CHECK_THROWS_AS(s.require_valid(), std::invalid_argument);
  s.tags = {};
  CHECK_THROWS_AS(s.require_valid(), std::invalid_argument);
  s.tags = {ScenarioTag::blurry};
  s.mask = BinaryMask::Zero(3, 4);
  CHECK_THROWS_AS(s.require_valid(), std::invalid_argument);
}

TEST_CASE("scenario tag names round-trip") {
  for (ScenarioTag t :
       {ScenarioTag::normal, ScenarioTag::curved_road,
        ScenarioTag::color_imbalance_green,
        ScenarioTag::color_imbalance_underexposed, ScenarioTag::blurry,
        ScenarioTag::dazzle_light})
    CHECK(scenario_tag_from_string(to_string(t)) == t);
  CHECK_THROWS(scenario_tag_from_string("fog"));
}
