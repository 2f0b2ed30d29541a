#include "racegan/checkpoint.hpp"
#include "racegan/config.hpp"
#include "racegan/dataset.hpp"
#include "racegan/image_io.hpp"
#include "racegan/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

using namespace racegan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("racegan_io_" + std::to_string(std::rand()) +
            std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// 8x8 JPEG, left half red-ish, right half green-ish
const unsigned char kTinyJpeg[] = {
    255, 216, 255, 224, 0, 16, 74, 70, 73, 70, 0, 1, 1, 0, 0, 1, 0, 1, 0, 0,
    255, 219, 0, 67, 0, 2, 1, 1, 1, 1, 1, 2, 1, 1, 1, 2, 2, 2, 2, 2, 4, 3,
    2, 2, 2, 2, 5, 4, 4, 3, 4, 6, 5, 6, 6, 6, 5, 6, 6, 6, 7, 9, 8, 6, 7, 9,
    7, 6, 6, 8, 11, 8, 9, 10, 10, 10, 10, 10, 6, 8, 11, 12, 11, 10, 12, 9,
    10, 10, 10, 255, 219, 0, 67, 1, 2, 2, 2, 2, 2, 2, 5, 3, 3, 5, 10, 7, 6,
    7, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10,
    10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10,
    10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 10, 255, 192, 0,
    17, 8, 0, 8, 0, 8, 3, 1, 34, 0, 2, 17, 1, 3, 17, 1, 255, 196, 0, 31, 0,
    0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7,
    8, 9, 10, 11, 255, 196, 0, 181, 16, 0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4,
    0, 0, 1, 125, 1, 2, 3, 0, 4, 17, 5, 18, 33, 49, 65, 6, 19, 81, 97, 7,
    34, 113, 20, 50, 129, 145, 161, 8, 35, 66, 177, 193, 21, 82, 209, 240,
    36, 51, 98, 114, 130, 9, 10, 22, 23, 24, 25, 26, 37, 38, 39, 40, 41, 42,
    52, 53, 54, 55, 56, 57, 58, 67, 68, 69, 70, 71, 72, 73, 74, 83, 84, 85,
    86, 87, 88, 89, 90, 99, 100, 101, 102, 103, 104, 105, 106, 115, 116,
    117, 118, 119, 120, 121, 122, 131, 132, 133, 134, 135, 136, 137, 138,
    146, 147, 148, 149, 150, 151, 152, 153, 154, 162, 163, 164, 165, 166,
    167, 168, 169, 170, 178, 179, 180, 181, 182, 183, 184, 185, 186, 194,
    195, 196, 197, 198, 199, 200, 201, 202, 210, 211, 212, 213, 214, 215,
    216, 217, 218, 225, 226, 227, 228, 229, 230, 231, 232, 233, 234, 241,
    242, 243, 244, 245, 246, 247, 248, 249, 250, 255, 196, 0, 31, 1, 0, 3,
    1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9,
    10, 11, 255, 196, 0, 181, 17, 0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1,
    2, 119, 0, 1, 2, 3, 17, 4, 5, 33, 49, 6, 18, 65, 81, 7, 97, 113, 19, 34,
    50, 129, 8, 20, 66, 145, 161, 177, 193, 9, 35, 51, 82, 240, 21, 98, 114,
    209, 10, 22, 36, 52, 225, 37, 241, 23, 24, 25, 26, 38, 39, 40, 41, 42,
    53, 54, 55, 56, 57, 58, 67, 68, 69, 70, 71, 72, 73, 74, 83, 84, 85, 86,
    87, 88, 89, 90, 99, 100, 101, 102, 103, 104, 105, 106, 115, 116, 117,
    118, 119, 120, 121, 122, 130, 131, 132, 133, 134, 135, 136, 137, 138,
    146, 147, 148, 149, 150, 151, 152, 153, 154, 162, 163, 164, 165, 166,
    167, 168, 169, 170, 178, 179, 180, 181, 182, 183, 184, 185, 186, 194,
    195, 196, 197, 198, 199, 200, 201, 202, 210, 211, 212, 213, 214, 215,
    216, 217, 218, 226, 227, 228, 229, 230, 231, 232, 233, 234, 242, 243,
    244, 245, 246, 247, 248, 249, 250, 255, 218, 0, 12, 3, 1, 0, 2, 17, 3,
    17, 0, 63, 0, 242, 95, 217, 55, 254, 99, 255, 0, 246, 235, 255, 0, 181,
    168, 162, 138, 254, 58, 226, 63, 249, 28, 213, 255, 0, 183, 127, 244,
    148, 127, 63, 253, 50, 63, 229, 36, 51, 207, 251, 150, 255, 0, 212, 60,
    57, 255, 217};

}  // namespace

TEST_CASE("PNG image round-trip is lossless for byte images") {
  TempDir tmp;
  Rng rng(71);
  RasterImage<float> img;
  img.mode = PixelMode::bytes;
  img.r.resize(9, 13);
  img.g.resize(9, 13);
  img.b.resize(9, 13);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 13; ++x) {
      img.r(y, x) = static_cast<float>(rng.uniform_int(0, 255));
      img.g(y, x) = static_cast<float>(rng.uniform_int(0, 255));
      img.b(y, x) = static_cast<float>(rng.uniform_int(0, 255));
    }
  const fs::path file = tmp.path / "img.png";
  save_png(file, img);
  const RasterImage<float> back = load_image(file);
  CHECK(back.mode == PixelMode::bytes);
  CHECK((back.r == img.r).all());
  CHECK((back.g == img.g).all());
  CHECK((back.b == img.b).all());
}

TEST_CASE("mask PNG round-trip and 128 threshold") {
  TempDir tmp;
  Rng rng(72);
  BinaryMask m(6, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) m(y, x) = rng.bernoulli(0.5) ? 1 : 0;
  const fs::path file = tmp.path / "mask.png";
  save_mask_png(file, m);
  CHECK((load_mask_png(file) == m).all());

  // gray ramp: values at or above 128 load as foreground
  Planef ramp(1, 256);
  for (int x = 0; x < 256; ++x) ramp(0, x) = static_cast<float>(x) / 255.0f;
  save_gray_png(tmp.path / "ramp.png", ramp);
  const BinaryMask thr = load_mask_png(tmp.path / "ramp.png");
  for (int x = 0; x < 256; ++x) CHECK(thr(0, x) == (x >= 128 ? 1 : 0));
}

TEST_CASE("gray PNG round-trip within quantization") {
  TempDir tmp;
  Planef p(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) p(y, x) = (y * 4 + x) / 15.0f;
  save_gray_png(tmp.path / "g.png", p);
  const Planef back = load_gray_png(tmp.path / "g.png");
  CHECK(((back - p).abs() <= 0.5f / 255.0f + 1e-6f).all());
}

TEST_CASE("JPEG decodes with sane colors") {
  TempDir tmp;
  const fs::path file = tmp.path / "fix.jpg";
  std::ofstream(file, std::ios::binary)
      .write(reinterpret_cast<const char*>(kTinyJpeg), sizeof(kTinyJpeg));
  const RasterImage<float> img = load_image(file);
  CHECK(img.height() == 8);
  CHECK(img.width() == 8);
  CHECK(img.mode == PixelMode::bytes);
  // lossy codec: just require the halves to keep their dominant channel
  CHECK(img.r(4, 1) > 120);
  CHECK(img.g(4, 1) < 120);
  CHECK(img.g(4, 6) > 120);
  CHECK(img.r(4, 6) < 120);
}

TEST_CASE("config parse, defaults, merge and hash") {
  const Config cfg = Config::parse(
      "# comment\n"
      "train.lambda = 50\n"
      "post.connectivity=4\n"
      "  paths.data =  /tmp/x  \n");
  CHECK(cfg.get_double("train.lambda", 100.0) == doctest::Approx(50.0));
  CHECK(cfg.get_int("post.connectivity", 8) == 4);
  CHECK(cfg.get_str("paths.data", "") == "/tmp/x");
  CHECK(cfg.get_int("absent", 7) == 7);
  CHECK_THROWS(Config::parse("not a key value line\n"));

  Config base = Config::parse("a = 1\nb = 2\n");
  base.merge(Config::parse("b = 3\nc = 4\n"));
  CHECK(base.get_int("b", 0) == 3);
  CHECK(base.get_int("c", 0) == 4);

  const Config c1 = Config::parse("x = 1\ny = 2\n");
  const Config c2 = Config::parse("y = 2\nx = 1\n");
  CHECK(c1.hash() == c2.hash());  // canonical ordering
  const Config c3 = Config::parse("x = 1\ny = 3\n");
  CHECK(c1.hash() != c3.hash());
}

TEST_CASE("checkpoint round-trips parameters bit-exactly") {
  TempDir tmp;
  net::NetworkSpec spec = net::default_network_spec();
  net::Model<float> model(spec, 99);
  model.generator.params().running.setRandom();
  const fs::path file = tmp.path / "ck.rgck";
  Checkpoint::from_model(model, 0xabcdef).save(file);
  const Checkpoint back = Checkpoint::load(file);
  CHECK(back.config_hash == 0xabcdef);
  CHECK(back.generator_flat == model.generator.params().flat);
  CHECK(back.generator_running == model.generator.params().running);
  CHECK(back.discriminator_flat == model.discriminator.params().flat);

  net::Model<float> restored = back.to_model();
  CHECK(restored.generator.params().flat == model.generator.params().flat);

  // corrupt magic
  std::ofstream(tmp.path / "bad.rgck", std::ios::binary) << "nope";
  CHECK_THROWS(Checkpoint::load(tmp.path / "bad.rgck"));
}

TEST_CASE("load_corpus on empty directories yields an empty corpus") {
  TempDir tmp;
  fs::create_directories(tmp.path / "images");
  fs::create_directories(tmp.path / "masks");
  const LoadReport r = load_corpus(tmp.path);
  CHECK(r.samples.empty());
  CHECK(r.unmatched_masks.empty());
}

TEST_CASE("load_corpus pairs, cameras, tags and errors") {
  TempDir tmp;
  fs::create_directories(tmp.path / "images");
  fs::create_directories(tmp.path / "masks");

  const auto img = RasterImage<float>::constant(8, 8, 10, 20, 30,
                                                PixelMode::bytes);
  BinaryMask mask = BinaryMask::Zero(8, 8);
  mask(4, 4) = 1;

  save_png(tmp.path / "images" / "front_left_0001.png", img);
  save_mask_png(tmp.path / "masks" / "front_left_0001.png", mask);
  save_png(tmp.path / "images" / "front_right_0002.png", img);
  save_mask_png(tmp.path / "masks" / "front_right_0002.png", mask);
  save_png(tmp.path / "images" / "extra_0003.png", img);
  save_mask_png(tmp.path / "masks" / "extra_0003.png", mask);
  save_mask_png(tmp.path / "masks" / "orphan.png", mask);  // reported, not fatal

  std::ofstream(tmp.path / "tags.csv")
      << "front_left_0001.png,blurry;dazzle_light\n";

  const LoadReport r = load_corpus(tmp.path);
  REQUIRE(r.samples.size() == 3);
  REQUIRE(r.unmatched_masks.size() == 1);
  CHECK(r.unmatched_masks[0] == "orphan.png");

  for (const Sample& s : r.samples) {
    if (s.name == "front_left_0001") {
      CHECK(s.camera == Camera::front_left);
      CHECK(s.tags == std::set<ScenarioTag>{ScenarioTag::blurry,
                                            ScenarioTag::dazzle_light});
    } else if (s.name == "front_right_0002") {
      CHECK(s.camera == Camera::front_right);
      CHECK(s.tags == std::set<ScenarioTag>{ScenarioTag::normal});
    } else {
      CHECK(s.camera == Camera::synthetic);
    }
    CHECK((s.mask == mask).all());
  }
}

TEST_CASE("load_corpus hard-errors name the offending files") {
  TempDir tmp;
  fs::create_directories(tmp.path / "images");
  fs::create_directories(tmp.path / "masks");
  const auto img = RasterImage<float>::constant(8, 8, 1, 2, 3, PixelMode::bytes);
  save_png(tmp.path / "images" / "lonely.png", img);
  try {
    load_corpus(tmp.path);
    FAIL("expected an error for the maskless image");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("lonely.png") != std::string::npos);
  }

  // dimension mismatch is also fatal
  save_mask_png(tmp.path / "masks" / "lonely.png", BinaryMask::Zero(4, 4));
  CHECK_THROWS(load_corpus(tmp.path));

  CHECK_THROWS(load_corpus(tmp.path / "missing_root"));
}

TEST_CASE("network spec files survive a disk round-trip") {
  TempDir tmp;
  const net::NetworkSpec spec = net::default_network_spec();
  const fs::path file = tmp.path / "net.spec";
  std::ofstream(file) << net::serialize(spec);
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  const net::NetworkSpec back = net::parse_network_spec(ss.str());
  CHECK(net::serialize(back) == net::serialize(spec));
}
