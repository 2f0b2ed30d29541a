#include "racegan/morphology.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace racegan;

TEST_CASE("dilate basics") {
  const auto box3 = StructuringElement::box(3);

  const BinaryMask empty = BinaryMask::Zero(6, 6);
  CHECK((dilate(empty, box3) == 0).all());

  BinaryMask center = BinaryMask::Zero(5, 5);
  center(2, 2) = 1;
  const BinaryMask d = dilate(center, box3);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool in_block = y >= 1 && y <= 3 && x >= 1 && x <= 3;
      CHECK(d(y, x) == (in_block ? 1 : 0));
    }
}

TEST_CASE("erode basics") {
  const auto box3 = StructuringElement::box(3);

  const BinaryMask full = BinaryMask::Constant(6, 7, 1);
  const BinaryMask e = erode(full, box3);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 7; ++x) {
      const bool interior = y >= 1 && y <= 4 && x >= 1 && x <= 5;
      CHECK(e(y, x) == (interior ? 1 : 0));
    }

  BinaryMask single = BinaryMask::Zero(5, 5);
  single(2, 2) = 1;
  CHECK((erode(single, box3) == 0).all());

  const BinaryMask empty = BinaryMask::Zero(5, 5);
  CHECK((erode(empty, box3) == 0).all());
}

TEST_CASE("dilate and erode match the set definitions on random inputs") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const BinaryMask a = oracles::random_mask(rng, 16, 16, 0.4);
    const StructuringElement b = oracles::random_element(rng, 5);
    CHECK((dilate(a, b) == oracles::dilate_by_definition(a, b)).all());
    CHECK((erode(a, b) == oracles::erode_by_definition(a, b)).all());
  }
}

TEST_CASE("extensivity, anti-extensivity and closing idempotence") {
  Rng rng(32);
  const auto box3 = StructuringElement::box(3);
  for (int trial = 0; trial < 40; ++trial) {
    const BinaryMask a = oracles::random_mask(rng, 20, 20, 0.35);
    const BinaryMask d = dilate(a, box3);
    CHECK(((d >= a)).all());  // A subset of A+B (origin is foreground)
    const BinaryMask e = erode(a, box3);
    CHECK(((e <= a)).all());
    const BinaryMask closed = erode(dilate(a, box3), box3);
    const BinaryMask closed_twice = erode(dilate(closed, box3), box3);
    CHECK((closed == closed_twice).all());
  }
}

TEST_CASE("complement duality holds away from the border") {
  // With the definitions used here the dual pairs up with the same element:
  // complement(A (+) B) = complement(A) (-) B. Border pixels differ because
  // dilation ignores out-of-bounds cells while erosion treats them as
  // violations, so the check is restricted to the interior.
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const BinaryMask a = oracles::random_mask(rng, 14, 14, 0.5);
    const StructuringElement b = oracles::random_element(rng, 5);
    const BinaryMask lhs = complement(dilate(a, b));
    const BinaryMask rhs = erode(complement(a), b);
    const int r = b.radius();
    for (int y = r; y < 14 - r; ++y)
      for (int x = r; x < 14 - r; ++x) CHECK(lhs(y, x) == rhs(y, x));
  }
}

TEST_CASE("filter_components size rules") {
  PostprocessConfig cfg;
  cfg.min_component_size = 2;
  cfg.connectivity = 8;

  BinaryMask m = BinaryMask::Zero(128, 128);
  m(5, 5) = 1;  // isolated pixel
  m(40, 40) = m(40, 41) = 1;  // component of exactly min size
  const BinaryMask f = filter_components(m, cfg);
  CHECK(f(5, 5) == 0);
  CHECK(f(40, 40) == 1);
  CHECK(f(40, 41) == 1);
}

TEST_CASE("diagonal pair survives under 8-connectivity only") {
  PostprocessConfig cfg;
  cfg.min_component_size = 2;

  BinaryMask m = BinaryMask::Zero(128, 128);
  m(10, 10) = 1;
  m(11, 11) = 1;

  cfg.connectivity = 8;
  CHECK(foreground_count(filter_components(m, cfg)) == 2);
  cfg.connectivity = 4;
  CHECK(foreground_count(filter_components(m, cfg)) == 0);

  // agreement with a recursive flood-fill oracle under both rules
  for (int conn : {4, 8}) {
    std::vector<std::vector<bool>> seen(128, std::vector<bool>(128, false));
    int largest = 0;
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x)
        largest = std::max(largest, oracles::flood_size(m, y, x, seen, conn));
    CHECK(largest == (conn == 8 ? 2 : 1));
  }
}

TEST_CASE("filter_components never adds foreground") {
  Rng rng(34);
  PostprocessConfig cfg;
  cfg.min_component_size = 5;
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask m = oracles::random_mask(rng, 128, 128, 0.2);
    const BinaryMask f = filter_components(m, cfg);
    CHECK((f <= m).all());
  }
}

TEST_CASE("min_component_size scales with image area") {
  PostprocessConfig cfg;
  cfg.min_component_size = 64;
  CHECK(cfg.scaled_min_size(128, 128) == 64);
  CHECK(cfg.scaled_min_size(256, 256) == 256);
  CHECK(cfg.scaled_min_size(64, 64) == 16);
  CHECK(cfg.scaled_min_size(2, 2) == 1);  // floor of 1
}

TEST_CASE("binarize threshold semantics") {
  ProbMask<float> p = ProbMask<float>::Constant(3, 3, 0.4f);
  CHECK((binarize(p, 0.5) == 0).all());
  p.setConstant(0.5f);
  CHECK((binarize(p, 0.5) == 1).all());  // >= keeps the boundary

  // idempotence when the mask is reinterpreted as probabilities
  ProbMask<float> again(3, 3);
  const BinaryMask first = binarize(p, 0.5);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) again(y, x) = static_cast<float>(first(y, x));
  CHECK((binarize(again, 0.5) == first).all());

  CHECK_THROWS_AS(binarize(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(binarize(p, 1.0), std::invalid_argument);
}

TEST_CASE("postprocess equals its staged composition") {
  Rng rng(35);
  PostprocessConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    ProbMask<float> p(64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) p(y, x) = static_cast<float>(rng.uniform());
    const BinaryMask staged = erode(
        dilate(filter_components(binarize(p, cfg.binarize_threshold), cfg),
               cfg.element),
        cfg.element);
    CHECK((postprocess(p, cfg) == staged).all());
  }
}

TEST_CASE("postprocess bridges a one-pixel gap between blobs") {
  PostprocessConfig cfg;
  cfg.min_component_size = 4;
  ProbMask<float> p = ProbMask<float>::Zero(32, 32);
  // two 4x5 blobs separated by a single empty column
  for (int y = 10; y < 14; ++y) {
    for (int x = 5; x < 10; ++x) p(y, x) = 1.0f;
    for (int x = 11; x < 16; ++x) p(y, x) = 1.0f;
  }
  const BinaryMask out = postprocess(p, cfg);
  for (int y = 11; y < 13; ++y) CHECK(out(y, 10) == 1);
}

TEST_CASE("postprocess keeps a clean blob interior intact") {
  PostprocessConfig cfg;
  ProbMask<float> p = ProbMask<float>::Zero(128, 128);
  for (int y = 40; y < 90; ++y)
    for (int x = 30; x < 100; ++x) p(y, x) = 0.95f;
  const BinaryMask out = postprocess(p, cfg);
  for (int y = 41; y < 89; ++y)
    for (int x = 31; x < 99; ++x) CHECK(out(y, x) == 1);

  const ProbMask<float> zeros = ProbMask<float>::Zero(16, 16);
  CHECK((postprocess(zeros, cfg) == 0).all());
}

TEST_CASE("structuring element text form round-trips") {
  const StructuringElement cross = parse_element("010/111/010");
  CHECK(cross.size() == 3);
  CHECK(cross.cells(0, 0) == 0);
  CHECK(cross.cells(0, 1) == 1);
  CHECK(serialize_element(cross) == "010/111/010");
  CHECK(serialize_element(parse_element(serialize_element(
            StructuringElement::box(5)))) ==
        serialize_element(StructuringElement::box(5)));
  CHECK_THROWS(parse_element("01/10"));   // even side
  CHECK_THROWS(parse_element("010/11"));  // ragged
  CHECK_THROWS(parse_element("0x0/111/010"));
}

TEST_CASE("structuring element validation") {
  StructuringElement e;
  e.cells.setZero(3, 3);
  CHECK_THROWS_AS(e.require_valid(), std::invalid_argument);  // no foreground
  e.cells.setOnes(2, 2);
  CHECK_THROWS_AS(e.require_valid(), std::invalid_argument);  // even side
  e.cells.setOnes(3, 4);
  CHECK_THROWS_AS(e.require_valid(), std::invalid_argument);  // not square
  CHECK_NOTHROW(StructuringElement::box(5).require_valid());

  const auto asym = [] {
    StructuringElement s;
    s.cells.setZero(3, 3);
    s.cells(0, 1) = 1;
    s.cells(1, 1) = 1;
    return s;
  }();
  const StructuringElement r = reflect(asym);
  CHECK(r.cells(2, 1) == 1);
  CHECK(r.cells(1, 1) == 1);
  CHECK(r.cells(0, 1) == 0);
}
