#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "s3fd/anchors.hpp"
#include "s3fd/errors.hpp"

using namespace s3fd;

TEST_CASE("one-cell grid") {
  const AnchorGrid grid = tile_anchors(4, 4, AnchorConfig{{{"l", 4, 16}}});
  REQUIRE(grid.anchors.size() == 1);
  CHECK(grid.anchors[0].box == Box{-6, -6, 10, 10});
  CHECK(grid.anchors[0].box.center_x() == 2.0);
}

TEST_CASE("640x640 builtin counts") {
  const AnchorGrid grid = tile_anchors(640, 640, builtin_anchor_config());
  CHECK(grid.anchors.size() == 34125);
  REQUIRE(grid.layers.size() == 6);
  CHECK(grid.layers[0].count() == 25600);
  CHECK(grid.layers[5].count() == 25);
  for (const auto& span : grid.layers) {
    for (std::size_t i = span.offset; i < span.offset + span.count(); ++i) {
      REQUIRE(grid.anchors[i].box.width() == span.scale);
      REQUIRE(grid.anchors[i].box.height() == span.scale);
    }
  }
}

TEST_CASE("ceil division covers partial cells") {
  const AnchorGrid grid = tile_anchors(641, 640, builtin_anchor_config());
  const std::vector<std::size_t> expected{161 * 160, 81 * 80, 41 * 40,
                                          21 * 20,  11 * 10, 6 * 5};
  for (std::size_t i = 0; i < 6; ++i) CHECK(grid.layers[i].count() == expected[i]);
}

TEST_CASE("census of the builtin design at 640x640") {
  const auto rows = anchor_census(640, 640, builtin_anchor_config());
  REQUIRE(rows.size() == 6);
  const std::vector<std::size_t> counts{25600, 6400, 1600, 400, 100, 25};
  const std::vector<long> shares{7502, 1876, 469, 117, 29, 7};
  long sum = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(rows[i].count == counts[i]);
    CHECK(rows[i].percent_hundredths == shares[i]);
    sum += rows[i].percent_hundredths;
  }
  CHECK(sum == 10000);
  CHECK(rows[0].percentage() == doctest::Approx(75.02));
}

TEST_CASE("census shares always sum to 100.00 and stay within a hundredth") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 16 + int(rng() % 2000);
    const int h = 16 + int(rng() % 2000);
    const auto rows = anchor_census(w, h, builtin_anchor_config());
    std::size_t total = 0;
    for (const auto& r : rows) total += r.count;
    long sum = 0;
    for (const auto& r : rows) {
      const double exact = 10000.0 * double(r.count) / double(total);
      REQUIRE(double(r.percent_hundredths) >= exact - 1.0);
      REQUIRE(double(r.percent_hundredths) <= exact + 1.0);
      sum += r.percent_hundredths;
    }
    REQUIRE(sum == 10000);
  }
}

TEST_CASE("single layer census is 100.00") {
  const auto rows = anchor_census(100, 37, AnchorConfig{{{"only", 8, 32}}});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].percent_hundredths == 10000);
}

TEST_CASE("equal proportion check") {
  for (const auto& c : check_equal_proportion(builtin_anchor_config())) CHECK(c.holds);
  CHECK_FALSE(check_equal_proportion(AnchorConfig{{{"x", 8, 16}}})[0].holds);
  CHECK(check_equal_proportion(AnchorConfig{{{"y", 128, 512}}})[0].holds);
}

TEST_CASE("anchor density is uniform across equal-proportion layers") {
  for (int w : {640, 1280, 1024}) {
    for (int h : {640, 384, 896}) {
      const AnchorGrid grid = tile_anchors(w, h, builtin_anchor_config());
      for (const auto& span : grid.layers) {
        CHECK(span.count() * std::size_t(span.stride) * std::size_t(span.stride) ==
              std::size_t(w) * std::size_t(h));
      }
    }
  }
}

TEST_CASE("doubling the width doubles each layer") {
  const AnchorGrid a = tile_anchors(640, 512, builtin_anchor_config());
  const AnchorGrid b = tile_anchors(1280, 512, builtin_anchor_config());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    CHECK(b.layers[i].count() == 2 * a.layers[i].count());
  }
}

TEST_CASE("every pixel is covered by every layer") {
  const AnchorGrid grid = tile_anchors(100, 70, builtin_anchor_config());
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> x(0, 100), y(0, 70);
  for (int i = 0; i < 300; ++i) {
    const double px = x(rng), py = y(rng);
    for (std::size_t l = 0; l < grid.layers.size(); ++l) {
      bool covered = false;
      for (const Anchor& a : grid.anchors) {
        if (std::size_t(a.layer) == l && a.box.x1 <= px && px <= a.box.x2 &&
            a.box.y1 <= py && py <= a.box.y2) {
          covered = true;
          break;
        }
      }
      REQUIRE(covered);
    }
  }
}

TEST_CASE("invalid configurations") {
  CHECK_THROWS_AS(tile_anchors(640, 640, AnchorConfig{}), InputError);
  CHECK_THROWS_AS(tile_anchors(640, 640, AnchorConfig{{{"a", 8, 32}, {"b", 8, 32}}}),
                  InputError);
  CHECK_THROWS_AS(tile_anchors(2, 640, builtin_anchor_config()), InputError);
  CHECK_THROWS_AS(anchor_config_from_json(nlohmann::json::parse(R"([{"layer": "a"}])")),
                  InputError);
}

TEST_CASE("anchor config json roundtrip") {
  const AnchorConfig config = builtin_anchor_config();
  const AnchorConfig back = anchor_config_from_json(to_json(config));
  REQUIRE(back.layers.size() == config.layers.size());
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    CHECK(back.layers[i].layer == config.layers[i].layer);
    CHECK(back.layers[i].stride == config.layers[i].stride);
    CHECK(back.layers[i].scale == config.layers[i].scale);
  }
}
