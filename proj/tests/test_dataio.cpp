#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "s3fd/dataio.hpp"
#include "s3fd/errors.hpp"

using namespace s3fd;

namespace {

std::vector<ImageRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::vector<ImageRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    ImageRecord r;
    r.path = "0--Parade/img_" + std::to_string(i) + ".jpg";
    const std::size_t faces = rng() % 6;
    for (std::size_t f = 0; f < faces; ++f) {
      FaceAnnotation a;
      a.box = Box::from_xywh(double(rng() % 1000), double(rng() % 800),
                             double(1 + rng() % 300), double(1 + rng() % 300));
      a.blur = int(rng() % 3);
      a.expression = int(rng() % 2);
      a.illumination = int(rng() % 2);
      a.invalid = int(rng() % 2);
      a.occlusion = int(rng() % 3);
      a.pose = int(rng() % 2);
      r.faces.push_back(a);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

TEST_CASE("parse one face") {
  const auto records = parse_wider_annotations("a.jpg\n1\n10 20 30 40 0 0 0 0 0 0\n");
  REQUIRE(records.size() == 1);
  CHECK(records[0].path == "a.jpg");
  REQUIRE(records[0].faces.size() == 1);
  CHECK(records[0].faces[0].box == Box{10, 20, 40, 60});
  CHECK(records[0].faces[0].invalid == 0);
}

TEST_CASE("zero count with the all-zero placeholder line") {
  const auto records = parse_wider_annotations(
      "a.jpg\n0\n0 0 0 0 0 0 0 0 0 0\nb.jpg\n1\n1 2 3 4 2 0 1 0 2 1\n");
  REQUIRE(records.size() == 2);
  CHECK(records[0].faces.empty());
  CHECK(records[1].faces[0].blur == 2);
  CHECK(records[1].faces[0].pose == 1);

  const auto bare = parse_wider_annotations("a.jpg\n0\nb.jpg\n0\n");
  CHECK(bare.size() == 2);
}

TEST_CASE("CRLF and trailing spaces are tolerated") {
  const auto records = parse_wider_annotations("a.jpg\r\n1\r\n1 2 3 4 0 0 0 0 0 0 \r\n");
  REQUIRE(records.size() == 1);
  CHECK(records[0].faces[0].box == Box{1, 2, 4, 6});
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_wider_annotations("a.jpg\nabc\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_wider_annotations("a.jpg\n2\n1 2 3 4 0 0 0 0 0 0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  try {
    parse_wider_annotations("a.jpg\n1\n1 2 3 0 0 0 0 0 0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_wider_annotations("a.jpg\n1\n1 2 -3 4 0 0 0 0 0 0\n"), ParseError);
}

TEST_CASE("annotation roundtrip") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto records = random_records(rng, 30);
    CHECK(parse_wider_annotations(serialize_wider_annotations(records)) == records);
  }
}

TEST_CASE("real WIDER training annotations parse when available") {
  const char* path = std::getenv("WIDER_TRAIN_ANNOTATIONS");
  if (path == nullptr || !std::filesystem::exists(path)) {
    MESSAGE("WIDER_TRAIN_ANNOTATIONS not set; skipping");
    return;
  }
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(parse_wider_annotations(ss.str()).size() == 12880);
}

TEST_CASE("detections parse and roundtrip") {
  const auto dets = read_detections("f.jpg\n1\n0 0 10 10 0.9\n");
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].detections[0] == ScoredBox{{0, 0, 10, 10}, 0.9});

  CHECK_THROWS_AS(read_detections("f.jpg\n1\n0 0 10 10 -0.1\n"), ParseError);
  CHECK_THROWS_AS(read_detections("f.jpg\n1\n0 0 10 10\n"), ParseError);
  CHECK_THROWS_AS(read_detections("f.jpg\n2\n0 0 10 10 0.5\n"), ParseError);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> score(0, 1);
  std::vector<ImageDetections> images;
  for (int i = 0; i < 10; ++i) {
    ImageDetections image{"img" + std::to_string(i) + ".jpg", {}};
    for (int d = 0; d < 100; ++d) {
      // sixteenth-pixel grid keeps x + w exact in binary
      const double x = double(rng() % 16000) / 16.0;
      const double y = double(rng() % 16000) / 16.0;
      const double w = double(1 + rng() % 4000) / 16.0;
      const double h = double(1 + rng() % 4000) / 16.0;
      image.detections.push_back({Box::from_xywh(x, y, w, h), score(rng)});
    }
    images.push_back(std::move(image));
  }
  CHECK(read_detections(write_detections(images)) == images);
}

TEST_CASE("crop sampling on a square image") {
  bool saw_biggest = false;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const CropSpec c = sample_crop(500, 500, seed);
    if (c.candidate == 0) {
      saw_biggest = true;
      CHECK(c.side == 500);
      CHECK(c.x == 0);
      CHECK(c.y == 0);
    }
  }
  CHECK(saw_biggest);
}

TEST_CASE("crop sampling stays in range and is seed-determined") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 5000; ++trial) {
    const int w = 1 + int(rng() % 2000);
    const int h = 1 + int(rng() % 2000);
    const std::uint64_t seed = rng();
    const CropSpec c = sample_crop(w, h, seed);
    const int short_side = std::min(w, h);
    REQUIRE(10 * c.side >= 3 * short_side);
    REQUIRE(c.side <= short_side);
    REQUIRE(c.x >= 0);
    REQUIRE(c.y >= 0);
    REQUIRE(c.x + c.side <= w);
    REQUIRE(c.y + c.side <= h);
    const CropSpec again = sample_crop(w, h, seed);
    REQUIRE(again.x == c.x);
    REQUIRE(again.side == c.side);
    REQUIRE(again.flipped == c.flipped);
  }
}

TEST_CASE("crop keeps faces by their centre") {
  CropSpec crop;
  crop.x = 100;
  crop.y = 100;
  crop.side = 640;
  crop.target_side = 640;

  FaceAnnotation inside;
  inside.box = {200, 150, 260, 230};
  auto out = apply_crop_to_boxes(crop, {inside});
  REQUIRE(out.size() == 1);
  CHECK(out[0].box == Box{100, 50, 160, 130});

  FaceAnnotation straddling;
  straddling.box = {80, 200, 198, 300};  // centre x = 139, partly outside
  out = apply_crop_to_boxes(crop, {straddling});
  REQUIRE(out.size() == 1);
  CHECK(out[0].box == Box{0, 100, 98, 200});

  // centre 1px left of the crop while most of the box is inside
  FaceAnnotation mostly_in;
  mostly_in.box = {79, 200, 119, 240};
  CHECK(apply_crop_to_boxes(crop, {mostly_in}).empty());
}

TEST_CASE("crop scales to the target and mirrors") {
  CropSpec crop;
  crop.x = 0;
  crop.y = 0;
  crop.side = 320;
  crop.target_side = 640;
  FaceAnnotation face;
  face.box = {10, 20, 30, 60};
  face.occlusion = 2;
  auto out = apply_crop_to_boxes(crop, {face});
  REQUIRE(out.size() == 1);
  CHECK(out[0].box == Box{20, 40, 60, 120});
  CHECK(out[0].occlusion == 2);

  crop.flipped = true;
  out = apply_crop_to_boxes(crop, {face});
  CHECK(out[0].box == Box{580, 40, 620, 120});
  CHECK(mirror_box(mirror_box(face.box, 640), 640) == face.box);
}

TEST_CASE("crop-then-flip equals flip-then-crop on the mirrored crop") {
  std::mt19937_64 rng(44);
  const int width = 1000;
  const int height = 700;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<FaceAnnotation> faces;
    for (int f = 0; f < 8; ++f) {
      FaceAnnotation a;
      a.box = Box::from_xywh(double(rng() % 1000), double(rng() % 700),
                             double(2 + rng() % 200), double(2 + rng() % 200));
      faces.push_back(a);
    }
    CropSpec crop = sample_crop(width, height, rng());
    crop.flipped = true;
    const auto direct = apply_crop_to_boxes(crop, faces);

    std::vector<FaceAnnotation> mirrored = faces;
    for (auto& f : mirrored) f.box = mirror_box(f.box, width);
    CropSpec mirrored_crop = crop;
    mirrored_crop.x = width - crop.x - crop.side;
    mirrored_crop.flipped = false;
    const auto other = apply_crop_to_boxes(mirrored_crop, mirrored);

    REQUIRE(direct.size() == other.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
      REQUIRE(direct[i].box.x1 == doctest::Approx(other[i].box.x1).epsilon(1e-12));
      REQUIRE(direct[i].box.x2 == doctest::Approx(other[i].box.x2).epsilon(1e-12));
      REQUIRE(direct[i].box.y1 == other[i].box.y1);
      REQUIRE(direct[i].box.y2 == other[i].box.y2);
    }
    for (const auto& f : direct) {
      REQUIRE(f.box.x1 >= 0);
      REQUIRE(f.box.y1 >= 0);
      REQUIRE(f.box.x2 <= crop.target_side);
      REQUIRE(f.box.y2 <= crop.target_side);
      REQUIRE(f.box.valid());
    }
  }
}
