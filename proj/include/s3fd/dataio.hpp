#pragma once

// WIDER FACE annotation text, detection result text, and the geometric side
// of training augmentation (square crop, resize, horizontal flip).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "s3fd/geometry.hpp"

namespace s3fd {

struct FaceAnnotation {
  Box box;
  int blur = 0;
  int expression = 0;
  int illumination = 0;
  int invalid = 0;
  int occlusion = 0;
  int pose = 0;

  friend bool operator==(const FaceAnnotation&, const FaceAnnotation&) = default;
};

struct ImageRecord {
  std::string path;
  std::optional<int> width;
  std::optional<int> height;
  std::vector<FaceAnnotation> faces;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Layout per image: path line, face count line, then one
// "x y w h blur expression illumination invalid occlusion pose" line per face.
// A zero count followed by an all-zero face line is accepted and the line is
// discarded. Throws ParseError with the offending line number.
std::vector<ImageRecord> parse_wider_annotations(std::string_view text);
std::string serialize_wider_annotations(const std::vector<ImageRecord>& records);

struct ImageDetections {
  std::string path;
  std::vector<ScoredBox> detections;

  friend bool operator==(const ImageDetections&, const ImageDetections&) = default;
};

// Layout per image: path line, count line, then "x y w h score" lines.
// Scores must lie in [0, 1].
std::vector<ImageDetections> read_detections(std::string_view text);
std::string write_detections(const std::vector<ImageDetections>& images);

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

struct CropSpec {
  int x = 0;
  int y = 0;
  int side = 1;
  int target_side = 640;
  bool flipped = false;
  int candidate = 0;  // 0 = biggest square, 1-4 = random-size squares
};

// Picks one of five square patches (the biggest square, or four squares with
// side in [0.3, 1] of the short image side) at a uniform position, and a flip
// with probability 0.5. Pure function of the seed.
CropSpec sample_crop(int width, int height, std::uint64_t seed,
                     int target_side = 640);

// Keeps faces whose original centre lies in the crop (borders included),
// clipped to the crop, mapped to the target_side x target_side patch and
// mirrored when flipped. Faces with zero area after clipping are dropped.
std::vector<FaceAnnotation> apply_crop_to_boxes(
    const CropSpec& crop, const std::vector<FaceAnnotation>& faces);

// x -> width - x on an image of the given width.
Box mirror_box(const Box& box, double width);

}  // namespace s3fd
