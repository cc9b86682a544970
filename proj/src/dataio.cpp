#include "s3fd/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <random>

#include "s3fd/errors.hpp"

namespace s3fd {

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  // Next line with trailing CR/whitespace stripped; nullopt at end of input.
  std::optional<std::string_view> next() {
    if (pos_ >= text_.size()) return std::nullopt;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_no_;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.remove_suffix(1);
    }
    return line;
  }

  std::optional<std::string_view> peek() const {
    LineReader copy = *this;
    return copy.next();
  }

  // Skips blank lines; nullopt at end of input.
  std::optional<std::string_view> next_nonblank() {
    while (auto line = next()) {
      if (!line->empty()) return line;
    }
    return std::nullopt;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_value(std::string_view token) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

std::size_t parse_count(LineReader& reader, std::string_view what) {
  auto line = reader.next();
  if (!line) throw ParseError(reader.line_no() + 1, "missing " + std::string(what));
  auto tokens = split_tokens(*line);
  std::optional<long> count;
  if (tokens.size() == 1) count = parse_value<long>(tokens[0]);
  if (!count || *count < 0) {
    throw ParseError(reader.line_no(), "malformed " + std::string(what) + " '" +
                                           std::string(*line) + "'");
  }
  return std::size_t(*count);
}

bool is_zero_face_line(std::string_view line) {
  auto tokens = split_tokens(line);
  if (tokens.size() != 10) return false;
  return std::all_of(tokens.begin(), tokens.end(), [](std::string_view t) {
    auto v = parse_value<double>(t);
    return v && *v == 0.0;
  });
}

FaceAnnotation parse_face_line(std::string_view line, std::size_t line_no) {
  auto tokens = split_tokens(line);
  if (tokens.size() != 10) {
    throw ParseError(line_no, "expected 10 fields in face line, got " +
                                  std::to_string(tokens.size()));
  }
  std::array<double, 4> geom{};
  for (std::size_t i = 0; i < 4; ++i) {
    auto v = parse_value<double>(tokens[i]);
    if (!v || !std::isfinite(*v)) {
      throw ParseError(line_no, "bad number '" + std::string(tokens[i]) + "'");
    }
    geom[i] = *v;
  }
  if (geom[2] < 0.0 || geom[3] < 0.0) {
    throw ParseError(line_no, "negative face width or height");
  }
  std::array<int, 6> flags{};
  for (std::size_t i = 0; i < 6; ++i) {
    auto v = parse_value<int>(tokens[4 + i]);
    if (!v) throw ParseError(line_no, "bad flag '" + std::string(tokens[4 + i]) + "'");
    flags[i] = *v;
  }
  FaceAnnotation face;
  face.box = Box::from_xywh(geom[0], geom[1], geom[2], geom[3]);
  face.blur = flags[0];
  face.expression = flags[1];
  face.illumination = flags[2];
  face.invalid = flags[3];
  face.occlusion = flags[4];
  face.pose = flags[5];
  return face;
}

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n].
int uniform_int(std::mt19937_64& rng, int n) {
  const int v = int(uniform01(rng) * double(n + 1));
  return std::min(v, n);
}

}  // namespace

std::string format_number(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::vector<ImageRecord> parse_wider_annotations(std::string_view text) {
  LineReader reader(text);
  std::vector<ImageRecord> records;
  while (auto path = reader.next_nonblank()) {
    ImageRecord record;
    record.path = std::string(*path);
    const std::size_t count = parse_count(reader, "face count");
    if (count == 0) {
      if (auto peeked = reader.peek(); peeked && is_zero_face_line(*peeked)) {
        reader.next();
      }
    }
    record.faces.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto line = reader.next();
      if (!line) {
        throw ParseError(reader.line_no() + 1,
                         "file ends inside the face list of '" + record.path + "'");
      }
      record.faces.push_back(parse_face_line(*line, reader.line_no()));
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string serialize_wider_annotations(const std::vector<ImageRecord>& records) {
  std::string out;
  for (const ImageRecord& r : records) {
    out += r.path + "\n" + std::to_string(r.faces.size()) + "\n";
    if (r.faces.empty()) out += "0 0 0 0 0 0 0 0 0 0\n";
    for (const FaceAnnotation& f : r.faces) {
      out += format_number(f.box.x1) + " " + format_number(f.box.y1) + " " +
             format_number(f.box.width()) + " " + format_number(f.box.height());
      for (int flag : {f.blur, f.expression, f.illumination, f.invalid,
                       f.occlusion, f.pose}) {
        out += " " + std::to_string(flag);
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<ImageDetections> read_detections(std::string_view text) {
  LineReader reader(text);
  std::vector<ImageDetections> images;
  while (auto path = reader.next_nonblank()) {
    ImageDetections image;
    image.path = std::string(*path);
    const std::size_t count = parse_count(reader, "detection count");
    for (std::size_t i = 0; i < count; ++i) {
      auto line = reader.next();
      if (!line) {
        throw ParseError(reader.line_no() + 1,
                         "file ends inside the detections of '" + image.path + "'");
      }
      auto tokens = split_tokens(*line);
      if (tokens.size() != 5) {
        throw ParseError(reader.line_no(), "expected 'x y w h score'");
      }
      std::array<double, 5> v{};
      for (std::size_t k = 0; k < 5; ++k) {
        auto parsed = parse_value<double>(tokens[k]);
        if (!parsed || !std::isfinite(*parsed)) {
          throw ParseError(reader.line_no(),
                           "bad number '" + std::string(tokens[k]) + "'");
        }
        v[k] = *parsed;
      }
      if (v[2] <= 0.0 || v[3] <= 0.0) {
        throw ParseError(reader.line_no(), "detection width and height must be > 0");
      }
      if (v[4] < 0.0 || v[4] > 1.0) {
        throw ParseError(reader.line_no(), "score outside [0, 1]");
      }
      image.detections.push_back({Box::from_xywh(v[0], v[1], v[2], v[3]), v[4]});
    }
    images.push_back(std::move(image));
  }
  return images;
}

std::string write_detections(const std::vector<ImageDetections>& images) {
  std::string out;
  for (const ImageDetections& image : images) {
    out += image.path + "\n" + std::to_string(image.detections.size()) + "\n";
    for (const ScoredBox& d : image.detections) {
      out += format_number(d.box.x1) + " " + format_number(d.box.y1) + " " +
             format_number(d.box.width()) + " " + format_number(d.box.height()) +
             " " + format_number(d.score) + "\n";
    }
  }
  return out;
}

CropSpec sample_crop(int width, int height, std::uint64_t seed, int target_side) {
  if (width < 1 || height < 1) throw InputError("sample_crop: empty image");
  if (target_side < 1) throw InputError("sample_crop: target_side must be >= 1");
  std::mt19937_64 rng(seed);
  const int short_side = std::min(width, height);
  const int min_side = std::max(1, (3 * short_side + 9) / 10);  // ceil(0.3 * short)

  std::array<CropSpec, 5> candidates{};
  for (int c = 0; c < 5; ++c) {
    CropSpec& spec = candidates[std::size_t(c)];
    spec.candidate = c;
    spec.target_side = target_side;
    if (c == 0) {
      spec.side = short_side;
    } else {
      const double fraction = 0.3 + 0.7 * uniform01(rng);
      const int side = int(std::lround(fraction * short_side));
      spec.side = std::clamp(side, min_side, short_side);
    }
    spec.x = uniform_int(rng, width - spec.side);
    spec.y = uniform_int(rng, height - spec.side);
  }
  CropSpec chosen = candidates[std::size_t(uniform_int(rng, 4))];
  chosen.flipped = uniform01(rng) < 0.5;
  return chosen;
}

Box mirror_box(const Box& box, double width) {
  return {width - box.x2, box.y1, width - box.x1, box.y2};
}

std::vector<FaceAnnotation> apply_crop_to_boxes(
    const CropSpec& crop, const std::vector<FaceAnnotation>& faces) {
  const double x0 = crop.x;
  const double y0 = crop.y;
  const double x1 = x0 + crop.side;
  const double y1 = y0 + crop.side;
  const double target = crop.target_side;
  const double scale = target / double(crop.side);

  std::vector<FaceAnnotation> out;
  for (const FaceAnnotation& face : faces) {
    const double cx = face.box.center_x();
    const double cy = face.box.center_y();
    if (cx < x0 || cx > x1 || cy < y0 || cy > y1) continue;

    const Box clipped{std::max(face.box.x1, x0), std::max(face.box.y1, y0),
                      std::min(face.box.x2, x1), std::min(face.box.y2, y1)};
    if (!clipped.valid()) continue;

    auto map = [&](double v, double origin) {
      return std::clamp((v - origin) * scale, 0.0, target);
    };
    Box mapped{map(clipped.x1, x0), map(clipped.y1, y0), map(clipped.x2, x0),
               map(clipped.y2, y0)};
    if (crop.flipped) mapped = mirror_box(mapped, target);
    if (!mapped.valid()) continue;

    FaceAnnotation kept = face;
    kept.box = mapped;
    out.push_back(kept);
  }
  return out;
}

}  // namespace s3fd
