#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "support/fuzz.hpp"
#include "geodet/errors.hpp"
#include "geodet/pointcloud_io.hpp"

using namespace geodet;

namespace {

const char* kHeader =
    "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";

std::string binary_ply(const std::vector<std::array<float, 3>>& pts, int declared) {
  std::string s = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(declared) +
                  "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : pts) s.append(reinterpret_cast<const char*>(p.data()), 12);
  return s;
}

}  // namespace

TEST_CASE("ascii PLY with colors") {
  const PointCloud c = parse_ply(std::string(kHeader) + "0 0 0 255 0 0\n1 2 3 0 255 51\n");
  REQUIRE(c.size() == 2);
  CHECK(c.positions(1, 2) == 3.0);
  CHECK(c.colors(0, 0) == 1.0);
  CHECK(c.colors(1, 2) == doctest::Approx(0.2));
}

TEST_CASE("binary PLY without colors defaults to mid gray") {
  const PointCloud c = parse_ply(binary_ply({{1.5f, -2.0f, 0.25f}}, 1));
  REQUIRE(c.size() == 1);
  CHECK(c.positions(0, 0) == 1.5);
  CHECK(c.colors(0, 1) == 0.5);
}

TEST_CASE("truncated binary body names the missing count") {
  try {
    parse_ply(binary_ply({{0, 0, 0}, {1, 1, 1}}, 1000));
    FAIL("expected a truncation error");
  } catch (const TruncationError& e) {
    CHECK(std::string(e.what()).find("1000") != std::string::npos);
  }
}

TEST_CASE("truncated ascii body") {
  CHECK_THROWS_AS(parse_ply(std::string(kHeader) + "0 0 0 1 1 1\n"), TruncationError);
}

TEST_CASE("bad header lines are reported by number") {
  try {
    parse_ply("ply\nformat ascii 1.0\nelement vertex two\nend_header\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_ply("not a ply"), ParseError);
  CHECK_THROWS_AS(parse_ply(""), ParseError);
  CHECK_THROWS_AS(parse_ply("ply\nformat binary_big_endian 1.0\nend_header\n"), ParseError);
}

TEST_CASE("non-finite coordinate names the point") {
  try {
    parse_ply(std::string(kHeader) + "0 0 0 1 1 1\n0 nan 0 1 1 1\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("vertex 1") != std::string::npos);
  }
}

TEST_CASE("other elements are skipped") {
  const std::string doc =
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0.5 0.5 0.5\n3 0 0 0\n";
  CHECK(parse_ply(doc).positions(0, 1) == 0.5);
}

TEST_CASE("binary and ascii round trips are exact") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud c = fuzz::random_cloud(rng, static_cast<int>(rng.uniform_int(1, 50)));
    for (PlyFormat f : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
      const PointCloud back = parse_ply(write_ply(c, f));
      CHECK(back.positions == c.positions);
      CHECK(back.colors == c.colors);
    }
  }
}

TEST_CASE("mutated documents never escape as foreign exceptions") {
  SplitMix64 rng(77);
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    const int kind = static_cast<int>(rng.uniform_int(0, 4));
    const std::string doc = fuzz::mutate(rng, fuzz::seed_document(rng, kind));
    try {
      if (kind <= 1) {
        validate_point_cloud(parse_ply(doc));
      } else if (kind == 2) {
        parse_annotations(doc);
      } else if (kind == 3) {
        parse_detections(doc);
      } else {
        parse_ground_truth(doc);
      }
      ++accepted;
    } catch (const Error&) {
    }
  }
  CHECK(accepted < 1000);
}

TEST_CASE("annotations") {
  const SceneAnnotation a =
      parse_annotations(R"({"class_names":["chair"],"boxes":[{"center":[0,0,0],"size":[1,1,1],"class_id":0}]})");
  CHECK(a.boxes.size() == 1);
  CHECK(parse_annotations(write_annotations(a)).boxes[0].size == Vec3::Ones());
  CHECK_THROWS_AS(
      parse_annotations(R"({"class_names":["chair"],"boxes":[{"center":[0,0,0],"size":[1,1,1],"class_id":1}]})"),
      ValidationError);
  CHECK_THROWS_AS(
      parse_annotations(R"({"class_names":["chair"],"boxes":[{"center":[0,0,0],"size":[1,0,1],"class_id":0}]})"),
      ValidationError);
  CHECK_THROWS_AS(parse_annotations("{"), ParseError);
}

TEST_CASE("superpoint labels") {
  const SuperpointLabels l = parse_superpoints("5\n5\n9\n", 3);
  CHECK(l.ids == std::vector<int>{0, 0, 1});
  CHECK(l.count == 2);
  CHECK_THROWS_AS(parse_superpoints("1\n2\n", 3), ShapeError);
  CHECK_THROWS_AS(parse_superpoints("1\nx\n2\n", 3), ParseError);
  CHECK_THROWS_AS(parse_superpoints("1\n-2\n2\n", 3), ValidationError);
  CHECK(parse_superpoints(write_superpoints(l), 3).ids == l.ids);
}

TEST_CASE("detections and ground truth round trip") {
  DetectionResult d;
  d.scene = "s";
  Box3D b;
  b.center = Vec3(0.1, 0.2, 0.3);
  d.boxes = {b};
  d.scores = {0.123456789012345};
  const auto back = parse_detections(write_detections({d}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].scores[0] == d.scores[0]);
  CHECK(back[0].boxes[0].center == b.center);

  GroundTruthSet gt{{"a"}, {{"s", {b}}}};
  const GroundTruthSet g2 = parse_ground_truth(write_ground_truth(gt));
  CHECK(g2.scenes[0].boxes[0].center == b.center);
}

TEST_CASE("file helpers raise I/O errors") {
  CHECK_THROWS_AS(read_file("/nonexistent/dir/file.ply"), IoError);
  CHECK_THROWS_AS(write_file("/nonexistent/dir/file.ply", "x"), IoError);
  const auto tmp = std::filesystem::temp_directory_path() / "geodet_io_test.txt";
  write_file(tmp, "hello");
  CHECK(read_file(tmp) == "hello");
  std::filesystem::remove(tmp);
}
