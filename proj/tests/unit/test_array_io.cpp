#include <cstring>

#include "doctest.h"
#include "mason/array_io.hpp"
#include "support.hpp"

using namespace mason;
using testing::error_of;
using testing::fixture;
using testing::slurp;
using testing::spit;
using testing::TempDir;

namespace {

FeatureMapStack sample_stack() {
  std::vector<float> data(2 * 3 * 4);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = 0.125f * static_cast<float>(i) - 1.0f;
  data[5] = 1e-30f;
  data[7] = 3.4e38f;
  return FeatureMapStack(2, 3, 4, data, "conv5_3", "photo.jpg");
}

}  // namespace

TEST_CASE("npy header matches numpy's layout") {
  const std::size_t s1[] = {1, 1, 1};
  const std::string h = npy_header(s1);
  CHECK(h.size() == 128);
  CHECK(h.substr(0, 8) == std::string("\x93NUMPY\x01\x00", 8));
  CHECK(static_cast<unsigned char>(h[8]) == 118);
  CHECK(h[9] == 0);
  const std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 1), }";
  CHECK(h.substr(10, dict.size()) == dict);
  CHECK(h.back() == '\n');

  const std::size_t s2[] = {512, 14, 14};
  CHECK(npy_header(s2).size() == 128);
  CHECK(npy_header(s2).find("'shape': (512, 14, 14), }") != std::string::npos);
}

TEST_CASE("writer output is byte-identical to numpy.save") {
  TempDir dir;
  for (const char* name : {"scalar", "blob", "wide", "clean"}) {
    CAPTURE(name);
    const auto src = fixture(std::string(name) + ".npy");
    const FeatureMapStack s = read_feature_stack(src);
    const auto dst = dir / (std::string(name) + ".npy");
    write_feature_stack(s, dst);
    CHECK(slurp(dst) == slurp(src));
    CHECK(slurp(sidecar_path(dst)) == slurp(sidecar_path(src)));
  }
}

TEST_CASE("minimal stack") {
  const FeatureMapStack s = read_feature_stack(fixture("scalar.npy"));
  CHECK(s.channels == 1);
  CHECK(s.height == 1);
  CHECK(s.width == 1);
  CHECK(s.data == std::vector<float>{3.5f});
  CHECK(s.layer_name == "synthetic");
}

TEST_CASE("round trip is bit exact") {
  TempDir dir;
  const FeatureMapStack s = sample_stack();
  write_feature_stack(s, dir / "s.npy");
  const FeatureMapStack back = read_feature_stack(dir / "s.npy");
  CHECK(back == s);
  CHECK(std::memcmp(back.data.data(), s.data.data(), s.data.size() * sizeof(float)) == 0);
  CHECK(back.at(1, 2, 3) == s.data.back());
}

TEST_CASE("repeated writes are byte identical") {
  TempDir dir;
  const FeatureMapStack s = sample_stack();
  write_feature_stack(s, dir / "a.npy");
  write_feature_stack(s, dir / "b.npy");
  CHECK(slurp(dir / "a.npy") == slurp(dir / "b.npy"));
  CHECK(slurp(dir / "a.meta.json") == slurp(dir / "b.meta.json"));
}

TEST_CASE("a 512x14x14 stack gets that header shape") {
  TempDir dir;
  FeatureMapStack s(512, 14, 14, std::vector<float>(512 * 14 * 14, 0.5f));
  write_feature_stack(s, dir / "big.npy");
  const std::string bytes = slurp(dir / "big.npy");
  CHECK(bytes.find("'shape': (512, 14, 14)") != std::string::npos);
  CHECK(bytes.size() == 128 + 512 * 14 * 14 * 4);
}

TEST_CASE("non-finite values are rejected before writing") {
  TempDir dir;
  FeatureMapStack s = sample_stack();
  s.data[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK(error_of([&] { write_feature_stack(s, dir / "nan.npy"); }) == ErrorCode::InvalidData);
  CHECK_FALSE(std::filesystem::exists(dir / "nan.npy"));
  CHECK(error_of([] { FeatureMapStack(1, 1, 1, {std::numeric_limits<float>::infinity()}); }) ==
        ErrorCode::InvalidData);
  CHECK(error_of([] { FeatureMapStack(1, 2, 2, {1.0f}); }) == ErrorCode::InvalidData);
}

TEST_CASE("non-finite values in a file are rejected") {
  TempDir dir;
  std::string bytes = slurp(fixture("scalar.npy"));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 128, &nan, 4);
  spit(dir / "nan.npy", bytes);
  CHECK(error_of([&] { read_feature_stack(dir / "nan.npy"); }) == ErrorCode::InvalidData);
}

TEST_CASE("malformed files") {
  TempDir dir;
  CHECK(error_of([] { read_feature_stack(fixture("fortran.npy")); }) == ErrorCode::UnsupportedLayout);
  CHECK(error_of([] { read_feature_stack(fixture("float64.npy")); }) == ErrorCode::FormatError);
  CHECK(error_of([&] { read_feature_stack(dir / "missing.npy"); }) == ErrorCode::IoError);

  std::string good = slurp(fixture("blob.npy"));
  spit(dir / "short.npy", good.substr(0, good.size() - 4));
  CHECK(error_of([&] { read_feature_stack(dir / "short.npy"); }) == ErrorCode::FormatError);
  spit(dir / "long.npy", good + "xxxx");
  CHECK(error_of([&] { read_feature_stack(dir / "long.npy"); }) == ErrorCode::FormatError);

  std::string bad_magic = good;
  bad_magic[1] = 'X';
  spit(dir / "magic.npy", bad_magic);
  CHECK(error_of([&] { read_feature_stack(dir / "magic.npy"); }) == ErrorCode::FormatError);

  std::string v2 = good;
  v2[6] = 2;
  spit(dir / "v2.npy", v2);
  CHECK(error_of([&] { read_feature_stack(dir / "v2.npy"); }) == ErrorCode::FormatError);

  spit(dir / "tiny.npy", "\x93NUM");
  CHECK(error_of([&] { read_feature_stack(dir / "tiny.npy"); }) == ErrorCode::FormatError);
}

TEST_CASE("missing sidecar leaves default metadata") {
  TempDir dir;
  std::filesystem::copy_file(fixture("blob.npy"), dir / "copy.npy");
  const FeatureMapStack s = read_feature_stack(dir / "copy.npy");
  CHECK(s.layer_name == "unknown");
  CHECK(s.source_image.empty());
  CHECK(sidecar_path("a/b/x.npy") == std::filesystem::path("a/b/x.meta.json"));
}

TEST_CASE("unwritable path") {
  const FeatureMapStack s = sample_stack();
  CHECK(error_of([&] { write_feature_stack(s, "/nonexistent-dir/x.npy"); }) == ErrorCode::IoError);
}

TEST_CASE("2x2 PPM decodes to its pixels") {
  TempDir dir;
  spit(dir / "t.ppm", std::string("P6\n# comment\n2 2\n255\n", 21) + std::string("\x01\x02\x03\xff\x00\x80\x10\x20\x30\x40\x50\x60", 12));
  const RasterImage img = read_image(dir / "t.ppm");
  REQUIRE(img.height() == 2);
  REQUIRE(img.width() == 2);
  CHECK(img(0, 0) == Rgb{1, 2, 3});
  CHECK(img(0, 1) == Rgb{255, 0, 128});
  CHECK(img(1, 0) == Rgb{16, 32, 48});
  CHECK(img(1, 1) == Rgb{64, 80, 96});

  write_image(img, dir / "u.ppm");
  CHECK(read_image(dir / "u.ppm") == img);
  CHECK(slurp(dir / "u.ppm").substr(0, 11) == "P6\n2 2\n255\n");
}

TEST_CASE("raster size mismatch with header") {
  TempDir dir;
  spit(dir / "t.ppm", std::string("P6\n2 2\n255\n") + std::string(11, '\x01'));
  CHECK(error_of([&] { read_image(dir / "t.ppm"); }) == ErrorCode::FormatError);
  spit(dir / "t.pgm", std::string("P5\n3 1\n255\n") + std::string(4, '\x01'));
  CHECK(error_of([&] { read_gray(dir / "t.pgm"); }) == ErrorCode::FormatError);
  spit(dir / "p3.ppm", "P3\n1 1\n255\n1 2 3\n");
  CHECK(error_of([&] { read_image(dir / "p3.ppm"); }) == ErrorCode::FormatError);
}

TEST_CASE("mask round trip preserves every byte value") {
  TempDir dir;
  Mask m(16, 16);
  for (int i = 0; i < 256; ++i) m.values()[i] = static_cast<std::uint8_t>(i);
  write_mask(m, dir / "m.pgm");
  CHECK(read_mask(dir / "m.pgm") == m);
}

TEST_CASE("heatmaps are rounded to 8 bits") {
  TempDir dir;
  Heatmap h(1, 5, std::vector<double>{0.0, 63.75, 127.5, 254.6, 255.0});
  write_heatmap(h, dir / "h.pgm");
  const Heatmap back = read_heatmap(dir / "h.pgm");
  CHECK(back.values()[0] == 0.0);
  CHECK(back.values()[1] == 64.0);
  CHECK(back.values()[2] == 128.0);
  CHECK(back.values()[3] == 255.0);
  CHECK(back.values()[4] == 255.0);
}

TEST_CASE("trimaps keep raw labels") {
  TempDir dir;
  Trimap t(2, 2, std::vector<std::uint8_t>{0, 1, 2, 3});
  write_trimap(t, dir / "t.pgm");
  CHECK(read_trimap(dir / "t.pgm") == t);
  Trimap bad(1, 1, std::uint8_t{4});
  CHECK(error_of([&] { write_trimap(bad, dir / "bad.pgm"); }) == ErrorCode::InvalidData);
}

TEST_CASE("16-bit rasters are big-endian") {
  TempDir dir;
  Grid<std::uint16_t> g(1, 3, std::vector<std::uint16_t>{0, 258, 65535});
  write_gray16(g, dir / "g.pgm");
  const std::string bytes = slurp(dir / "g.pgm");
  CHECK(bytes == std::string("P5\n3 1\n65535\n\x00\x00\x01\x02\xff\xff", 19));
  CHECK(read_gray16(dir / "g.pgm") == g);
  CHECK(error_of([&] { read_gray(dir / "g.pgm"); }) == ErrorCode::FormatError);
}

TEST_CASE("annotation JSON round trip") {
  TempDir dir;
  AnnotationSet set{"img.ppm", {{{1, 2, 5, 9}, "cat", 0.75}, {{0, 0, 3, 3}, "dog", std::nullopt}}};
  write_annotations(set, dir / "a.json");
  CHECK(read_annotations(dir / "a.json") == set);
  CHECK(annotations_to_json(set) ==
        "{\n  \"image\": \"img.ppm\",\n  \"boxes\": [\n    {\n      \"x0\": 1,\n      \"y0\": 2,\n"
        "      \"x1\": 5,\n      \"y1\": 9,\n      \"label\": \"cat\",\n      \"score\": 0.75\n    },\n"
        "    {\n      \"x0\": 0,\n      \"y0\": 0,\n      \"x1\": 3,\n      \"y1\": 3,\n"
        "      \"label\": \"dog\"\n    }\n  ]\n}\n");
}

TEST_CASE("annotation JSON errors") {
  CHECK(error_of([] { annotations_from_json(R"({"boxes":[{"x0":3,"y0":0,"x1":3,"y1":4}]})"); }) ==
        ErrorCode::InvalidAnnotation);
  CHECK(error_of([] { annotations_from_json(R"({"boxes":[{"x0":0,"y0":0,"x1":3}]})"); }) ==
        ErrorCode::FormatError);
  CHECK(error_of([] { annotations_from_json(R"({"image":"x"})"); }) == ErrorCode::FormatError);
  CHECK(error_of([] { annotations_from_json("not json"); }) == ErrorCode::FormatError);
  CHECK(error_of([] { annotations_from_json(R"({"boxes":[{"x0":0,"y0":0,"x1":3,"y1":3,"score":2}]})"); }) ==
        ErrorCode::InvalidAnnotation);
  const AnnotationSet s = annotations_from_json(R"({"boxes":[{"x0":0,"y0":0,"x1":3,"y1":3}]})");
  CHECK(s.boxes.size() == 1);
  CHECK(s.boxes[0].label.empty());
}
