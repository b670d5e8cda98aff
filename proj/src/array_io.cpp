#include "mason/array_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace mason {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kNpyMagic[] = "\x93NUMPY";
constexpr std::size_t kNpyMagicLen = 6;
constexpr std::size_t kNpyAlign = 64;
// numpy reserves room so the leading axis can grow in place.
constexpr std::size_t kGrowthAxisMaxDigits = 21;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "failed reading " + path.string());
  return bytes;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

// --- NPY header dictionary -------------------------------------------------

struct NpyHeader {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  bool has_descr = false, has_order = false, has_shape = false;
};

class DictParser {
 public:
  explicit DictParser(std::string_view text) : s_(text) {}

  NpyHeader parse() {
    NpyHeader h;
    expect('{');
    skip_ws();
    while (peek() != '}') {
      std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        h.descr = parse_string();
        h.has_descr = true;
      } else if (key == "fortran_order") {
        h.fortran_order = parse_bool();
        h.has_order = true;
      } else if (key == "shape") {
        h.shape = parse_tuple();
        h.has_shape = true;
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    ++pos_;
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after header dictionary");
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::FormatError, "npy header: " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() const {
    if (pos_ >= s_.size()) fail("unexpected end of header");
    return s_[pos_];
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
    skip_ws();
  }

  std::string parse_string() {
    skip_ws();
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected string");
    const auto end = s_.find(quote, pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }

  bool parse_bool() {
    skip_ws();
    if (s_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::vector<std::size_t> parse_tuple() {
    std::vector<std::size_t> dims;
    expect('(');
    while (peek() != ')') {
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer in shape");
      std::size_t v = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        v = v * 10 + static_cast<std::size_t>(s_[pos_] - '0');
        if (v > (std::size_t{1} << 40)) fail("shape dimension too large");
        ++pos_;
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != ')') {
        fail("expected ',' or ')' in shape");
      }
    }
    ++pos_;
    return dims;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::uint32_t load_le32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

void store_le32(std::uint32_t v, std::string& out) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

// --- sidecar ---------------------------------------------------------------

void read_sidecar(const fs::path& array_path, FeatureMapStack& stack) {
  const auto meta = sidecar_path(array_path);
  if (!fs::exists(meta)) return;
  json j;
  try {
    j = json::parse(read_file(meta));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, "sidecar " + meta.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::FormatError, "sidecar " + meta.string() + " is not an object");
  if (auto it = j.find("layer_name"); it != j.end() && it->is_string()) stack.layer_name = it->get<std::string>();
  if (auto it = j.find("source_image"); it != j.end() && it->is_string()) {
    stack.source_image = it->get<std::string>();
  }
}

// --- PNM -------------------------------------------------------------------

struct PnmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm(const std::string& bytes, std::string_view magic, const fs::path& path) {
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorCode::FormatError, path.string() + ": " + what);
  };
  if (bytes.size() < 2 || bytes.compare(0, 2, magic) != 0) throw fail("expected magic " + std::string(magic));
  std::size_t pos = 2;
  auto next_int = [&]() -> int {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw fail("malformed header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) throw fail("header value too large");
      ++pos;
    }
    return static_cast<int>(v);
  };
  PnmHeader h;
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw fail("missing whitespace after maxval");
  }
  h.data_offset = pos + 1;
  if (h.width < 1 || h.height < 1) throw fail("dimensions must be positive");
  return h;
}

void check_payload(const std::string& bytes, const PnmHeader& h, std::size_t sample_bytes, const fs::path& path) {
  const std::size_t expected = static_cast<std::size_t>(h.width) * h.height * sample_bytes;
  if (bytes.size() - h.data_offset != expected) {
    throw Error(ErrorCode::FormatError, path.string() + ": payload has " +
                                            std::to_string(bytes.size() - h.data_offset) + " bytes, header implies " +
                                            std::to_string(expected));
  }
}

std::string pnm_header(std::string_view magic, int width, int height, int maxval) {
  return std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
         std::to_string(maxval) + "\n";
}

template <class Tag>
void write_gray8(const Grid<std::uint8_t, Tag>& g, const fs::path& path) {
  if (g.empty()) throw Error(ErrorCode::InvalidArgument, "cannot write an empty raster");
  std::string out = pnm_header("P5", g.width(), g.height(), 255);
  out.append(reinterpret_cast<const char*>(g.values().data()), g.size());
  write_file(path, out);
}

// --- annotations -----------------------------------------------------------

int require_int(const json& box, const char* key) {
  auto it = box.find(key);
  if (it == box.end() || !it->is_number_integer()) {
    throw Error(ErrorCode::FormatError, std::string("annotation box needs integer '") + key + "'");
  }
  return it->get<int>();
}

}  // namespace

FeatureMapStack::FeatureMapStack(int c, int h, int w, std::vector<float> values, std::string layer,
                                 std::string source)
    : channels(c), height(h), width(w), data(std::move(values)), layer_name(std::move(layer)),
      source_image(std::move(source)) {
  validate();
}

void FeatureMapStack::validate() const {
  if (channels < 1 || height < 1 || width < 1) {
    throw Error(ErrorCode::InvalidData, "feature stack dimensions must be positive");
  }
  if (data.size() != static_cast<std::size_t>(channels) * height * width) {
    throw Error(ErrorCode::InvalidData, "feature stack data length does not equal C*H*W");
  }
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::InvalidData, "feature stack contains NaN or Inf");
  }
}

fs::path sidecar_path(const fs::path& array_path) {
  fs::path p = array_path;
  p.replace_extension(".meta.json");
  return p;
}

std::string npy_header(std::span<const std::size_t> shape) {
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) dict += ", ";
    dict += std::to_string(shape[i]);
  }
  if (shape.size() == 1) dict += ",";
  dict += "), }";
  if (!shape.empty()) dict.append(kGrowthAxisMaxDigits - std::to_string(shape[0]).size(), ' ');
  const std::size_t hlen = dict.size() + 1;
  const std::size_t padlen = kNpyAlign - ((kNpyMagicLen + 2 + 2 + hlen) % kNpyAlign);
  const std::size_t total = hlen + padlen;
  std::string out(kNpyMagic, kNpyMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(total & 0xFF));
  out.push_back(static_cast<char>((total >> 8) & 0xFF));
  out += dict;
  out.append(padlen, ' ');
  out.push_back('\n');
  return out;
}

FeatureMapStack read_feature_stack(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 10 || bytes.compare(0, kNpyMagicLen, kNpyMagic, kNpyMagicLen) != 0) {
    throw Error(ErrorCode::FormatError, path.string() + ": missing NPY magic");
  }
  if (bytes[6] != '\x01' || bytes[7] != '\x00') {
    throw Error(ErrorCode::FormatError, path.string() + ": only NPY format version 1.0 is supported");
  }
  const std::size_t hlen = static_cast<unsigned char>(bytes[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < 10 + hlen) throw Error(ErrorCode::FormatError, path.string() + ": truncated header");
  const NpyHeader h = DictParser(std::string_view(bytes).substr(10, hlen)).parse();
  if (!h.has_descr || !h.has_order || !h.has_shape) {
    throw Error(ErrorCode::FormatError, path.string() + ": header must define descr, fortran_order and shape");
  }
  if (h.fortran_order) throw Error(ErrorCode::UnsupportedLayout, path.string() + ": column-major arrays are not supported");
  if (h.descr != "<f4") throw Error(ErrorCode::FormatError, path.string() + ": dtype must be '<f4', got '" + h.descr + "'");
  if (h.shape.size() != 3) throw Error(ErrorCode::FormatError, path.string() + ": expected a 3-D (C,H,W) array");
  for (auto d : h.shape) {
    if (d == 0) throw Error(ErrorCode::FormatError, path.string() + ": zero-length axis");
  }
  const std::size_t count = h.shape[0] * h.shape[1] * h.shape[2];
  if (bytes.size() - 10 - hlen != count * 4) {
    throw Error(ErrorCode::FormatError, path.string() + ": payload size does not match shape");
  }
  std::vector<float> data(count);
  const char* p = bytes.data() + 10 + hlen;
  for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(load_le32(p + 4 * i));

  FeatureMapStack stack;
  stack.channels = static_cast<int>(h.shape[0]);
  stack.height = static_cast<int>(h.shape[1]);
  stack.width = static_cast<int>(h.shape[2]);
  stack.data = std::move(data);
  stack.validate();
  read_sidecar(path, stack);
  return stack;
}

void write_feature_stack(const FeatureMapStack& stack, const fs::path& path) {
  stack.validate();
  const std::size_t shape[] = {static_cast<std::size_t>(stack.channels), static_cast<std::size_t>(stack.height),
                               static_cast<std::size_t>(stack.width)};
  std::string out = npy_header(shape);
  out.reserve(out.size() + stack.data.size() * 4);
  for (float v : stack.data) store_le32(std::bit_cast<std::uint32_t>(v), out);
  write_file(path, out);

  ordered_json meta;
  meta["layer_name"] = stack.layer_name;
  meta["source_image"] = stack.source_image;
  write_file(sidecar_path(path), meta.dump(2) + "\n");
}

RasterImage read_image(const fs::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_pnm(bytes, "P6", path);
  if (h.maxval != 255) throw Error(ErrorCode::FormatError, path.string() + ": only maxval 255 is supported");
  check_payload(bytes, h, 3, path);
  RasterImage img(h.height, h.width);
  auto px = img.values();
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = Rgb{src[3 * i], src[3 * i + 1], src[3 * i + 2]};
  return img;
}

void write_image(const RasterImage& image, const fs::path& path) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "cannot write an empty image");
  std::string out = pnm_header("P6", image.width(), image.height(), 255);
  out.reserve(out.size() + image.size() * 3);
  for (const Rgb& c : image.values()) {
    out.push_back(static_cast<char>(c.r));
    out.push_back(static_cast<char>(c.g));
    out.push_back(static_cast<char>(c.b));
  }
  write_file(path, out);
}

GrayImage read_gray(const fs::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_pnm(bytes, "P5", path);
  if (h.maxval != 255) throw Error(ErrorCode::FormatError, path.string() + ": expected 8-bit PGM (maxval 255)");
  check_payload(bytes, h, 1, path);
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
  return GrayImage(h.height, h.width, std::vector<std::uint8_t>(src, src + static_cast<std::size_t>(h.width) * h.height));
}

void write_gray(const GrayImage& image, const fs::path& path) { write_gray8(image, path); }

Mask read_mask(const fs::path& path) {
  const GrayImage g = read_gray(path);
  return Mask(g.height(), g.width(), std::vector<std::uint8_t>(g.values().begin(), g.values().end()));
}

void write_mask(const Mask& mask, const fs::path& path) { write_gray8(mask, path); }

void write_heatmap(const Heatmap& heatmap, const fs::path& path) {
  GrayImage g(heatmap.height(), heatmap.width());
  std::transform(heatmap.values().begin(), heatmap.values().end(), g.values().begin(), [](double v) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
  });
  write_gray8(g, path);
}

Heatmap read_heatmap(const fs::path& path) {
  const GrayImage g = read_gray(path);
  return Heatmap(g.height(), g.width(), std::vector<double>(g.values().begin(), g.values().end()));
}

void write_trimap(const Trimap& trimap, const fs::path& path) {
  if (std::any_of(trimap.values().begin(), trimap.values().end(), [](std::uint8_t v) { return v > 3; })) {
    throw Error(ErrorCode::InvalidData, "trimap labels must be in {0,1,2,3}");
  }
  write_gray8(trimap, path);
}

Trimap read_trimap(const fs::path& path) {
  const GrayImage g = read_gray(path);
  if (std::any_of(g.values().begin(), g.values().end(), [](std::uint8_t v) { return v > 3; })) {
    throw Error(ErrorCode::InvalidData, path.string() + ": trimap labels must be in {0,1,2,3}");
  }
  return Trimap(g.height(), g.width(), std::vector<std::uint8_t>(g.values().begin(), g.values().end()));
}

void write_gray16(const Grid<std::uint16_t>& image, const fs::path& path) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "cannot write an empty raster");
  std::string out = pnm_header("P5", image.width(), image.height(), 65535);
  out.reserve(out.size() + image.size() * 2);
  for (std::uint16_t v : image.values()) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xFF));
  }
  write_file(path, out);
}

Grid<std::uint16_t> read_gray16(const fs::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_pnm(bytes, "P5", path);
  if (h.maxval != 65535) throw Error(ErrorCode::FormatError, path.string() + ": expected 16-bit PGM (maxval 65535)");
  check_payload(bytes, h, 2, path);
  Grid<std::uint16_t> g(h.height, h.width);
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
  auto out = g.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>((src[2 * i] << 8) | src[2 * i + 1]);
  }
  return g;
}

AnnotationSet annotations_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("annotation JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("boxes") || !j["boxes"].is_array()) {
    throw Error(ErrorCode::FormatError, "annotation JSON needs a 'boxes' array");
  }
  AnnotationSet set;
  if (auto it = j.find("image"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::FormatError, "'image' must be a string");
    set.image = it->get<std::string>();
  }
  for (const auto& b : j["boxes"]) {
    if (!b.is_object()) throw Error(ErrorCode::FormatError, "each box must be an object");
    Annotation a;
    a.box = {require_int(b, "x0"), require_int(b, "y0"), require_int(b, "x1"), require_int(b, "y1")};
    if (auto it = b.find("label"); it != b.end()) {
      if (!it->is_string()) throw Error(ErrorCode::FormatError, "'label' must be a string");
      a.label = it->get<std::string>();
    }
    if (auto it = b.find("score"); it != b.end() && !it->is_null()) {
      if (!it->is_number()) throw Error(ErrorCode::FormatError, "'score' must be a number");
      a.score = it->get<double>();
    }
    set.boxes.push_back(std::move(a));
  }
  validate_annotations(set);
  return set;
}

std::string annotations_to_json(const AnnotationSet& set) {
  validate_annotations(set);
  ordered_json j;
  j["image"] = set.image;
  j["boxes"] = ordered_json::array();
  for (const auto& a : set.boxes) {
    ordered_json b;
    b["x0"] = a.box.x0;
    b["y0"] = a.box.y0;
    b["x1"] = a.box.x1;
    b["y1"] = a.box.y1;
    b["label"] = a.label;
    if (a.score) b["score"] = *a.score;
    j["boxes"].push_back(std::move(b));
  }
  return j.dump(2) + "\n";
}

AnnotationSet read_annotations(const fs::path& path) { return annotations_from_json(read_file(path)); }

void write_annotations(const AnnotationSet& set, const fs::path& path) { write_file(path, annotations_to_json(set)); }

void write_text_file(const fs::path& path, const std::string& text) { write_file(path, text); }

}  // namespace mason
