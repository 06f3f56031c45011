#include "geodet/pointcloud_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "geodet/errors.hpp"

namespace geodet {

namespace {

using nlohmann::json;

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> scalar_from_name(std::string_view name) {
  static const std::unordered_map<std::string_view, Scalar> kNames = {
      {"char", Scalar::Int8},      {"int8", Scalar::Int8},       {"uchar", Scalar::UInt8},
      {"uint8", Scalar::UInt8},    {"short", Scalar::Int16},     {"int16", Scalar::Int16},
      {"ushort", Scalar::UInt16},  {"uint16", Scalar::UInt16},   {"int", Scalar::Int32},
      {"int32", Scalar::Int32},    {"uint", Scalar::UInt32},     {"uint32", Scalar::UInt32},
      {"float", Scalar::Float32},  {"float32", Scalar::Float32}, {"double", Scalar::Float64},
      {"float64", Scalar::Float64}};
  auto it = kNames.find(name);
  if (it == kNames.end()) return std::nullopt;
  return it->second;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8: return 1;
    case Scalar::Int16:
    case Scalar::UInt16: return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

bool is_integral(Scalar s) { return s != Scalar::Float32 && s != Scalar::Float64; }

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void header_error(std::size_t line_no, const std::string& what) {
  throw ParseError("PLY header line " + std::to_string(line_no) + ": " + what);
}

Header parse_header(std::string_view bytes) {
  Header header;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_format = false;
  bool saw_end = false;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) {
      header_error(line_no + 1, "unterminated header (missing end_header)");
    }
    std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    auto tokens = split_ws(line);
    if (line_no == 1) {
      if (tokens.size() != 1 || tokens[0] != "ply") header_error(line_no, "missing 'ply' magic");
      continue;
    }
    if (tokens.empty()) continue;
    const auto& key = tokens[0];
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (tokens.size() != 3) header_error(line_no, "expected 'format <type> <version>'");
      if (tokens[2] != "1.0") header_error(line_no, "unsupported version '" + std::string(tokens[2]) + "'");
      if (tokens[1] == "ascii") {
        header.format = PlyFormat::Ascii;
      } else if (tokens[1] == "binary_little_endian") {
        header.format = PlyFormat::BinaryLittleEndian;
      } else {
        header_error(line_no, "unsupported format '" + std::string(tokens[1]) + "'");
      }
      saw_format = true;
    } else if (key == "element") {
      if (tokens.size() != 3) header_error(line_no, "expected 'element <name> <count>'");
      Element el;
      el.name = std::string(tokens[1]);
      const auto* first = tokens[2].data();
      const auto* last = first + tokens[2].size();
      auto [ptr, ec] = std::from_chars(first, last, el.count);
      if (ec != std::errc() || ptr != last) header_error(line_no, "invalid element count");
      header.elements.push_back(std::move(el));
    } else if (key == "property") {
      if (header.elements.empty()) header_error(line_no, "property before any element");
      Property prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        auto count_type = scalar_from_name(tokens[2]);
        auto item_type = scalar_from_name(tokens[3]);
        if (!count_type || !item_type || !is_integral(*count_type)) {
          header_error(line_no, "invalid list property types");
        }
        prop.is_list = true;
        prop.count_type = *count_type;
        prop.type = *item_type;
        prop.name = std::string(tokens[4]);
      } else if (tokens.size() == 3) {
        auto type = scalar_from_name(tokens[1]);
        if (!type) header_error(line_no, "unknown property type '" + std::string(tokens[1]) + "'");
        prop.type = *type;
        prop.name = std::string(tokens[2]);
      } else {
        header_error(line_no, "malformed property declaration");
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else if (key == "end_header") {
      saw_end = true;
      break;
    } else {
      header_error(line_no, "unknown keyword '" + std::string(key) + "'");
    }
  }
  if (line_no == 0) throw ParseError("PLY header line 1: empty input");
  if (!saw_end) header_error(line_no, "missing end_header");
  if (!saw_format) throw ParseError("PLY header: missing format line");
  header.body_offset = pos;
  return header;
}

// Sequential reader over the body. Both readers return values as double.
class AsciiReader {
 public:
  explicit AsciiReader(std::string_view body) : body_(body) {}

  bool next_token(std::string_view& tok) {
    while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
    if (pos_ >= body_.size()) return false;
    std::size_t start = pos_;
    while (pos_ < body_.size() && !std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
    tok = body_.substr(start, pos_ - start);
    return true;
  }

  double read(Scalar type, const std::string& element, std::size_t index) {
    std::string_view tok;
    if (!next_token(tok)) {
      throw TruncationError("PLY body truncated in element '" + element + "' at instance " +
                            std::to_string(index));
    }
    double value = 0.0;
    const char* first = tok.data();
    const char* last = first + tok.size();
    std::from_chars_result res{};
    if (is_integral(type)) {
      long long iv = 0;
      res = std::from_chars(first, last, iv);
      value = static_cast<double>(iv);
    } else if (type == Scalar::Float32) {
      // Parse at the declared width so shortest float text reads back exactly.
      float fv = 0.0f;
      res = std::from_chars(first, last, fv);
      value = fv;
      if (res.ec == std::errc::result_out_of_range) {
        throw ValidationError("PLY value out of range in element '" + element + "' at instance " +
                              std::to_string(index));
      }
    } else {
      res = std::from_chars(first, last, value);
      if (res.ec == std::errc::result_out_of_range) {
        throw ValidationError("PLY value out of range in element '" + element + "' at instance " +
                              std::to_string(index));
      }
    }
    if (res.ec != std::errc() || res.ptr != last) {
      throw ParseError("PLY body: invalid number '" + std::string(tok.substr(0, 32)) +
                       "' in element '" + element + "' at instance " + std::to_string(index));
    }
    return value;
  }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view body) : body_(body) {}

  std::size_t remaining() const { return body_.size() - pos_; }

  double read(Scalar type, const std::string& element, std::size_t index) {
    const std::size_t n = scalar_size(type);
    if (remaining() < n) {
      throw TruncationError("PLY body truncated in element '" + element + "' at instance " +
                            std::to_string(index));
    }
    const char* p = body_.data() + pos_;
    pos_ += n;
    switch (type) {
      case Scalar::Int8: return load_le<std::int8_t>(p);
      case Scalar::UInt8: return load_le<std::uint8_t>(p);
      case Scalar::Int16: return load_le<std::int16_t>(p);
      case Scalar::UInt16: return load_le<std::uint16_t>(p);
      case Scalar::Int32: return load_le<std::int32_t>(p);
      case Scalar::UInt32: return load_le<std::uint32_t>(p);
      case Scalar::Float32: return load_le<float>(p);
      case Scalar::Float64: return load_le<double>(p);
    }
    return 0.0;
  }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

template <typename Reader>
void read_instance(Reader& reader, const Element& el, std::size_t index, std::vector<double>& out) {
  out.clear();
  for (const auto& prop : el.properties) {
    if (prop.is_list) {
      const double count = reader.read(prop.count_type, el.name, index);
      if (count < 0 || count > 1e6) {
        throw ParseError("PLY body: invalid list length in element '" + el.name + "' at instance " +
                         std::to_string(index));
      }
      for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
        reader.read(prop.type, el.name, index);
      }
      out.push_back(0.0);
    } else {
      out.push_back(reader.read(prop.type, el.name, index));
    }
  }
}

struct VertexLayout {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
  Scalar color_type = Scalar::UInt8;
};

VertexLayout vertex_layout(const Element& el) {
  VertexLayout layout;
  for (std::size_t i = 0; i < el.properties.size(); ++i) {
    const auto& p = el.properties[i];
    const int idx = static_cast<int>(i);
    if (p.is_list) continue;
    if (p.name == "x") layout.x = idx;
    else if (p.name == "y") layout.y = idx;
    else if (p.name == "z") layout.z = idx;
    else if (p.name == "red") layout.r = idx;
    else if (p.name == "green") layout.g = idx;
    else if (p.name == "blue") layout.b = idx;
  }
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
    throw ParseError("PLY header: vertex element lacks x/y/z properties");
  }
  const int color_props = (layout.r >= 0) + (layout.g >= 0) + (layout.b >= 0);
  if (color_props != 0 && color_props != 3) {
    throw ParseError("PLY header: vertex colors need all of red/green/blue");
  }
  if (color_props == 3) {
    const Scalar t = el.properties[layout.r].type;
    if (el.properties[layout.g].type != t || el.properties[layout.b].type != t) {
      throw ParseError("PLY header: red/green/blue must share one type");
    }
    if (t != Scalar::UInt8 && t != Scalar::Float32 && t != Scalar::Float64) {
      throw ParseError("PLY header: colors must be uchar or float");
    }
    layout.color_type = t;
  }
  return layout;
}

template <typename Reader>
PointCloud read_body(Reader& reader, const Header& header) {
  std::vector<double> values;
  for (const auto& el : header.elements) {
    if (el.properties.empty() && el.count > 0) {
      throw ParseError("PLY header: element '" + el.name + "' declares no properties");
    }
    if (el.name != "vertex") {
      for (std::size_t i = 0; i < el.count; ++i) read_instance(reader, el, i, values);
      continue;
    }
    const VertexLayout layout = vertex_layout(el);
    if (el.count == 0) throw ValidationError("PLY vertex element is empty");
    if constexpr (std::is_same_v<Reader, BinaryReader>) {
      bool fixed = true;
      std::size_t stride = 0;
      for (const auto& p : el.properties) {
        fixed = fixed && !p.is_list;
        stride += scalar_size(p.type);
      }
      if (fixed && reader.remaining() / stride < el.count) {
        throw TruncationError("PLY body truncated: declared " + std::to_string(el.count) +
                              " vertices but only " + std::to_string(reader.remaining() / stride) +
                              " present");
      }
    }
    // Never trust the declared count for allocation before the data is seen.
    const std::size_t reserve = std::min<std::size_t>(el.count, 1u << 20);
    std::vector<double> xyz;
    std::vector<double> rgb;
    xyz.reserve(3 * reserve);
    const bool has_color = layout.r >= 0;
    if (has_color) rgb.reserve(3 * reserve);
    for (std::size_t i = 0; i < el.count; ++i) {
      read_instance(reader, el, i, values);
      for (int idx : {layout.x, layout.y, layout.z}) {
        const double v = values[idx];
        if (!std::isfinite(v)) {
          throw ValidationError("PLY vertex " + std::to_string(i) + " has a non-finite coordinate");
        }
        xyz.push_back(v);
      }
      if (has_color) {
        for (int idx : {layout.r, layout.g, layout.b}) {
          double c = values[idx];
          if (layout.color_type == Scalar::UInt8) c /= 255.0;
          if (!(c >= 0.0 && c <= 1.0)) {
            throw ValidationError("PLY vertex " + std::to_string(i) + " has a color outside [0, 1]");
          }
          rgb.push_back(c);
        }
      }
    }
    PointCloud cloud;
    const auto n = static_cast<Eigen::Index>(el.count);
    cloud.positions = Eigen::Map<const Points3>(xyz.data(), n, 3);
    if (has_color) {
      cloud.colors = Eigen::Map<const Points3>(rgb.data(), n, 3);
    } else {
      cloud.colors = Points3::Constant(n, 3, 0.5);
    }
    return cloud;
  }
  throw ParseError("PLY header: no vertex element");
}

// Shortest representation that reads back to the same float.
std::string format_float(float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::uint8_t quantize_color(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

Vec3 read_vec3(const json& j, const char* field) {
  const json& arr = j.at(field);
  if (!arr.is_array() || arr.size() != 3) {
    throw ValidationError(std::string("field '") + field + "' must be an array of 3 numbers");
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!arr[k].is_number()) {
      throw ValidationError(std::string("field '") + field + "' must be an array of 3 numbers");
    }
    v[k] = arr[k].get<double>();
  }
  return v;
}

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Box3D read_box(const json& j) {
  if (!j.is_object()) throw ValidationError("box entry must be an object");
  Box3D box;
  box.center = read_vec3(j, "center");
  box.size = read_vec3(j, "size");
  const json& cid = j.at("class_id");
  if (!cid.is_number_integer()) throw ValidationError("class_id must be an integer");
  const auto id = cid.get<long long>();
  if (id < 0 || id > (1 << 30)) throw ValidationError("class_id out of range: " + std::to_string(id));
  box.class_id = static_cast<int>(id);
  return box;
}

json box_json(const Box3D& b) {
  return json{{"center", vec3_json(b.center)}, {"size", vec3_json(b.size)}, {"class_id", b.class_id}};
}

std::vector<std::string> read_class_names(const json& doc) {
  const json& names = doc.at("class_names");
  if (!names.is_array()) throw ValidationError("class_names must be an array of strings");
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (!n.is_string()) throw ValidationError("class_names must be an array of strings");
    out.push_back(n.get<std::string>());
  }
  return out;
}

void validate_boxes(const std::vector<Box3D>& boxes, std::size_t class_count) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (b.class_id < 0 || static_cast<std::size_t>(b.class_id) >= class_count) {
      throw ValidationError("box " + std::to_string(i) + ": class_id " + std::to_string(b.class_id) +
                            " outside [0, " + std::to_string(class_count) + ")");
    }
    if (!b.center.allFinite() || !b.size.allFinite()) {
      throw ValidationError("box " + std::to_string(i) + ": non-finite geometry");
    }
    if ((b.size.array() <= 0.0).any()) {
      throw ValidationError("box " + std::to_string(i) + ": size must be positive on every axis");
    }
  }
}

// Wraps JSON parsing so that every malformed document surfaces as one of our
// structured errors.
template <typename F>
auto with_json(std::string_view text, const char* what, F&& body) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": invalid JSON: " + e.what());
  }
  try {
    if (!doc.is_object()) throw ValidationError(std::string(what) + ": top level must be an object");
    return body(doc);
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

void validate_point_cloud(const PointCloud& cloud) {
  if (cloud.positions.rows() == 0) throw ValidationError("point cloud is empty");
  if (cloud.colors.rows() != cloud.positions.rows()) {
    throw ValidationError("point cloud positions and colors differ in length");
  }
  for (Eigen::Index i = 0; i < cloud.positions.rows(); ++i) {
    if (!cloud.positions.row(i).allFinite()) {
      throw ValidationError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
    const auto c = cloud.colors.row(i).array();
    if (!((c >= 0.0).all() && (c <= 1.0).all())) {
      throw ValidationError("point " + std::to_string(i) + " has a color outside [0, 1]");
    }
  }
}

void validate_annotation(const SceneAnnotation& annotation) {
  validate_boxes(annotation.boxes, annotation.class_names.size());
}

void validate_labels(const SuperpointLabels& labels, std::size_t expected_n) {
  if (labels.ids.size() != expected_n) {
    throw ShapeError("superpoint labels cover " + std::to_string(labels.ids.size()) +
                     " points, expected " + std::to_string(expected_n));
  }
  if (labels.count < 1) throw ValidationError("superpoint labels are empty");
  std::vector<char> seen(static_cast<std::size_t>(labels.count), 0);
  for (std::size_t i = 0; i < labels.ids.size(); ++i) {
    const int id = labels.ids[i];
    if (id < 0 || id >= labels.count) {
      throw ValidationError("superpoint id " + std::to_string(id) + " at point " + std::to_string(i) +
                            " outside [0, " + std::to_string(labels.count) + ")");
    }
    seen[static_cast<std::size_t>(id)] = 1;
  }
  for (int m = 0; m < labels.count; ++m) {
    if (!seen[static_cast<std::size_t>(m)]) {
      throw ValidationError("superpoint " + std::to_string(m) + " owns no points");
    }
  }
}

SuperpointLabels densify_labels(const std::vector<long long>& raw) {
  SuperpointLabels labels;
  labels.ids.reserve(raw.size());
  std::unordered_map<long long, int> remap;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) {
      throw ValidationError("negative superpoint id " + std::to_string(raw[i]) + " at point " +
                            std::to_string(i));
    }
    auto [it, inserted] = remap.try_emplace(raw[i], labels.count);
    if (inserted) ++labels.count;
    labels.ids.push_back(it->second);
  }
  return labels;
}

PointCloud parse_ply(std::string_view bytes) {
  const Header header = parse_header(bytes);
  const std::string_view body = bytes.substr(header.body_offset);
  if (header.format == PlyFormat::Ascii) {
    AsciiReader reader(body);
    return read_body(reader, header);
  }
  BinaryReader reader(body);
  return read_body(reader, header);
}

std::string write_ply(const PointCloud& cloud, PlyFormat format) {
  validate_point_cloud(cloud);
  std::string out;
  out += "ply\n";
  out += format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  const auto n = cloud.positions.rows();
  if (format == PlyFormat::Ascii) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        out += format_float(static_cast<float>(cloud.positions(i, k)));
        out += ' ';
      }
      for (int k = 0; k < 3; ++k) {
        out += std::to_string(quantize_color(cloud.colors(i, k)));
        out += k < 2 ? ' ' : '\n';
      }
    }
    return out;
  }
  out.reserve(out.size() + static_cast<std::size_t>(n) * 15);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      float v = static_cast<float>(cloud.positions(i, k));
      char buf[4];
      std::memcpy(buf, &v, 4);
      if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + 4);
      out.append(buf, 4);
    }
    for (int k = 0; k < 3; ++k) out.push_back(static_cast<char>(quantize_color(cloud.colors(i, k))));
  }
  return out;
}

SceneAnnotation parse_annotations(std::string_view text) {
  return with_json(text, "annotation", [](const json& doc) {
    SceneAnnotation ann;
    ann.class_names = read_class_names(doc);
    const json& boxes = doc.at("boxes");
    if (!boxes.is_array()) throw ValidationError("annotation: boxes must be an array");
    for (const auto& b : boxes) ann.boxes.push_back(read_box(b));
    validate_annotation(ann);
    return ann;
  });
}

std::string write_annotations(const SceneAnnotation& annotation) {
  json boxes = json::array();
  for (const auto& b : annotation.boxes) boxes.push_back(box_json(b));
  json doc{{"class_names", annotation.class_names}, {"boxes", boxes}};
  return doc.dump(2) + "\n";
}

SuperpointLabels parse_superpoints(std::string_view text, std::size_t expected_n) {
  std::vector<long long> raw;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 1) {
      throw ParseError("superpoint labels line " + std::to_string(line_no) + ": expected one integer");
    }
    long long v = 0;
    const char* first = tokens[0].data();
    const char* last = first + tokens[0].size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw ParseError("superpoint labels line " + std::to_string(line_no) + ": invalid integer");
    }
    raw.push_back(v);
    if (raw.size() > expected_n) break;
  }
  if (raw.size() != expected_n) {
    throw ShapeError("superpoint labels: expected " + std::to_string(expected_n) +
                     " entries, got " + (raw.size() > expected_n ? "more" : std::to_string(raw.size())));
  }
  if (expected_n == 0) throw ValidationError("superpoint labels: no points");
  return densify_labels(raw);
}

std::string write_superpoints(const SuperpointLabels& labels) {
  std::string out;
  out.reserve(labels.ids.size() * 4);
  for (int id : labels.ids) {
    out += std::to_string(id);
    out += '\n';
  }
  return out;
}

std::vector<DetectionResult> parse_detections(std::string_view text) {
  return with_json(text, "detections", [](const json& doc) {
    std::vector<DetectionResult> out;
    const json& scenes = doc.at("scenes");
    if (!scenes.is_array()) throw ValidationError("detections: scenes must be an array");
    for (const auto& s : scenes) {
      DetectionResult det;
      det.scene = s.at("scene").get<std::string>();
      for (const auto& d : s.at("detections")) {
        Box3D box = read_box(d);
        const double score = d.at("score").get<double>();
        if (!(score >= 0.0 && score <= 1.0)) throw ValidationError("detection score outside [0, 1]");
        if (!box.center.allFinite() || !(box.size.array() > 0.0).all() || !box.size.allFinite()) {
          throw ValidationError("detection box has invalid geometry");
        }
        det.boxes.push_back(box);
        det.scores.push_back(score);
      }
      det.sort_by_score();
      out.push_back(std::move(det));
    }
    return out;
  });
}

std::string write_detections(const std::vector<DetectionResult>& detections) {
  json scenes = json::array();
  for (const auto& det : detections) {
    json items = json::array();
    for (std::size_t i = 0; i < det.boxes.size(); ++i) {
      json b = box_json(det.boxes[i]);
      b["score"] = det.scores[i];
      items.push_back(std::move(b));
    }
    scenes.push_back(json{{"scene", det.scene}, {"detections", std::move(items)}});
  }
  return json{{"scenes", std::move(scenes)}}.dump(1) + "\n";
}

GroundTruthSet parse_ground_truth(std::string_view text) {
  return with_json(text, "ground truth", [](const json& doc) {
    GroundTruthSet gt;
    gt.class_names = read_class_names(doc);
    const json& scenes = doc.at("scenes");
    if (!scenes.is_array()) throw ValidationError("ground truth: scenes must be an array");
    for (const auto& s : scenes) {
      SceneGroundTruth scene;
      scene.scene = s.at("scene").get<std::string>();
      for (const auto& b : s.at("boxes")) scene.boxes.push_back(read_box(b));
      validate_boxes(scene.boxes, gt.class_names.size());
      gt.scenes.push_back(std::move(scene));
    }
    return gt;
  });
}

std::string write_ground_truth(const GroundTruthSet& gt) {
  json scenes = json::array();
  for (const auto& s : gt.scenes) {
    json boxes = json::array();
    for (const auto& b : s.boxes) boxes.push_back(box_json(b));
    scenes.push_back(json{{"scene", s.scene}, {"boxes", std::move(boxes)}});
  }
  return json{{"class_names", gt.class_names}, {"scenes", std::move(scenes)}}.dump(1) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace geodet
