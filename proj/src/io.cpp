#include "ogs/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ogs {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(bytes, 4);
}

void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char bytes[4];
  if (!is.read(reinterpret_cast<char*>(bytes), 4)) {
    throw std::runtime_error(path + ": truncated file");
  }
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

float get_f32(std::istream& is, const std::string& path) {
  return std::bit_cast<float>(get_u32(is, path));
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream os(path, mode);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  return os;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream is(path, mode);
  if (!is) throw std::runtime_error(path + ": cannot open for reading");
  return is;
}

void check_magic(std::istream& is, const char* magic, const std::string& path) {
  char got[4];
  if (!is.read(got, 4) || !std::equal(got, got + 4, magic)) {
    throw std::runtime_error(path + ": bad magic, expected " + std::string(magic, 4));
  }
}

void write_grid_file(const ScalarGrid& map, const char* magic, const std::string& path) {
  auto os = open_out(path, std::ios::binary);
  os.write(magic, 4);
  put_u32(os, static_cast<std::uint32_t>(map.cols()));
  put_u32(os, static_cast<std::uint32_t>(map.rows()));
  for (int y = 0; y < map.rows(); ++y) {
    for (int x = 0; x < map.cols(); ++x) put_f32(os, map(y, x));
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

ScalarGrid read_grid_file(const char* magic, const std::string& path) {
  auto is = open_in(path, std::ios::binary);
  check_magic(is, magic, path);
  const std::uint32_t width = get_u32(is, path);
  const std::uint32_t height = get_u32(is, path);
  ScalarGrid map(height, width);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) map(y, x) = get_f32(is, path);
  }
  return map;
}

// Enough significant digits to round-trip binary32 through text.
std::string format_float(float v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

}  // namespace

void write_scene(const GaussianScene& scene, const std::string& path) {
  auto os = open_out(path, std::ios::binary);
  os.write("OGS1", 4);
  put_u32(os, static_cast<std::uint32_t>(scene.size()));
  for (const LabeledGaussian& g : scene.gaussians()) {
    for (int i = 0; i < 3; ++i) put_f32(os, g.position[i]);
    for (int i = 0; i < 3; ++i) put_f32(os, g.scale[i]);
    put_f32(os, g.rotation.w());
    put_f32(os, g.rotation.x());
    put_f32(os, g.rotation.y());
    put_f32(os, g.rotation.z());
    put_f32(os, g.opacity);
    for (int i = 0; i < 3; ++i) put_f32(os, g.color[i]);
    put_u32(os, g.label);
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

GaussianScene read_scene(const std::string& path, std::size_t max_labels) {
  auto is = open_in(path, std::ios::binary);
  check_magic(is, "OGS1", path);
  const std::uint32_t count = get_u32(is, path);
  std::vector<LabeledGaussian> batch(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    LabeledGaussian& g = batch[i];
    for (int j = 0; j < 3; ++j) g.position[j] = get_f32(is, path);
    for (int j = 0; j < 3; ++j) g.scale[j] = get_f32(is, path);
    const float w = get_f32(is, path);
    const float x = get_f32(is, path);
    const float y = get_f32(is, path);
    const float z = get_f32(is, path);
    g.rotation = Eigen::Quaternionf(w, x, y, z);
    g.opacity = get_f32(is, path);
    for (int j = 0; j < 3; ++j) g.color[j] = get_f32(is, path);
    g.label = get_u32(is, path);
  }
  GaussianScene scene(static_cast<std::uint32_t>(max_labels));
  scene.add_gaussians(batch);
  return scene;
}

void write_label_map(const LabelMap& map, const std::string& path) {
  auto os = open_out(path, std::ios::binary);
  os.write("OGLM", 4);
  put_u32(os, static_cast<std::uint32_t>(map.width()));
  put_u32(os, static_cast<std::uint32_t>(map.height()));
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) put_u32(os, map.labels(y, x));
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

LabelMap read_label_map(const std::string& path) {
  auto is = open_in(path, std::ios::binary);
  check_magic(is, "OGLM", path);
  const std::uint32_t width = get_u32(is, path);
  const std::uint32_t height = get_u32(is, path);
  LabelMap map(static_cast<int>(width), static_cast<int>(height));
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) map.labels(y, x) = get_u32(is, path);
  }
  return map;
}

void write_confidence_map(const ScalarGrid& map, const std::string& path) {
  write_grid_file(map, "OGCM", path);
}

ScalarGrid read_confidence_map(const std::string& path) { return read_grid_file("OGCM", path); }

void write_depth_map(const ScalarGrid& map, const std::string& path) {
  write_grid_file(map, "OGDM", path);
}

ScalarGrid read_depth_map(const std::string& path) { return read_grid_file("OGDM", path); }

void write_ppm(const RgbImage& image, const std::string& path) {
  auto os = open_out(path, std::ios::binary);
  os << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Eigen::Vector3f c = image.at(x, y);
      for (int i = 0; i < 3; ++i) {
        const float v = std::clamp(c[i], 0.0f, 1.0f);
        os.put(static_cast<char>(std::lround(v * 255.0f)));
      }
    }
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

RgbImage read_ppm(const std::string& path) {
  auto is = open_in(path, std::ios::binary);
  std::string magic;
  is >> magic;
  if (magic != "P6") throw std::runtime_error(path + ": not a binary PPM");
  int width = 0, height = 0, maxval = 0;
  is >> width >> height >> maxval;
  if (!is || width <= 0 || height <= 0) throw std::runtime_error(path + ": bad PPM header");
  if (maxval != 255) throw std::runtime_error(path + ": unsupported PPM maxval");
  is.get();  // single whitespace after header
  RgbImage image(width, height);
  std::vector<char> row(static_cast<std::size_t>(width) * 3);
  for (int y = 0; y < height; ++y) {
    if (!is.read(row.data(), static_cast<std::streamsize>(row.size()))) {
      throw std::runtime_error(path + ": truncated PPM data");
    }
    for (int x = 0; x < width; ++x) {
      for (int i = 0; i < 3; ++i) {
        const auto byte = static_cast<unsigned char>(row[3 * x + i]);
        const float v = static_cast<float>(byte) / 255.0f;
        if (i == 0) image.r(y, x) = v;
        if (i == 1) image.g(y, x) = v;
        if (i == 2) image.b(y, x) = v;
      }
    }
  }
  return image;
}

void write_trajectory(std::span<const Pose> world_to_camera, const std::string& path) {
  auto os = open_out(path, std::ios::out);
  for (const Pose& pose : world_to_camera) {
    const Pose cam_to_world = pose.inverse();
    const Eigen::Vector3f& t = cam_to_world.translation;
    const Eigen::Quaternionf& q = cam_to_world.rotation;
    os << format_float(t.x()) << " " << format_float(t.y()) << " " << format_float(t.z()) << " "
       << format_float(q.x()) << " " << format_float(q.y()) << " " << format_float(q.z()) << " "
       << format_float(q.w()) << "\n";
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

std::vector<Pose> read_trajectory(const std::string& path) {
  auto is = open_in(path, std::ios::in);
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    float tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error(path + ": bad trajectory line " + std::to_string(line_no));
    }
    Pose cam_to_world;
    cam_to_world.translation = {tx, ty, tz};
    cam_to_world.rotation = Eigen::Quaternionf(qw, qx, qy, qz).normalized();
    poses.push_back(cam_to_world.inverse());
  }
  return poses;
}

void write_detections(std::span<const Detection> detections, const std::string& path) {
  auto os = open_out(path, std::ios::out);
  for (const Detection& d : detections) {
    os << d.class_name << " " << format_float(d.score) << " " << format_float(d.x0) << " "
       << format_float(d.y0) << " " << format_float(d.x1) << " " << format_float(d.y1) << "\n";
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

std::vector<Detection> read_detections(const std::string& path) {
  auto is = open_in(path, std::ios::in);
  std::vector<Detection> detections;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Detection d;
    if (!(ls >> d.class_name >> d.score >> d.x0 >> d.y0 >> d.x1 >> d.y1)) {
      throw std::runtime_error(path + ": bad detection line " + std::to_string(line_no));
    }
    detections.push_back(std::move(d));
  }
  return detections;
}

void write_class_table(const LabelClassTable& table, const std::string& path) {
  auto os = open_out(path, std::ios::out);
  for (const auto& [label, entry] : table.entries) {
    os << label << " " << entry.class_name << " " << format_float(entry.score) << "\n";
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

LabelClassTable read_class_table(const std::string& path) {
  auto is = open_in(path, std::ios::in);
  LabelClassTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::uint32_t label;
    ClassEntry entry;
    if (!(ls >> label >> entry.class_name >> entry.score)) {
      throw std::runtime_error(path + ": bad table line " + std::to_string(line_no));
    }
    table.entries[label] = std::move(entry);
  }
  return table;
}

}  // namespace ogs
