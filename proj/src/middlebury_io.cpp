#include "cyclops/middlebury_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "cyclops/error.hpp"
#include "cyclops/image_io.hpp"

namespace cyclops {

namespace fs = std::filesystem;

const char* to_string(View v) {
  switch (v) {
    case View::Left: return "left";
    case View::Right: return "right";
    case View::Cyclopean: return "cyclopean";
  }
  return "unknown";
}

double DisparityMap::known_fraction() const {
  if (values.empty()) return 0.0;
  const auto known = std::count_if(values.data().begin(), values.data().end(),
                                   [](double d) { return is_known(d); });
  return static_cast<double>(known) / static_cast<double>(values.size());
}

// PFM ---------------------------------------------------------------------

namespace {

class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t position() const { return pos_; }

  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\n' || c == '\r' || c == '\t';
  }

  void skip_space() {
    while (!at_end() && is_space(bytes_[pos_])) ++pos_;
  }

  std::string token() {
    skip_space();
    std::string out;
    while (!at_end() && !is_space(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
    return out;
  }

  /// Consumes exactly one whitespace byte; the PFM payload starts right after.
  bool single_space() {
    if (at_end() || !is_space(bytes_[pos_])) return false;
    // Tolerate CRLF line endings.
    if (bytes_[pos_] == '\r' && pos_ + 1 < bytes_.size() && bytes_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    return true;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
T parse_number(const std::string& s, const char* what) {
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw Error(ErrorCode::Parse, std::string("cannot parse ") + what + " from '" + s + "'");
  }
  return value;
}

double parse_double(const std::string& s, const char* what) {
  // libstdc++ 11 has floating from_chars, but keep strtod for portability of
  // forms like "-1.0".
  if (s.empty()) throw Error(ErrorCode::Parse, std::string("empty ") + what);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw Error(ErrorCode::Parse, std::string("cannot parse ") + what + " from '" + s + "'");
  }
  return v;
}

float load_float(const std::uint8_t* p, bool little_endian) {
  std::uint32_t bits = 0;
  if (little_endian) {
    bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
  } else {
    bits = std::uint32_t{p[3]} | (std::uint32_t{p[2]} << 8) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[0]} << 24);
  }
  return std::bit_cast<float>(bits);
}

void store_float(std::vector<std::uint8_t>& out, float v, bool little_endian) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  std::uint8_t b[4] = {static_cast<std::uint8_t>(bits & 0xff),
                       static_cast<std::uint8_t>((bits >> 8) & 0xff),
                       static_cast<std::uint8_t>((bits >> 16) & 0xff),
                       static_cast<std::uint8_t>((bits >> 24) & 0xff)};
  if (little_endian) {
    out.insert(out.end(), b, b + 4);
  } else {
    out.insert(out.end(), {b[3], b[2], b[1], b[0]});
  }
}

}  // namespace

DisparityMap parse_pfm(std::span<const std::uint8_t> bytes, View view) {
  ByteCursor cur(bytes);
  const std::string magic = cur.token();
  if (magic == "PF") {
    throw Error(ErrorCode::InvalidArgument, "3-channel PFM cannot carry a disparity map");
  }
  if (magic != "Pf") throw Error(ErrorCode::BadMagic, "not a PFM file (magic '" + magic + "')");

  const int width = parse_number<int>(cur.token(), "PFM width");
  const int height = parse_number<int>(cur.token(), "PFM height");
  const double scale = parse_double(cur.token(), "PFM scale");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::Parse, "PFM dimensions must be positive");
  if (scale == 0.0) throw Error(ErrorCode::Parse, "PFM scale must be non-zero");
  if (!cur.single_space()) throw Error(ErrorCode::Parse, "PFM header not terminated");

  const bool little_endian = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t need = 4 * count;
  const std::size_t have = bytes.size() - cur.position();
  if (have < need) {
    throw Error(ErrorCode::Truncated, "PFM payload has " + std::to_string(have) + " bytes, expected " +
                                          std::to_string(need));
  }

  DisparityMap map{view, Grid<double>(width, height)};
  const std::uint8_t* p = bytes.data() + cur.position();
  for (int file_row = 0; file_row < height; ++file_row) {
    const int y = height - 1 - file_row;
    for (int x = 0; x < width; ++x, p += 4) {
      const double v = load_float(p, little_endian);
      map.values(x, y) = std::isfinite(v) ? v : kUnknownDisparity;
    }
  }
  return map;
}

std::vector<std::uint8_t> write_pfm(const DisparityMap& map) { return write_pfm(map, -1.0); }

std::vector<std::uint8_t> write_pfm(const DisparityMap& map, double scale) {
  if (map.width() <= 0 || map.height() <= 0) {
    throw Error(ErrorCode::InvalidArgument, "cannot encode an empty disparity map");
  }
  if (scale == 0.0 || !std::isfinite(scale)) {
    throw Error(ErrorCode::InvalidArgument, "PFM scale must be finite and non-zero");
  }
  for (double v : map.values.data()) {
    if (!std::isfinite(v) && v != kUnknownDisparity) {
      throw Error(ErrorCode::InvalidArgument, "non-finite value other than the unknown sentinel");
    }
  }
  std::ostringstream header;
  header << "Pf\n" << map.width() << ' ' << map.height() << '\n';
  if (scale == -1.0) {
    header << "-1.0\n";
  } else {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f\n", scale);
    header << buf;
  }
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + 4 * map.values.size());
  const bool little_endian = scale < 0.0;
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      store_float(out, static_cast<float>(map.values(x, y)), little_endian);
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename onto " + path.string() + ": " + ec.message());
}

void write_file_atomic(const fs::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DisparityMap read_pfm_file(const fs::path& path, View view) {
  const auto bytes = read_file_bytes(path);
  return parse_pfm(bytes, view);
}

void write_pfm_file(const fs::path& path, const DisparityMap& map) {
  write_file_atomic(path, write_pfm(map));
}

// calib.txt ---------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

struct Intrinsics {
  double f = 0, cx = 0, cy = 0;
};

Intrinsics parse_camera_matrix(const std::string& key, const std::string& value) {
  if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
    throw Error(ErrorCode::Parse, key + " is not a bracketed matrix");
  }
  std::string body = value.substr(1, value.size() - 2);
  std::replace(body.begin(), body.end(), ';', ' ');
  std::istringstream in(body);
  std::vector<double> m;
  std::string tok;
  while (in >> tok) m.push_back(parse_double(tok, key.c_str()));
  if (m.size() != 9) throw Error(ErrorCode::Parse, key + " must have 9 entries");
  if (m[0] <= 0.0 || m[4] <= 0.0) throw Error(ErrorCode::Parse, key + " has non-positive focal length");
  return {m[0], m[2], m[5]};
}

}  // namespace

CalibParseResult parse_calib_with_warnings(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
  }
  auto need = [&kv](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::MissingKey, std::string("calib is missing '") + key + "='");
    return it->second;
  };

  CalibParseResult result;
  const Intrinsics cam0 = parse_camera_matrix("cam0", need("cam0"));
  const Intrinsics cam1 = parse_camera_matrix("cam1", need("cam1"));
  CameraRig& rig = result.rig;
  rig.focal_px = cam0.f;
  rig.cx = cam0.cx;
  rig.cy = cam0.cy;
  rig.doffs = parse_double(need("doffs"), "doffs");
  rig.baseline = parse_double(need("baseline"), "baseline");
  rig.width = parse_number<int>(need("width"), "width");
  rig.height = parse_number<int>(need("height"), "height");
  rig.ndisp = parse_number<int>(need("ndisp"), "ndisp");
  if (std::abs(cam0.f - cam1.f) > 1e-6 * std::abs(cam0.f)) {
    result.warnings.push_back("cam0/cam1 focal lengths differ; using cam0");
  }
  rig.validate();
  return result;
}

CameraRig parse_calib(std::string_view text) { return parse_calib_with_warnings(text).rig; }

std::string format_calib(const CameraRig& rig) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "cam0=[" << num(rig.focal_px) << " 0 " << num(rig.cx) << "; 0 " << num(rig.focal_px) << ' '
      << num(rig.cy) << "; 0 0 1]\n";
  out << "cam1=[" << num(rig.focal_px) << " 0 " << num(rig.cx + rig.doffs) << "; 0 " << num(rig.focal_px)
      << ' ' << num(rig.cy) << "; 0 0 1]\n";
  out << "doffs=" << num(rig.doffs) << '\n';
  out << "baseline=" << num(rig.baseline) << '\n';
  out << "width=" << rig.width << '\n';
  out << "height=" << rig.height << '\n';
  out << "ndisp=" << rig.ndisp << '\n';
  return out.str();
}

// Scenes ------------------------------------------------------------------

namespace {

std::optional<fs::path> find_image(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".pgm", ".ppm"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

void require_same_size(int w, int h, int ow, int oh, const std::string& what) {
  if (w != ow || h != oh) {
    throw Error(ErrorCode::DimensionMismatch, what + " is " + std::to_string(ow) + "x" + std::to_string(oh) +
                                                  ", expected " + std::to_string(w) + "x" + std::to_string(h));
  }
}

}  // namespace

ScenePair load_scene(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  const auto im0 = find_image(dir, "im0");
  const auto im1 = find_image(dir, "im1");
  if (!im0 || !im1) throw Error(ErrorCode::Io, "scene " + dir.string() + " lacks im0/im1");
  const fs::path calib_path = dir / "calib.txt";
  if (!fs::exists(calib_path)) throw Error(ErrorCode::Io, "scene " + dir.string() + " lacks calib.txt");

  ScenePair scene;
  scene.name = dir.filename().string();
  if (scene.name.empty()) scene.name = dir.parent_path().filename().string();
  scene.left_image = read_intensity_image(*im0);
  scene.right_image = read_intensity_image(*im1);
  const auto calib_bytes = read_file_bytes(calib_path);
  scene.rig = parse_calib(std::string_view(reinterpret_cast<const char*>(calib_bytes.data()), calib_bytes.size()));

  const int w = scene.left_image.width();
  const int h = scene.left_image.height();
  require_same_size(w, h, scene.right_image.width(), scene.right_image.height(), "im1");
  require_same_size(w, h, scene.rig.width, scene.rig.height, "calib extents");
  if (fs::exists(dir / "disp0.pfm")) {
    scene.gt_left = read_pfm_file(dir / "disp0.pfm", View::Left);
    require_same_size(w, h, scene.gt_left->width(), scene.gt_left->height(), "disp0.pfm");
  }
  if (fs::exists(dir / "disp1.pfm")) {
    scene.gt_right = read_pfm_file(dir / "disp1.pfm", View::Right);
    require_same_size(w, h, scene.gt_right->width(), scene.gt_right->height(), "disp1.pfm");
  }
  return scene;
}

void write_scene(const fs::path& dir, const ScenePair& scene) {
  fs::create_directories(dir);
  write_gray_png(dir / "im0.png", scene.left_image);
  write_gray_png(dir / "im1.png", scene.right_image);
  write_file_atomic(dir / "calib.txt", format_calib(scene.rig));
  if (scene.gt_left) write_pfm_file(dir / "disp0.pfm", *scene.gt_left);
  if (scene.gt_right) write_pfm_file(dir / "disp1.pfm", *scene.gt_right);
}

ScenePair downsample_scene(const ScenePair& scene, int factor) {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  if (factor == 1) return scene;
  const int w = scene.width() / factor;
  const int h = scene.height() / factor;
  if (w < 1 || h < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor larger than the image");
  const double area = double(factor) * double(factor);
  auto shrink = [&](const Image& src) {
    Image out(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double sum = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) sum += src(x * factor + dx, y * factor + dy);
        }
        out(x, y) = sum / area;
      }
    }
    return out;
  };
  auto subsample = [&](const DisparityMap& src) {
    DisparityMap out{src.view, Grid<double>(w, h, kUnknownDisparity)};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d = src.values(x * factor, y * factor);
        if (is_known(d)) out.values(x, y) = d / factor;
      }
    }
    return out;
  };

  ScenePair out;
  out.name = scene.name;
  out.left_image = shrink(scene.left_image);
  out.right_image = shrink(scene.right_image);
  if (scene.gt_left) out.gt_left = subsample(*scene.gt_left);
  if (scene.gt_right) out.gt_right = subsample(*scene.gt_right);
  out.rig = scene.rig;
  out.rig.focal_px /= factor;
  out.rig.cx /= factor;
  out.rig.cy /= factor;
  out.rig.doffs /= factor;
  out.rig.width = w;
  out.rig.height = h;
  out.rig.ndisp = (scene.rig.ndisp + factor - 1) / factor;
  return out;
}

}  // namespace cyclops
