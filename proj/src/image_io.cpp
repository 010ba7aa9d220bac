#include "cyclops/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cyclops/error.hpp"
#include "cyclops/middlebury_io.hpp"

namespace cyclops {

namespace fs = std::filesystem;

namespace {

double intensity(std::uint16_t r, std::uint16_t g, std::uint16_t b, double maxval) {
  // Gray pixels map straight to v / maxval so 8-bit round trips are exact.
  if (r == g && g == b) return r / maxval;
  return (kLumaR * r + kLumaG * g + kLumaB * b) / maxval;
}

Image read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::Io, "cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::Io, "cannot decode PNG " + path.string() + ": " + img.message);
  }
  const int w = static_cast<int>(img.width);
  const int h = static_cast<int>(img.height);
  Image out(w, h);
  const std::uint8_t* p = buf.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, p += 3) out(x, y) = intensity(p[0], p[1], p[2], 255.0);
  }
  return out;
}

Image read_pnm(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto token = [&]() {
    std::string t;
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      t.push_back(static_cast<char>(bytes[pos++]));
    }
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6") throw Error(ErrorCode::BadMagic, "unsupported PNM " + path.string());
  const int channels = magic == "P5" ? 1 : 3;
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "bad PNM header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorCode::Parse, "bad PNM header in " + path.string());
  }
  ++pos;  // single whitespace before raster
  const int bps = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * h * channels * bps;
  if (pos + need > bytes.size()) throw Error(ErrorCode::Truncated, "PNM raster truncated: " + path.string());
  const std::uint8_t* p = bytes.data() + pos;
  auto sample = [&]() -> std::uint16_t {
    std::uint16_t v = bps == 2 ? static_cast<std::uint16_t>((p[0] << 8) | p[1]) : p[0];
    p += bps;
    return v;
  };
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (channels == 1) {
        out(x, y) = sample() / static_cast<double>(maxval);
      } else {
        const auto r = sample();
        const auto g = sample();
        const auto b = sample();
        out(x, y) = intensity(r, g, b, maxval);
      }
    }
  }
  return out;
}

void write_png_buffer(const fs::path& path, int w, int h, png_uint_32 format, const void* data) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::Io, std::string("PNG encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::Io, std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  write_file_atomic(path, out);
}

}  // namespace

std::uint8_t quantize_unit(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

Image read_intensity_image(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") return read_png(path);
  return read_pnm(path);
}

void write_gray_png(const fs::path& path, const Image& image) {
  Grid<std::uint8_t> q(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) q.data()[i] = quantize_unit(image.data()[i]);
  write_gray_png(path, q);
}

void write_gray_png(const fs::path& path, const Grid<std::uint8_t>& image) {
  write_png_buffer(path, image.width(), image.height(), PNG_FORMAT_GRAY, image.data().data());
}

void write_rgb_png(const fs::path& path, const RgbImage& image) {
  static_assert(sizeof(Rgb) == 3);
  write_png_buffer(path, image.width(), image.height(), PNG_FORMAT_RGB, image.data().data());
}

void write_pgm(const fs::path& path, const Grid<std::uint8_t>& image) {
  std::string header = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.data().begin(), image.data().end());
  write_file_atomic(path, out);
}

}  // namespace cyclops
