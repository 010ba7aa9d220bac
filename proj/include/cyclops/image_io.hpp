#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "cyclops/grid.hpp"

namespace cyclops {

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Grid<Rgb>;

/// Reads an 8- or 16-bit PNG, PGM (P5) or PPM (P6) and converts it to
/// intensity in [0, 1] with fixed luma weights.
Image read_intensity_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG; values are clamped to [0, 1] and rounded.
void write_gray_png(const std::filesystem::path& path, const Image& image);
void write_gray_png(const std::filesystem::path& path, const Grid<std::uint8_t>& image);
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);

/// Binary PGM (P5), 8-bit.
void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& image);

std::uint8_t quantize_unit(double v);

}  // namespace cyclops
