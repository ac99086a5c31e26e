#pragma once

#include <filesystem>

#include "csparts/grid.hpp"

namespace csparts {

/// Reads a binary PPM (P6) or PGM (P5) with maxval 255. Byte v maps to v/255.
Image load_image(const std::filesystem::path& path);

/// Writes P6 for 3-channel and P5 for 1-channel images; values are
/// quantized with round(255 * v).
void write_image(const std::filesystem::path& path, const Image& img);

/// Writes a grid with values in [0,1] as an 8-bit PGM, quantized round(255 * v).
void write_pgm(const std::filesystem::path& path, const Grid2D& grid);

}  // namespace csparts
