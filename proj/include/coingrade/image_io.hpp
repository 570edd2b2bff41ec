#pragma once

#include <filesystem>

#include "coingrade/raster.hpp"

namespace coingrade {

// Thin decode/encode adapters at the module boundary; everything inside the
// pipeline works on ImageRgb8. Grayscale and paletted inputs are expanded
// to RGB, alpha is dropped.
ImageRgb8 read_image(const std::filesystem::path& path);  // by extension
ImageRgb8 read_png(const std::filesystem::path& path);
ImageRgb8 read_jpeg(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageRgb8& img);

}  // namespace coingrade
