#pragma once

#include <filesystem>
#include <vector>

#include "dcq/color.hpp"

namespace dcq {

/// Reads any 8/16-bit PNG as 8-bit RGB (alpha dropped, gray expanded).
RasterImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& img);

/// Every *.png in `dir`, in lexicographic filename order. All must share one size.
std::vector<RasterImage> load_png_directory(const std::filesystem::path& dir);

}  // namespace dcq
