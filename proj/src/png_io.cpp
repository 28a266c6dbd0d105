#include "dcq/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>

#include "dcq/binary_io.hpp"
#include "dcq/error.hpp"

namespace dcq {

RasterImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + msg);
  }
  const auto h = static_cast<int>(image.height);
  const auto w = static_cast<int>(image.width);
  std::vector<RgbPixel> px(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  return RasterImage(h, w, std::move(px));
}

void write_png(const std::filesystem::path& path, const RasterImage& img) {
  std::vector<std::uint8_t> buffer;
  buffer.reserve(img.size() * 3);
  for (const RgbPixel& p : img.pixels()) {
    buffer.push_back(p.r);
    buffer.push_back(p.g);
    buffer.push_back(p.b);
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer.data(), 0, nullptr)) {
    throw DataError("cannot encode PNG: " + std::string(image.message));
  }
  Bytes encoded(size);
  if (!png_image_write_to_memory(&image, encoded.data(), &size, 0, buffer.data(), 0, nullptr)) {
    throw DataError("cannot encode PNG: " + std::string(image.message));
  }
  encoded.resize(size);
  write_file(path, encoded);
}

std::vector<RasterImage> load_png_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no PNG files in " + dir.string());
  std::vector<RasterImage> images;
  images.reserve(files.size());
  for (const auto& f : files) {
    images.push_back(read_png(f));
    if (images.back().height() != images.front().height() || images.back().width() != images.front().width()) {
      throw DataError(f.string() + " differs in size from " + files.front().string());
    }
  }
  return images;
}

}  // namespace dcq
