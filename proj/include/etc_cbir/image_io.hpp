#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "etc_cbir/raster.hpp"

namespace etc_cbir {

enum class ImageFormat { png, jpeg, unknown };

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept;

struct DecodedImage {
  Raster raster;
  bool lossy = false;  // true when the source was JPEG
};

/// Decodes PNG or JPEG bytes to 8-bit RGB. Grayscale is expanded to three
/// identical channels, 16-bit PNG is reduced to 8 bits and alpha is dropped.
DecodedImage decode_image(std::span<const std::uint8_t> bytes);

Raster load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Raster& img);
void save_png(const Raster& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Image files (png/jpg/jpeg, case-insensitive) directly inside `dir`, sorted
/// by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace etc_cbir
