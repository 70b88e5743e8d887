#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bootleg/image.hpp"

namespace bootleg::io {

std::vector<std::uint8_t> readFile(const std::filesystem::path& path);
void writeFile(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string readText(const std::filesystem::path& path);
void writeText(const std::filesystem::path& path, std::string_view text);

/// PNG or JPEG (sniffed from the leading bytes). Channels in [0,255].
image::RgbImage decodeImage(std::span<const std::uint8_t> bytes);
image::RgbImage readImage(const std::filesystem::path& path);

/// 8-bit RGB PNG; channel values in [0,255] are rounded and clamped.
std::vector<std::uint8_t> encodePng(const image::RgbImage& img);
void writePng(const std::filesystem::path& path, const image::RgbImage& img);

/// Gray [0,1] replicated to three [0,255] channels.
image::RgbImage grayToRgb(const image::GrayImage& gray);

}  // namespace bootleg::io
