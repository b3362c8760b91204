#pragma once

#include <filesystem>

#include "chromacode/image.hpp"

namespace chromacode::io {

/// Reads an 8- or 16-bit PNG (gray, gray+alpha, RGB, RGBA or palette) into
/// [0, 1] samples. Alpha is discarded; gray is replicated to all channels.
RgbImage read_png(const std::filesystem::path& path);

/// Writes an RGB PNG after clamping to [0, 1] and rounding to the bit depth.
void write_png(const std::filesystem::path& path, const RgbImage& img, int bit_depth = 8);
void write_png(const std::filesystem::path& path, const Image& gray, int bit_depth = 8);

/// Portable FloatMap, little-endian (negative scale), bottom-to-top rows.
void write_pfm(const std::filesystem::path& path, const RgbImage& img);
void write_pfm(const std::filesystem::path& path, const Image& gray);
RgbImage read_pfm_rgb(const std::filesystem::path& path);
Image read_pfm_gray(const std::filesystem::path& path);

}  // namespace chromacode::io
