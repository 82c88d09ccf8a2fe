#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "medcap/core/image.hpp"

namespace medcap {

/// Decode any common raster format (PNG, PPM/PGM, JPEG, BMP, TIFF) into an
/// 8-bit gray or RGB buffer.
Image load_image(const std::filesystem::path& path);

/// Load as single-channel; values are kept as stored, nonzero means set.
Image load_mask(const std::filesystem::path& path);

Image decode_image(std::span<const std::uint8_t> bytes);

/// Encode as PNG with stored (uncompressed) deflate blocks. The byte stream
/// is a pure function of the pixel content — no encoder version or platform
/// dependence — so these bytes are safe to feed into request digests.
std::vector<std::uint8_t> encode_png(const Image& img);

void save_png(const Image& img, const std::filesystem::path& path);

}  // namespace medcap
