#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "medcap/core/types.hpp"

namespace medcap {

/// 8-bit interleaved raster, 1 (gray) or 3 (RGB) channels, row-major.
/// Buffers are treated as immutable once built by the pipeline and are safe
/// to hand across worker threads.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    static Image make(int w, int h, int c, std::uint8_t fill = 0);

    bool empty() const { return width <= 0 || height <= 0; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }

    /// Pixels where any channel is nonzero.
    std::size_t count_nonzero() const;
};

Image crop(const Image& img, const BBox& box);

/// Separate deterministic resamplers; no SIMD or library paths so results are
/// bit-identical everywhere. Bilinear uses the half-pixel-center convention.
Image resize_bilinear(const Image& img, int out_w, int out_h);
Image resize_nearest(const Image& img, int out_w, int out_h);

Image to_rgb(const Image& img);
Image to_gray(const Image& img);

void fill_rect(Image& img, const BBox& box, std::uint8_t value);

/// Pixel-wise max, used to combine per-radiologist masks. Dimensions must match.
Image mask_union(const Image& a, const Image& b);

}  // namespace medcap
