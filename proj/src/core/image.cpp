#include "medcap/core/image.hpp"

#include <algorithm>
#include <cmath>

#include "medcap/core/error.hpp"

namespace medcap {

Image Image::make(int w, int h, int c, std::uint8_t fill) {
    Image img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill);
    return img;
}

std::size_t Image::count_nonzero() const {
    std::size_t n = 0;
    const std::size_t px = pixel_count();
    for (std::size_t i = 0; i < px; ++i) {
        for (int c = 0; c < channels; ++c) {
            if (data[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)] != 0) {
                ++n;
                break;
            }
        }
    }
    return n;
}

Image crop(const Image& img, const BBox& box) {
    if (!box.within(img.width, img.height)) throw_validation("crop box outside image extent");
    Image out = Image::make(box.width(), box.height(), img.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(box.width()) * static_cast<std::size_t>(img.channels);
    for (int y = 0; y < box.height(); ++y) {
        const std::uint8_t* src = &img.data[((static_cast<std::size_t>(y + box.y0) * img.width) + box.x0) *
                                            static_cast<std::size_t>(img.channels)];
        std::copy(src, src + row_bytes, &out.data[static_cast<std::size_t>(y) * row_bytes]);
    }
    return out;
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (img.empty() || out_w <= 0 || out_h <= 0) throw_validation("resize on empty image or non-positive target");
    Image out = Image::make(out_w, out_h, img.channels);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        const double fy = std::clamp(src_y, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const double fx = std::clamp(src_x, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
                const double bottom = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
                const double v = top * (1.0 - wy) + bottom * wy;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

Image resize_nearest(const Image& img, int out_w, int out_h) {
    if (img.empty() || out_w <= 0 || out_h <= 0) throw_validation("resize on empty image or non-positive target");
    Image out = Image::make(out_w, out_h, img.channels);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const int src_y = std::min(static_cast<int>((y + 0.5) * sy), img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            const int src_x = std::min(static_cast<int>((x + 0.5) * sx), img.width - 1);
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(src_x, src_y, c);
        }
    }
    return out;
}

Image to_rgb(const Image& img) {
    if (img.channels == 3) return img;
    Image out = Image::make(img.width, img.height, 3);
    const std::size_t px = img.pixel_count();
    for (std::size_t i = 0; i < px; ++i) {
        const std::uint8_t v = img.data[i];
        out.data[3 * i] = v;
        out.data[3 * i + 1] = v;
        out.data[3 * i + 2] = v;
    }
    return out;
}

Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image out = Image::make(img.width, img.height, 1);
    const std::size_t px = img.pixel_count();
    for (std::size_t i = 0; i < px; ++i) {
        // integer Rec.601 luma
        const int r = img.data[3 * i];
        const int g = img.data[3 * i + 1];
        const int b = img.data[3 * i + 2];
        out.data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
    }
    return out;
}

void fill_rect(Image& img, const BBox& box, std::uint8_t value) {
    if (!box.within(img.width, img.height)) throw_validation("fill_rect box outside image extent");
    for (int y = box.y0; y <= box.y1; ++y) {
        for (int x = box.x0; x <= box.x1; ++x) {
            for (int c = 0; c < img.channels; ++c) img.at(x, y, c) = value;
        }
    }
}

Image mask_union(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != 1 || b.channels != 1) {
        throw_validation("mask_union dimension mismatch");
    }
    Image out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (a.data[i] != 0 || b.data[i] != 0) ? 255 : 0;
    }
    return out;
}

}  // namespace medcap
