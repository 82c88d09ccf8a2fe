#include "medcap/core/image_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "medcap/core/error.hpp"

namespace medcap {

namespace {

Image from_mat(const cv::Mat& mat, const std::string& origin) {
    if (mat.empty()) throw_validation("cannot decode image: " + origin);
    cv::Mat m = mat;
    if (m.depth() == CV_16U) {
        cv::Mat tmp;
        m.convertTo(tmp, CV_8U, 1.0 / 257.0);
        m = tmp;
    } else if (m.depth() != CV_8U) {
        cv::Mat tmp;
        m.convertTo(tmp, CV_8U);
        m = tmp;
    }
    Image out;
    out.width = m.cols;
    out.height = m.rows;
    if (m.channels() == 1) {
        out.channels = 1;
        out.data.resize(out.pixel_count());
        for (int y = 0; y < m.rows; ++y) {
            std::memcpy(&out.data[static_cast<std::size_t>(y) * m.cols], m.ptr<std::uint8_t>(y),
                        static_cast<std::size_t>(m.cols));
        }
        return out;
    }
    if (m.channels() != 3 && m.channels() != 4) {
        throw_validation("unsupported channel count in image: " + origin);
    }
    // OpenCV stores BGR(A); swap to RGB while copying
    const int src_ch = m.channels();
    out.channels = 3;
    out.data.resize(out.pixel_count() * 3);
    for (int y = 0; y < m.rows; ++y) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(y);
        std::uint8_t* dst = &out.data[static_cast<std::size_t>(y) * m.cols * 3];
        for (int x = 0; x < m.cols; ++x) {
            dst[3 * x] = row[src_ch * x + 2];
            dst[3 * x + 1] = row[src_ch * x + 1];
            dst[3 * x + 2] = row[src_ch * x];
        }
    }
    return out;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& payload) {
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

// zlib container with stored deflate blocks; layout fixed by the format spec
// rather than by a compressor implementation.
std::vector<std::uint8_t> zlib_stored(const std::vector<std::uint8_t>& raw) {
    std::vector<std::uint8_t> z;
    z.reserve(raw.size() + raw.size() / 65535 * 5 + 16);
    z.push_back(0x78);
    z.push_back(0x01);
    std::size_t pos = 0;
    do {
        const std::size_t n = std::min<std::size_t>(raw.size() - pos, 65535);
        const bool last = pos + n == raw.size();
        z.push_back(last ? 1 : 0);
        z.push_back(static_cast<std::uint8_t>(n & 0xff));
        z.push_back(static_cast<std::uint8_t>((n >> 8) & 0xff));
        z.push_back(static_cast<std::uint8_t>(~n & 0xff));
        z.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos), raw.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
    } while (pos < raw.size());
    uLong adler = adler32(0L, Z_NULL, 0);
    adler = adler32(adler, raw.data(), static_cast<uInt>(raw.size()));
    put_be32(z, static_cast<std::uint32_t>(adler));
    return z;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    return from_mat(m, path.string());
}

Image load_mask(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    return from_mat(m, path.string());
}

Image decode_image(std::span<const std::uint8_t> bytes) {
    cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat m = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
    return from_mat(m, "<memory>");
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.empty()) throw_validation("cannot encode empty image");
    if (img.channels != 1 && img.channels != 3) throw_validation("png encoder expects 1 or 3 channels");

    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
    std::vector<std::uint8_t> raw;
    raw.reserve((row_bytes + 1) * static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        const std::uint8_t* row = &img.data[static_cast<std::size_t>(y) * row_bytes];
        raw.insert(raw.end(), row, row + row_bytes);
    }

    std::vector<std::uint8_t> out;
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.insert(out.end(), sig, sig + 8);

    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(img.width));
    put_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                       // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);               // gray / truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", zlib_stored(raw));
    put_chunk(out, "IEND", {});
    return out;
}

void save_png(const Image& img, const std::filesystem::path& path) {
    const auto bytes = encode_png(img);
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw_validation("cannot open for write: " + tmp.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw_validation("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace medcap
