#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "exsclaim/error.hpp"
#include "exsclaim/geometry.hpp"

namespace exsclaim {

/// 8-bit raster, row-major, 1 (gray) or 3 (RGB) interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

    bool empty() const { return width <= 0 || height <= 0; }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(std::size_t(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(std::size_t(y) * width + x) * channels + c];
    }

    void fill_rect(const BoundingBox& b, std::uint8_t value) {
        for (int y = std::max(0, b.y0); y < std::min(height, b.y1); ++y)
            for (int x = std::max(0, b.x0); x < std::min(width, b.x1); ++x)
                for (int c = 0; c < channels; ++c) at(x, y, c) = value;
    }
};

inline Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            out.at(x, y) = static_cast<std::uint8_t>(v + 0.5);
        }
    return out;
}

inline Image load_png(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw IoError("cannot read PNG " + path + ": " + png.message);
    png.format = PNG_FORMAT_RGB;
    Image img(static_cast<int>(png.width), static_cast<int>(png.height), 3);
    if (!png_image_finish_read(&png, nullptr, img.data.data(), 0, nullptr)) {
        png_image_free(&png);
        throw IoError("cannot decode PNG " + path + ": " + png.message);
    }
    return img;
}

inline void save_png(const std::string& path, const Image& img) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, img.data.data(), 0, nullptr))
        throw IoError("cannot write PNG " + path + ": " + png.message);
}

inline bool is_png(const std::string& bytes) {
    static const char sig[] = "\x89PNG\r\n\x1a\n";
    return bytes.size() >= 8 && bytes.compare(0, 8, std::string(sig, 8)) == 0;
}

inline Image crop(const Image& img, const BoundingBox& box) {
    auto b = clip(box, img.width, img.height);
    if (!b) throw IoError("crop box outside image");
    Image out(b->width(), b->height(), img.channels);
    for (int y = 0; y < out.height; ++y)
        std::memcpy(&out.data[std::size_t(y) * out.width * out.channels],
                    &img.data[(std::size_t(y + b->y0) * img.width + b->x0) * img.channels],
                    std::size_t(out.width) * out.channels);
    return out;
}

/// One-pixel rectangle outline, used for overlay previews.
inline void draw_outline(Image& img, const BoundingBox& box, std::uint8_t r, std::uint8_t g,
                         std::uint8_t b) {
    auto set = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
        if (img.channels == 3) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        } else {
            img.at(x, y) = r;
        }
    };
    for (int x = box.x0; x < box.x1; ++x) {
        set(x, box.y0);
        set(x, box.y1 - 1);
    }
    for (int y = box.y0; y < box.y1; ++y) {
        set(box.x0, y);
        set(box.x1 - 1, y);
    }
}

} // namespace exsclaim
