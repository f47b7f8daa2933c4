#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "qrsr/image.hpp"

namespace qrsr {

namespace detail {

struct PngWriteSink {
    std::vector<uint8_t>* out;
};

inline void png_vector_write(png_structp png, png_bytep data, png_size_t len) {
    auto* sink = static_cast<PngWriteSink*>(png_get_io_ptr(png));
    sink->out->insert(sink->out->end(), data, data + len);
}

inline void png_vector_flush(png_structp) {}

struct PngReadSource {
    const uint8_t* data;
    size_t size;
    size_t pos;
};

inline void png_vector_read(png_structp png, png_bytep data, png_size_t len) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->pos + len > src->size)
        png_error(png, "unexpected end of png stream");
    std::memcpy(data, src->data + src->pos, len);
    src->pos += len;
}

} // namespace detail

// Serializes to 8-bit grayscale or RGB. Grid geometry, when present, rides
// along in a text chunk so a later read can restore it.
inline std::vector<uint8_t> encode_png(const PixelImage& img) {
    if (img.channels != 1 && img.channels != 3)
        throw InvalidConfig("png output supports 1 or 3 channels");
    if (img.width <= 0 || img.height <= 0)
        throw InvalidConfig("png output needs a non-empty image");

    std::vector<uint8_t> bytes(img.values.size());
    for (size_t i = 0; i < bytes.size(); ++i) {
        const double v = std::clamp(img.values[i], 0.0, 1.0);
        bytes[i] = static_cast<uint8_t>(v * 255.0 + 0.5);
    }
    std::vector<png_bytep> rows(img.height);
    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y) rows[y] = bytes.data() + y * stride;

    std::string grid_text;
    if (img.grid)
        grid_text = std::to_string(img.grid->origin_x) + " " +
                    std::to_string(img.grid->origin_y) + " " +
                    std::to_string(img.grid->module_px) + " " +
                    std::to_string(img.grid->modules);

    std::vector<uint8_t> out;
    detail::PngWriteSink sink{&out};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encoding failed");
    }
    png_set_write_fn(png, &sink, detail::png_vector_write, detail::png_vector_flush);
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_text text;
    if (!grid_text.empty()) {
        std::memset(&text, 0, sizeof(text));
        text.compression = PNG_TEXT_COMPRESSION_NONE;
        text.key = const_cast<char*>("qrsr-grid");
        text.text = const_cast<char*>(grid_text.c_str());
        text.text_length = grid_text.size();
        png_set_text(png, info, &text, 1);
    }
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline PixelImage decode_png(const uint8_t* data, size_t size) {
    if (size < 8 || png_sig_cmp(data, 0, 8) != 0)
        throw IoError("not a png stream");
    detail::PngReadSource src{data, size, 0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png decoding failed");
    }
    png_set_read_fn(png, &src, detail::png_vector_read);
    png_read_png(png, info,
                 PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_EXPAND,
                 nullptr);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png must decode to gray or rgb");
    }
    png_bytepp rows = png_get_rows(png, info);
    PixelImage img(static_cast<int>(w), static_cast<int>(h), channels);
    for (png_uint_32 y = 0; y < h; ++y)
        for (png_uint_32 x = 0; x < w * channels; ++x)
            img.values[static_cast<size_t>(y) * w * channels + x] = rows[y][x] / 255.0;

    png_textp texts = nullptr;
    int n_text = 0;
    if (png_get_text(png, info, &texts, &n_text) > 0)
        for (int i = 0; i < n_text; ++i)
            if (texts[i].key && std::string(texts[i].key) == "qrsr-grid") {
                GridGeometry g;
                if (std::sscanf(texts[i].text, "%d %d %d %d", &g.origin_x, &g.origin_y,
                                &g.module_px, &g.modules) == 4)
                    img.grid = g;
            }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_png(const std::string& path, const PixelImage& img) {
    const std::vector<uint8_t> bytes = encode_png(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("short write: " + path);
}

inline PixelImage read_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    return decode_png(data.data(), data.size());
}

} // namespace qrsr
