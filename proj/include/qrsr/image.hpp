#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>
#include <vector>

#include "qrsr/errors.hpp"
#include "qrsr/geometry.hpp"

namespace qrsr {

// Luminance weights used everywhere a color image is reduced to gray.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline double luminance(double r, double g, double b) {
    return kLumaR * r + kLumaG * g + kLumaB * b;
}

// Interleaved row-major raster with values in [0,1]; 1 or 3 channels.
// `grid` records where a module grid sits in this raster, when one does.
struct PixelImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> values;
    std::optional<GridGeometry> grid;

    PixelImage() = default;
    PixelImage(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          values(static_cast<size_t>(w) * h * c, fill) {}

    size_t index(int x, int y, int c = 0) const {
        return (static_cast<size_t>(y) * width + x) * channels + c;
    }
    double& at(int x, int y, int c = 0) { return values[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return values[index(x, y, c)]; }

    bool same_extent(const PixelImage& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    void clamp01() {
        for (double& v : values) v = std::clamp(v, 0.0, 1.0);
    }

    // Bilinear sample at a continuous position given in pixel units where
    // pixel (i,j) is centered at (i+0.5, j+0.5). Outside the raster the
    // image continues as `fill`.
    double sample_bilinear(double x, double y, int c = 0, double fill = 1.0) const {
        const double fx = x - 0.5;
        const double fy = y - 0.5;
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const double ax = fx - x0;
        const double ay = fy - y0;
        auto pix = [&](int px, int py) {
            if (px < 0 || py < 0 || px >= width || py >= height) return fill;
            return at(px, py, c);
        };
        const double top = pix(x0, y0) * (1.0 - ax) + pix(x0 + 1, y0) * ax;
        const double bot = pix(x0, y0 + 1) * (1.0 - ax) + pix(x0 + 1, y0 + 1) * ax;
        return top * (1.0 - ay) + bot * ay;
    }
};

using GrayImage = PixelImage;

inline GrayImage to_grayscale(const PixelImage& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3)
        throw InvalidConfig("image must have 1 or 3 channels");
    GrayImage g(img.width, img.height, 1);
    g.grid = img.grid;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            g.at(x, y) = luminance(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
    return g;
}

// Bilinear resize; drops any grid geometry since it no longer applies.
inline PixelImage resample(const PixelImage& img, int new_w, int new_h) {
    if (new_w <= 0 || new_h <= 0)
        throw InvalidConfig("resample target must be positive");
    PixelImage out(new_w, new_h, img.channels);
    const double sx = static_cast<double>(img.width) / new_w;
    const double sy = static_cast<double>(img.height) / new_h;
    for (int y = 0; y < new_h; ++y)
        for (int x = 0; x < new_w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.sample_bilinear((x + 0.5) * sx, (y + 0.5) * sy, c, 1.0);
    return out;
}

// Replicates a single gray channel into `target` channels.
inline PixelImage expand_channels(const PixelImage& img, int target) {
    if (img.channels == target) return img;
    if (img.channels != 1 || target != 3)
        throw InvalidConfig("can only expand gray to rgb");
    PixelImage out(img.width, img.height, target);
    out.grid = img.grid;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < target; ++c)
                out.at(x, y, c) = img.at(x, y);
    return out;
}

inline PixelImage blend(const PixelImage& a, const PixelImage& b, double wa) {
    if (!a.same_extent(b))
        throw ExtentMismatch("blend inputs must share extents");
    PixelImage out = a;
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = wa * a.values[i] + (1.0 - wa) * b.values[i];
    return out;
}

} // namespace qrsr
