#pragma once

#include <cstdint>
#include <vector>

#include "qrsr/geometry.hpp"
#include "qrsr/image.hpp"
#include "qrsr/qr_types.hpp"

namespace qrsr {

// Central sub-block of a rendered module: side ceil(s/3), uniform weights,
// anchored so it sits centered (left-biased when the remainder is odd).
struct CentralFilter {
    int module_px = 0;
    int block = 0;
    int offset = 0;

    static CentralFilter for_module_px(int s) {
        CentralFilter f;
        f.module_px = s;
        f.block = (s + 2) / 3;
        f.offset = (s - f.block) / 2;
        return f;
    }

    double weight() const { return 1.0 / (static_cast<double>(block) * block); }

    bool contains(int dx, int dy) const {
        return dx >= offset && dx < offset + block && dy >= offset && dy < offset + block;
    }
};

// Mean of the grayscale image over the central sub-block of module
// (row, col). The image must be single channel.
inline double module_center_mean(const GrayImage& gray, const GridGeometry& g,
                                 const CentralFilter& f, int row, int col) {
    const int x0 = g.origin_x + col * g.module_px + f.offset;
    const int y0 = g.origin_y + row * g.module_px + f.offset;
    double sum = 0.0;
    for (int dy = 0; dy < f.block; ++dy)
        for (int dx = 0; dx < f.block; ++dx)
            sum += gray.at(x0 + dx, y0 + dy);
    return sum * f.weight();
}

// Same mean through a homography mapping canonical raster coordinates into
// the image; samples are taken bilinearly at mapped pixel centers.
inline double module_center_mean_mapped(const GrayImage& gray, const GridGeometry& g,
                                        const CentralFilter& f, const Homography& h,
                                        int row, int col) {
    const int x0 = g.origin_x + col * g.module_px + f.offset;
    const int y0 = g.origin_y + row * g.module_px + f.offset;
    double sum = 0.0;
    for (int dy = 0; dy < f.block; ++dy)
        for (int dx = 0; dx < f.block; ++dx) {
            const Vec2 p = h.apply(x0 + dx + 0.5, y0 + dy + 0.5);
            sum += gray.sample_bilinear(p.x, p.y, 0, 1.0);
        }
    return sum * f.weight();
}

// A module reads light when its central mean is at least one half.
inline uint8_t binarize_mean(double mean) { return mean >= 0.5 ? 1 : 0; }

inline std::vector<uint8_t> sample_cells(const GrayImage& gray, const GridGeometry& g) {
    const CentralFilter f = CentralFilter::for_module_px(g.module_px);
    std::vector<uint8_t> cells(static_cast<size_t>(g.modules) * g.modules);
    for (int row = 0; row < g.modules; ++row)
        for (int col = 0; col < g.modules; ++col)
            cells[static_cast<size_t>(row) * g.modules + col] =
                binarize_mean(module_center_mean(gray, g, f, row, col));
    return cells;
}

inline std::vector<uint8_t> sample_cells_mapped(const GrayImage& gray, const GridGeometry& g,
                                                const Homography& h) {
    const CentralFilter f = CentralFilter::for_module_px(g.module_px);
    std::vector<uint8_t> cells(static_cast<size_t>(g.modules) * g.modules);
    for (int row = 0; row < g.modules; ++row)
        for (int col = 0; col < g.modules; ++col)
            cells[static_cast<size_t>(row) * g.modules + col] =
                binarize_mean(module_center_mean_mapped(gray, g, f, h, row, col));
    return cells;
}

} // namespace qrsr
