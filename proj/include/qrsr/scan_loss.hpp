#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "qrsr/image.hpp"
#include "qrsr/qr_types.hpp"
#include "qrsr/sampling.hpp"

namespace qrsr {

// Isotropic Gaussian over one rendered module, centered on the module,
// normalized to sum 1. The width tracks the module size so the profile is
// resolution independent.
struct GaussianKernel {
    int side = 0;
    double sigma = 1.0;
    std::vector<double> w;

    static GaussianKernel for_module_px(int s) {
        GaussianKernel k;
        k.side = s;
        k.sigma = std::max(0.5, static_cast<double>((s - 1) / 5));
        k.w.resize(static_cast<size_t>(s) * s);
        const double c = (s - 1) / 2.0;
        double sum = 0.0;
        for (int j = 0; j < s; ++j)
            for (int i = 0; i < s; ++i) {
                const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
                const double v = std::exp(-d2 / (2.0 * k.sigma * k.sigma));
                k.w[static_cast<size_t>(j) * s + i] = v;
                sum += v;
            }
        for (double& v : k.w) v /= sum;
        return k;
    }

    double at(int dx, int dy) const { return w[static_cast<size_t>(dy) * side + dx]; }

    // mean weight over the central sub-block; useful for step size scaling
    double central_mean(const CentralFilter& f) const {
        double s = 0.0;
        for (int dy = 0; dy < f.block; ++dy)
            for (int dx = 0; dx < f.block; ++dx)
                s += at(f.offset + dx, f.offset + dy);
        return s / (static_cast<double>(f.block) * f.block);
    }
};

// Pixel-level mismatch against a target value y in {0,1}:
// light targets pay for darkness below one half, dark targets for
// lightness above it. Exactly mid-gray costs nothing either way.
inline double pixel_error(double g, double y) {
    return std::max(1.0 - 2.0 * g, 0.0) * y + std::max(2.0 * g - 1.0, 0.0) * (1.0 - y);
}

// Derivative of pixel_error with respect to g (0 at the kink).
inline double pixel_error_slope(double g, double y) {
    if (g < 0.5) return -2.0 * y;
    if (g > 0.5) return 2.0 * (1.0 - y);
    return 0.0;
}

struct SrlModule {
    uint8_t phi = 0;             // 1 when the sampled read disagrees with the target
    double weighted_error = 0.0; // kernel-weighted pixel error over the module
};

struct SrlReport {
    double loss = 0.0;       // mean over modules of phi * weighted_error
    double error_rate = 0.0; // mean of phi
    int mismatch_count = 0;
    int side = 0;
    std::vector<SrlModule> per_module; // row-major

    const SrlModule& module(int row, int col) const {
        return per_module[static_cast<size_t>(row) * side + col];
    }
};

struct SrlEval {
    SrlReport report;
    PixelImage gradient; // empty unless requested; same extents as the input
};

namespace detail {

inline const GridGeometry& require_grid(const PixelImage& image, const ModuleMatrix& target) {
    if (!image.grid)
        throw InvalidConfig("image carries no grid geometry");
    if (image.grid->modules != target.side)
        throw ExtentMismatch("grid side does not match target matrix");
    const GridGeometry& g = *image.grid;
    if (g.origin_x < 0 || g.origin_y < 0 ||
        g.origin_x + g.code_px() > image.width || g.origin_y + g.code_px() > image.height)
        throw ExtentMismatch("grid does not fit inside the image");
    return g;
}

} // namespace detail

// Evaluates the module-gated loss and, on request, its gradient with
// respect to every input pixel. The gate phi compares the binarized central
// mean of each module with its target cell; gated-off modules contribute
// nothing to either value or gradient.
inline SrlEval scan_loss_eval(const PixelImage& image, const ModuleMatrix& target,
                              bool want_gradient = false) {
    const GridGeometry& g = detail::require_grid(image, target);
    const GrayImage gray = to_grayscale(image);
    const GaussianKernel kernel = GaussianKernel::for_module_px(g.module_px);
    const CentralFilter filter = CentralFilter::for_module_px(g.module_px);

    const int m = target.side;
    const double n_modules = static_cast<double>(m) * m;
    const double luma[3] = {kLumaR, kLumaG, kLumaB};

    SrlEval out;
    out.report.side = m;
    out.report.per_module.resize(static_cast<size_t>(m) * m);
    if (want_gradient) {
        out.gradient = PixelImage(image.width, image.height, image.channels, 0.0);
        out.gradient.grid = image.grid;
    }

    for (int row = 0; row < m; ++row)
        for (int col = 0; col < m; ++col) {
            const double y = target.cell(row, col) ? 1.0 : 0.0;
            const int x0 = g.origin_x + col * g.module_px;
            const int y0 = g.origin_y + row * g.module_px;

            double weighted = 0.0;
            for (int dy = 0; dy < g.module_px; ++dy)
                for (int dx = 0; dx < g.module_px; ++dx)
                    weighted += kernel.at(dx, dy) * pixel_error(gray.at(x0 + dx, y0 + dy), y);

            const double mean = module_center_mean(gray, g, filter, row, col);
            const uint8_t phi = binarize_mean(mean) != target.cell(row, col) ? 1 : 0;

            SrlModule& rec = out.report.per_module[static_cast<size_t>(row) * m + col];
            rec.phi = phi;
            rec.weighted_error = weighted;
            if (phi) {
                out.report.loss += weighted;
                ++out.report.mismatch_count;
                if (want_gradient) {
                    for (int dy = 0; dy < g.module_px; ++dy)
                        for (int dx = 0; dx < g.module_px; ++dx) {
                            const double slope =
                                pixel_error_slope(gray.at(x0 + dx, y0 + dy), y);
                            if (slope == 0.0) continue;
                            const double base = kernel.at(dx, dy) * slope / n_modules;
                            for (int c = 0; c < image.channels; ++c)
                                out.gradient.at(x0 + dx, y0 + dy, c) =
                                    base * (image.channels == 3 ? luma[c] : 1.0);
                        }
                }
            }
        }

    out.report.loss /= n_modules;
    out.report.error_rate = out.report.mismatch_count / n_modules;
    return out;
}

inline SrlReport scan_loss(const PixelImage& image, const ModuleMatrix& target) {
    return scan_loss_eval(image, target, false).report;
}

inline PixelImage scan_loss_gradient(const PixelImage& image, const ModuleMatrix& target) {
    return scan_loss_eval(image, target, true).gradient;
}

// Loss with the gate vector pinned externally; the smooth surface the
// gradient belongs to.
inline double scan_loss_frozen(const PixelImage& image, const ModuleMatrix& target,
                               const std::vector<uint8_t>& phi) {
    const GridGeometry& g = detail::require_grid(image, target);
    if (phi.size() != static_cast<size_t>(target.side) * target.side)
        throw ExtentMismatch("gate vector size does not match matrix");
    const GrayImage gray = to_grayscale(image);
    const GaussianKernel kernel = GaussianKernel::for_module_px(g.module_px);

    const int m = target.side;
    double loss = 0.0;
    for (int row = 0; row < m; ++row)
        for (int col = 0; col < m; ++col) {
            if (!phi[static_cast<size_t>(row) * m + col]) continue;
            const double y = target.cell(row, col) ? 1.0 : 0.0;
            const int x0 = g.origin_x + col * g.module_px;
            const int y0 = g.origin_y + row * g.module_px;
            for (int dy = 0; dy < g.module_px; ++dy)
                for (int dx = 0; dx < g.module_px; ++dx)
                    loss += kernel.at(dx, dy) * pixel_error(gray.at(x0 + dx, y0 + dy), y);
        }
    return loss / (static_cast<double>(m) * m);
}

} // namespace qrsr
