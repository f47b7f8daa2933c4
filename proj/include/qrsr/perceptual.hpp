#pragma once

#include <cmath>
#include <vector>

#include "qrsr/image.hpp"

namespace qrsr {

struct PerceptualConfig {
    int levels = 3;
    double sigma = 1.0;
};

namespace detail {

inline std::vector<double> gaussian_taps(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable blur with zero padding. The kernel is symmetric and the padding
// linear, so this operator is exactly its own adjoint; the gradient pass
// reuses it as-is.
inline PixelImage blur(const PixelImage& img, const std::vector<double>& taps) {
    const int radius = static_cast<int>(taps.size()) / 2;
    PixelImage tmp(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int xx = x + i;
                    if (xx < 0 || xx >= img.width) continue;
                    s += taps[i + radius] * img.at(xx, y, c);
                }
                tmp.at(x, y, c) = s;
            }
    PixelImage out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int yy = y + i;
                    if (yy < 0 || yy >= img.height) continue;
                    s += taps[i + radius] * tmp.at(x, yy, c);
                }
                out.at(x, y, c) = s;
            }
    return out;
}

inline PixelImage decimate(const PixelImage& img) {
    PixelImage out((img.width + 1) / 2, (img.height + 1) / 2, img.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(2 * x, 2 * y, c);
    return out;
}

inline PixelImage decimate_adjoint(const PixelImage& g, int width, int height) {
    PixelImage out(width, height, g.channels, 0.0);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            for (int c = 0; c < g.channels; ++c)
                out.at(2 * x, 2 * y, c) = g.at(x, y, c);
    return out;
}

} // namespace detail

// Blurred dyadic pyramid of the comparison image, computed once and reused
// across evaluations against the same reference.
struct PerceptualRef {
    std::vector<PixelImage> blurred;
};

inline PerceptualRef perceptual_prepare(const PixelImage& ref, const PerceptualConfig& cfg = {}) {
    const std::vector<double> taps = detail::gaussian_taps(cfg.sigma);
    PerceptualRef out;
    PixelImage level = ref;
    for (int l = 0; l < cfg.levels; ++l) {
        out.blurred.push_back(detail::blur(level, taps));
        if (l + 1 < cfg.levels) level = detail::decimate(out.blurred.back());
    }
    return out;
}

struct PerceptualEval {
    double value = 0.0;
    PixelImage gradient; // empty unless requested
};

// Mean over pyramid levels of the per-pixel mean squared difference between
// blurred levels. Zero exactly when the blurred pyramids coincide.
inline PerceptualEval perceptual_eval(const PixelImage& x, const PerceptualRef& ref,
                                      const PerceptualConfig& cfg = {},
                                      bool want_gradient = false) {
    if (ref.blurred.empty() || !x.same_extent(ref.blurred.front()))
        throw ExtentMismatch("perceptual reference does not match image extents");
    const std::vector<double> taps = detail::gaussian_taps(cfg.sigma);
    const int levels = cfg.levels;

    std::vector<PixelImage> a(levels), blurred(levels);
    a[0] = x;
    for (int l = 0; l < levels; ++l) {
        blurred[l] = detail::blur(a[l], taps);
        if (l + 1 < levels) a[l + 1] = detail::decimate(blurred[l]);
    }

    PerceptualEval out;
    for (int l = 0; l < levels; ++l) {
        const PixelImage& bl = ref.blurred[l];
        double s = 0.0;
        for (size_t i = 0; i < blurred[l].values.size(); ++i) {
            const double d = blurred[l].values[i] - bl.values[i];
            s += d * d;
        }
        out.value += s / blurred[l].values.size();
    }
    out.value /= levels;

    if (want_gradient) {
        std::vector<PixelImage> grad_blurred(levels);
        for (int l = levels - 1; l >= 0; --l) {
            PixelImage g(blurred[l].width, blurred[l].height, blurred[l].channels, 0.0);
            const double scale = 2.0 / (levels * static_cast<double>(blurred[l].values.size()));
            for (size_t i = 0; i < g.values.size(); ++i)
                g.values[i] = scale * (blurred[l].values[i] - ref.blurred[l].values[i]);
            if (l + 1 < levels) {
                const PixelImage down = detail::blur(grad_blurred[l + 1], taps);
                const PixelImage up =
                    detail::decimate_adjoint(down, blurred[l].width, blurred[l].height);
                for (size_t i = 0; i < g.values.size(); ++i) g.values[i] += up.values[i];
            }
            grad_blurred[l] = std::move(g);
        }
        out.gradient = detail::blur(grad_blurred[0], taps);
        out.gradient.grid = x.grid;
    }
    return out;
}

inline double perceptual_distance(const PixelImage& a, const PixelImage& b,
                                  const PerceptualConfig& cfg = {}) {
    return perceptual_eval(a, perceptual_prepare(b, cfg), cfg, false).value;
}

} // namespace qrsr
