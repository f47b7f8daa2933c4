#pragma once

#include <cmath>

#include "qrsr/geometry.hpp"
#include "qrsr/image.hpp"

namespace qrsr {

// Out-of-plane rotation about the vertical axis seen by a pinhole camera.
// focal_length is in units of image widths; 1.2 keeps perspective mild.
struct TiltSpec {
    double degrees = 0.0;
    double focal_length = 1.2;
};

struct TiltResult {
    PixelImage image;        // same extents as the input, white beyond the plane
    Homography grid_to_image; // maps source pixel coordinates into the warp
};

// Homography for a tilt, in pixel coordinates of a w x h raster. The
// plane sits at the focal distance and rotates about its vertical center
// line; a uniform fit scale keeps the stretching near edge exactly inside
// the frame at any angle. In normalized coordinates u = x/w - 1/2,
// v = y/h - 1/2 the map is (u,v) -> (a u, b v) / (c u + f) with
// a = s f cos(t), b = s f, c = -sin(t); the entries below are that map
// conjugated into pixel space, written out so zero tilt yields an exactly
// diagonal matrix.
inline Homography tilt_homography(const TiltSpec& spec, int width, int height) {
    if (std::abs(spec.degrees) >= 90.0)
        throw DegenerateProjection("tilt of 90 degrees or more folds the plane away");
    if (spec.focal_length <= 0.0)
        throw InvalidConfig("focal length must be positive");
    const double theta = spec.degrees * M_PI / 180.0;
    const double f = spec.focal_length;
    const double s = (f - 0.5 * std::sin(std::abs(theta))) / f;
    const double a = s * f * std::cos(theta);
    const double b = s * f;
    const double c = -std::sin(theta);
    const double w = width, h = height;

    Homography p;
    p.m = {a + 0.5 * c, 0, w * (0.5 * f - 0.5 * a - 0.25 * c),
           0.5 * c * h / w, b, h * (0.5 * f - 0.5 * b - 0.25 * c),
           c / w, 0, f - 0.5 * c};
    return p;
}

inline TiltResult simulate_tilt(const PixelImage& src, const TiltSpec& spec) {
    TiltResult out;
    if (spec.degrees == 0.0) {
        // exact identity; skip resampling so the bytes match too
        out.grid_to_image = Homography::identity();
        out.image = src;
        out.image.grid.reset();
        return out;
    }
    out.grid_to_image = tilt_homography(spec, src.width, src.height);
    const Homography inv = out.grid_to_image.inverse();
    out.image = PixelImage(src.width, src.height, src.channels, 1.0);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            const Vec2 p = inv.apply(x + 0.5, y + 0.5);
            for (int c = 0; c < src.channels; ++c)
                out.image.at(x, y, c) = src.sample_bilinear(p.x, p.y, c, 1.0);
        }
    return out;
}

} // namespace qrsr
