#pragma once

#include <array>
#include <cmath>

#include "qrsr/errors.hpp"

namespace qrsr {

// Placement of a module grid inside a pixel image. origin is the top-left
// pixel of the top-left module; every module is module_px x module_px.
struct GridGeometry {
    int origin_x = 0;
    int origin_y = 0;
    int module_px = 1;
    int modules = 0; // grid side length in modules

    int code_px() const { return modules * module_px; }

    bool operator==(const GridGeometry&) const = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Row-major 3x3 projective transform acting on 2D points.
struct Homography {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return Homography{}; }

    Vec2 apply(double x, double y) const {
        const double w = m[6] * x + m[7] * y + m[8];
        if (std::abs(w) < 1e-15)
            throw DegenerateProjection("point maps to the line at infinity");
        return Vec2{(m[0] * x + m[1] * y + m[2]) / w,
                    (m[3] * x + m[4] * y + m[5]) / w};
    }

    Homography operator*(const Homography& o) const {
        Homography r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k)
                    s += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = s;
            }
        return r;
    }

    // Adjugate transpose; valid up to scale, which is all a homography needs.
    Homography inverse() const {
        const auto& a = m;
        Homography r;
        r.m = {a[4] * a[8] - a[5] * a[7], a[2] * a[7] - a[1] * a[8], a[1] * a[5] - a[2] * a[4],
               a[5] * a[6] - a[3] * a[8], a[0] * a[8] - a[2] * a[6], a[2] * a[3] - a[0] * a[5],
               a[3] * a[7] - a[4] * a[6], a[1] * a[6] - a[0] * a[7], a[0] * a[4] - a[1] * a[3]};
        double norm = 0.0;
        for (double v : r.m) norm += std::abs(v);
        if (norm < 1e-15)
            throw DegenerateProjection("homography is singular");
        return r;
    }
};

} // namespace qrsr
