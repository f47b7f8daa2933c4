#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qrsr/qr_decode.hpp"
#include "qrsr/tilt.hpp"
#include "qrsr/verify.hpp"
#include "support/synthetic.hpp"

using namespace qrsr;
using Catch::Approx;

namespace {

CodeConfig tiny_cfg() {
    CodeConfig cfg;
    cfg.version = 2;
    cfg.ec_level = EcLevel::Q;
    cfg.mask_id = 1;
    cfg.module_px = 6;
    cfg.quiet_px = 12;
    return cfg;
}

// independent reference: rotate the plane point about the vertical center
// axis at focal distance, project through the pinhole, then apply the fit
// scale about the image center
Vec2 projected_reference(double x, double y, double deg, double f, int w, int h) {
    const double t = deg * M_PI / 180.0;
    const double u = x / w - 0.5; // plane coordinates, one unit per width
    const double v = y / h - 0.5;
    const double px = u * std::cos(t);
    const double pz = f - u * std::sin(t);
    const double s = (f - 0.5 * std::sin(std::abs(t))) / f;
    const double iu = s * f * px / pz;
    const double iv = s * f * v / pz;
    return Vec2{(iu + 0.5) * w, (iv + 0.5) * h};
}

} // namespace

TEST_CASE("zero tilt is the exact identity") {
    const CodeConfig cfg = tiny_cfg();
    const ModuleMatrix m = encode(Payload::from_string("zero"), cfg);
    const PixelImage img = rasterize(m, cfg);
    const TiltResult t = simulate_tilt(img, TiltSpec{0.0, 1.2});
    REQUIRE(t.image.values == img.values);
    REQUIRE_FALSE(t.image.grid.has_value());
    for (int i = 0; i < 9; ++i)
        REQUIRE(t.grid_to_image.m[i] == Homography::identity().m[i]);
}

TEST_CASE("tilt map matches the pinhole construction point for point") {
    const int w = 740, h = 740;
    for (double deg : {15.0, 30.0, 45.0}) {
        const Homography hmat = tilt_homography(TiltSpec{deg, 1.2}, w, h);
        for (double x : {0.0, 80.0, 370.0, 660.0, 740.0})
            for (double y : {0.0, 370.0, 740.0}) {
                const Vec2 got = hmat.apply(x, y);
                const Vec2 want = projected_reference(x, y, deg, 1.2, w, h);
                CAPTURE(deg, x, y);
                REQUIRE(got.x == Approx(want.x).margin(1e-9));
                REQUIRE(got.y == Approx(want.y).margin(1e-9));
            }
    }

    // the midline is invariant: y = h/2 stays at h/2 for any x
    const Homography h45 = tilt_homography(TiltSpec{45.0, 1.2}, w, h);
    for (double x : {0.0, 200.0, 740.0})
        REQUIRE(h45.apply(x, 370.0).y == Approx(370.0).margin(1e-9));

    // the fitted scale keeps every warped corner inside the frame
    for (double deg : {15.0, 30.0, 45.0, 60.0}) {
        const Homography hm = tilt_homography(TiltSpec{deg, 1.2}, w, h);
        for (double x : {0.0, 740.0})
            for (double y : {0.0, 740.0}) {
                const Vec2 p = hm.apply(x, y);
                REQUIRE(p.x >= -1e-9);
                REQUIRE(p.x <= 740.0 + 1e-9);
                REQUIRE(p.y >= -1e-9);
                REQUIRE(p.y <= 740.0 + 1e-9);
            }
    }
}

TEST_CASE("degenerate projections are refused") {
    REQUIRE_THROWS_AS(tilt_homography(TiltSpec{90.0, 1.2}, 100, 100), DegenerateProjection);
    REQUIRE_THROWS_AS(tilt_homography(TiltSpec{-95.0, 1.2}, 100, 100), DegenerateProjection);
    REQUIRE_THROWS_AS(tilt_homography(TiltSpec{30.0, 0.0}, 100, 100), InvalidConfig);
    REQUIRE_NOTHROW(tilt_homography(TiltSpec{89.9, 1.2}, 100, 100));
}

TEST_CASE("homography inverse composes to the identity") {
    const Homography h = tilt_homography(TiltSpec{37.0, 1.2}, 640, 480);
    const Homography inv = h.inverse();
    for (double x : {1.0, 320.0, 639.0})
        for (double y : {1.0, 240.0, 479.0}) {
            const Vec2 fwd = h.apply(x, y);
            const Vec2 back = inv.apply(fwd.x, fwd.y);
            REQUIRE(back.x == Approx(x).margin(1e-9));
            REQUIRE(back.y == Approx(y).margin(1e-9));
        }
}

TEST_CASE("clean rasters survive the tilt sweep") {
    const CodeConfig cfg = tiny_cfg();
    const Payload payload = Payload::from_string("tilt me");
    const PixelImage img = rasterize(encode(payload, cfg), cfg);

    for (double deg : {0.0, 15.0, 30.0, 45.0}) {
        const TiltResult t = simulate_tilt(img, TiltSpec{deg, 1.2});
        const DecodeResult r = decode(t.image, cfg, &t.grid_to_image);
        CAPTURE(deg);
        REQUIRE(r.payload == payload);
        if (deg == 0.0) REQUIRE(r.total_corrections() == 0);
    }
}

TEST_CASE("scan success rate counts exact decodes only") {
    const CodeConfig cfg = tiny_cfg();
    const Payload good = Payload::from_string("good");
    const PixelImage img = rasterize(encode(good, cfg), cfg);

    std::vector<SsrCase> cases;
    for (int i = 0; i < 3; ++i)
        cases.push_back(SsrCase{img, good, std::nullopt, "ok" + std::to_string(i)});

    PixelImage blank(img.width, img.height, 1, 1.0);
    blank.grid = img.grid;
    cases.push_back(SsrCase{blank, good, std::nullopt, "blank"});
    cases.push_back(SsrCase{img, Payload::from_string("other"), std::nullopt, "mismatch"});

    const SsrReport report = compute_ssr(cases, cfg);
    REQUIRE(report.total == 5);
    REQUIRE(report.scanned == 3);
    REQUIRE(report.ssr == Approx(0.6));
    REQUIRE(report.items.size() == 5);
    REQUIRE(report.items[0].scannable);
    REQUIRE(report.items[0].corrections == 0);
    REQUIRE(report.items[0].failure.empty());
    REQUIRE(report.items[0].id == "ok0");
    REQUIRE_FALSE(report.items[3].scannable);
    REQUIRE_FALSE(report.items[3].failure.empty());
    REQUIRE_FALSE(report.items[4].scannable);
    REQUIRE(report.items[4].failure == "decoded to a different payload");
}

TEST_CASE("worker count never changes the outcome") {
    const CodeConfig cfg = tiny_cfg();
    std::vector<SsrCase> cases;
    for (uint32_t seed = 0; seed < 6; ++seed) {
        const Payload p = Payload::from_string("case " + std::to_string(seed));
        const ModuleMatrix m = encode(p, cfg);
        PixelImage img = seed % 2 ? testsupport::blended_input(m, cfg, seed)
                                  : expand_channels(rasterize(m, cfg), 3);
        cases.push_back(SsrCase{std::move(img), p, std::nullopt, std::to_string(seed)});
    }
    const SsrReport serial = compute_ssr(cases, cfg, 1);
    const SsrReport threaded = compute_ssr(cases, cfg, 4);
    REQUIRE(serial.total == threaded.total);
    REQUIRE(serial.scanned == threaded.scanned);
    REQUIRE(serial.items.size() == threaded.items.size());
    for (size_t i = 0; i < serial.items.size(); ++i) {
        REQUIRE(serial.items[i].id == threaded.items[i].id);
        REQUIRE(serial.items[i].scannable == threaded.items[i].scannable);
        REQUIRE(serial.items[i].corrections == threaded.items[i].corrections);
        REQUIRE(serial.items[i].failure == threaded.items[i].failure);
    }
}

TEST_CASE("tilt sweep produces one row per angle over all cases") {
    const CodeConfig cfg = tiny_cfg();
    const Payload payload = Payload::from_string("sweep");
    const PixelImage img = rasterize(encode(payload, cfg), cfg);
    std::vector<SsrCase> cases{SsrCase{img, payload, std::nullopt, "a"},
                               SsrCase{img, payload, std::nullopt, "b"}};

    const std::vector<double> angles{0.0, 30.0, 45.0};
    const auto rows = tilt_sweep(cases, angles, cfg);
    REQUIRE(rows.size() == 3);
    for (size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i].degrees == angles[i]);
        REQUIRE(rows[i].report.total == 2);
        REQUIRE(rows[i].report.ssr == Approx(1.0));
    }
}

TEST_CASE("error overlay tints exactly the misread modules") {
    const CodeConfig cfg = tiny_cfg();
    const ModuleMatrix m = encode(Payload::from_string("overlay"), cfg);
    PixelImage img = rasterize(m, cfg);

    // flip two known modules
    const GridGeometry& g = *img.grid;
    const std::vector<std::pair<int, int>> flips{{10, 12}, {15, 20}};
    for (auto [row, col] : flips)
        for (int dy = 0; dy < g.module_px; ++dy)
            for (int dx = 0; dx < g.module_px; ++dx)
                img.at(g.origin_x + col * g.module_px + dx,
                       g.origin_y + row * g.module_px + dy) =
                    m.cell(row, col) ? 0.0 : 1.0;

    const SrlReport report = scan_loss(img, m);
    const PixelImage tinted = overlay_errors(img, m);
    REQUIRE(tinted.channels == 3);

    for (int row = 0; row < m.side; ++row)
        for (int col = 0; col < m.side; ++col) {
            const int x = g.origin_x + col * g.module_px + 2;
            const int y = g.origin_y + row * g.module_px + 2;
            const double orig = img.at(x, y);
            if (report.module(row, col).phi) {
                REQUIRE(tinted.at(x, y, 0) == Approx(0.5 + 0.5 * orig));
                REQUIRE(tinted.at(x, y, 1) == Approx(0.5 * orig));
                REQUIRE(tinted.at(x, y, 2) == Approx(0.5 * orig));
            } else {
                REQUIRE(tinted.at(x, y, 0) == orig);
                REQUIRE(tinted.at(x, y, 1) == orig);
                REQUIRE(tinted.at(x, y, 2) == orig);
            }
        }
    REQUIRE(report.mismatch_count == 2);
}
