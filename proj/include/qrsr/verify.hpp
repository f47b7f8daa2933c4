#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qrsr/qr_decode.hpp"
#include "qrsr/scan_loss.hpp"
#include "qrsr/tilt.hpp"
#include "qrsr/util.hpp"

namespace qrsr {

struct SsrCase {
    PixelImage image;
    Payload expected;
    std::optional<Homography> homography; // maps canonical raster pixels into image
    std::string id;
};

struct SsrItem {
    std::string id;
    bool scannable = false;
    int corrections = 0;
    std::string failure; // empty when scannable
};

struct SsrReport {
    int total = 0;
    int scanned = 0;
    double ssr = 0.0;
    std::vector<SsrItem> items;
};

// Scan success rate: the fraction of cases whose image decodes to exactly
// the expected payload.
inline SsrReport compute_ssr(const std::vector<SsrCase>& cases, const CodeConfig& cfg,
                             int jobs = 1) {
    SsrReport report;
    report.total = static_cast<int>(cases.size());
    report.items = parallel_map<SsrItem>(cases.size(), jobs, [&](size_t i) {
        const SsrCase& c = cases[i];
        SsrItem item;
        item.id = c.id.empty() ? std::to_string(i) : c.id;
        try {
            const Homography* h = c.homography ? &*c.homography : nullptr;
            const DecodeResult r = decode(c.image, cfg, h);
            if (r.payload == c.expected) {
                item.scannable = true;
                item.corrections = r.total_corrections();
            } else {
                item.failure = "decoded to a different payload";
            }
        } catch (const Error& e) {
            item.failure = e.what();
        }
        return item;
    });
    for (const auto& item : report.items)
        if (item.scannable) ++report.scanned;
    report.ssr = report.total ? static_cast<double>(report.scanned) / report.total : 0.0;
    return report;
}

struct TiltSweepRow {
    double degrees = 0.0;
    SsrReport report;
};

// Warps every case through each angle and measures ssr with the matching
// homography handed to the decoder.
inline std::vector<TiltSweepRow> tilt_sweep(const std::vector<SsrCase>& cases,
                                            const std::vector<double>& angles,
                                            const CodeConfig& cfg, double focal_length = 1.2,
                                            int jobs = 1) {
    std::vector<TiltSweepRow> rows;
    for (double deg : angles) {
        std::vector<SsrCase> warped(cases.size());
        const TiltSpec spec{deg, focal_length};
        auto done = parallel_map<char>(cases.size(), jobs, [&](size_t i) {
            TiltResult t = simulate_tilt(cases[i].image, spec);
            warped[i] = SsrCase{std::move(t.image), cases[i].expected, t.grid_to_image,
                                cases[i].id};
            return char{0};
        });
        (void)done;
        rows.push_back(TiltSweepRow{deg, compute_ssr(warped, cfg, jobs)});
    }
    return rows;
}

// Marks modules whose sampled reading disagrees with the target by tinting
// them red; everything else keeps its colors.
inline PixelImage overlay_errors(const PixelImage& image, const ModuleMatrix& target) {
    const SrlReport report = scan_loss(image, target);
    const GridGeometry& g = *image.grid;
    PixelImage out = expand_channels(image, 3);
    for (int row = 0; row < target.side; ++row)
        for (int col = 0; col < target.side; ++col) {
            if (!report.module(row, col).phi) continue;
            const int x0 = g.origin_x + col * g.module_px;
            const int y0 = g.origin_y + row * g.module_px;
            for (int dy = 0; dy < g.module_px; ++dy)
                for (int dx = 0; dx < g.module_px; ++dx) {
                    double& r = out.at(x0 + dx, y0 + dy, 0);
                    double& gg = out.at(x0 + dx, y0 + dy, 1);
                    double& b = out.at(x0 + dx, y0 + dy, 2);
                    r = 0.5 + 0.5 * r;
                    gg *= 0.5;
                    b *= 0.5;
                }
        }
    return out;
}

} // namespace qrsr
