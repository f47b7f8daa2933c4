#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <vector>

#include "qrsr/qr_code.hpp"
#include "qrsr/sampling.hpp"
#include "qrsr/scan_loss.hpp"

namespace qrsr {

// Dense bit vector over the module grid, used for fast XOR and popcount.
struct BitGrid {
    int side = 0;
    std::vector<uint64_t> words;

    explicit BitGrid(int s = 0)
        : side(s), words((static_cast<size_t>(s) * s + 63) / 64, 0) {}

    static BitGrid from_cells(const std::vector<uint8_t>& cells, int side) {
        BitGrid g(side);
        for (size_t i = 0; i < cells.size(); ++i)
            if (cells[i]) g.words[i / 64] |= uint64_t{1} << (i % 64);
        return g;
    }

    bool get(size_t i) const { return (words[i / 64] >> (i % 64)) & 1; }
    void flip(size_t i) { words[i / 64] ^= uint64_t{1} << (i % 64); }

    void operator^=(const BitGrid& o) {
        for (size_t i = 0; i < words.size(); ++i) words[i] ^= o.words[i];
    }

    bool any() const {
        for (uint64_t w : words)
            if (w) return true;
        return false;
    }

    template <class Fn>
    void for_each_set(Fn&& fn) const {
        for (size_t wi = 0; wi < words.size(); ++wi) {
            uint64_t w = words[wi];
            while (w) {
                const int b = std::countr_zero(w);
                fn(wi * 64 + b);
                w &= w - 1;
            }
        }
    }
};

// One free codeword bit together with the set of modules that flip when it
// does (its own data module plus the ec ripple).
struct FreeBitVector {
    BitGrid footprint;
    std::vector<uint32_t> bits; // indices into the free bit list, xor-combined
};

struct FreeBitBasis {
    CodeConfig cfg;
    std::vector<uint8_t> base_codewords;
    ModuleMatrix base_matrix;
    std::vector<int> free_bit_positions; // absolute bit index into the data codewords
    std::vector<FreeBitVector> vectors;
};

// Free bits are the pad codewords that follow the terminator; flipping any
// of them leaves header and payload intact. Each basis vector is obtained
// by re-encoding with that single bit flipped and diffing module grids.
inline FreeBitBasis free_bit_basis(const Payload& payload, const CodeConfig& cfg) {
    cfg.validate();
    FreeBitBasis basis;
    basis.cfg = cfg;
    basis.base_codewords = build_data_codewords(payload, cfg);
    basis.base_matrix = assemble_symbol(basis.base_codewords, cfg);

    const int first_free_byte = static_cast<int>(payload.bytes.size()) + 2;
    const int total_bytes = static_cast<int>(basis.base_codewords.size());
    if (first_free_byte >= total_bytes)
        throw NoFreeBits("payload fills every data codeword");

    const BitGrid base_bits = BitGrid::from_cells(basis.base_matrix.cells, basis.base_matrix.side);
    std::vector<uint8_t> work = basis.base_codewords;
    for (int byte = first_free_byte; byte < total_bytes; ++byte)
        for (int bit = 0; bit < 8; ++bit) {
            const int abs_bit = byte * 8 + bit;
            work[byte] ^= static_cast<uint8_t>(0x80 >> bit);
            const ModuleMatrix flipped = assemble_symbol(work, cfg);
            work[byte] ^= static_cast<uint8_t>(0x80 >> bit);

            FreeBitVector v;
            v.footprint = BitGrid::from_cells(flipped.cells, flipped.side);
            v.footprint ^= base_bits;
            v.bits = {static_cast<uint32_t>(basis.free_bit_positions.size())};
            basis.free_bit_positions.push_back(abs_bit);
            basis.vectors.push_back(std::move(v));
        }
    return basis;
}

struct TargetPattern {
    int side = 0;
    std::vector<uint8_t> desired; // 1 = light, per module
    std::vector<double> weight;   // confidence, 0 at mid-gray

    uint8_t desired_at(int row, int col) const {
        return desired[static_cast<size_t>(row) * side + col];
    }
};

// Resamples a reference image onto the canonical raster of `cfg` when its
// extents differ, and attaches the canonical grid geometry.
inline PixelImage canonicalize_reference(const PixelImage& reference, const CodeConfig& cfg) {
    cfg.validate();
    const GridGeometry canon{cfg.quiet_px, cfg.quiet_px, cfg.module_px, cfg.side()};
    PixelImage img = reference;
    if (img.width != cfg.raster_px() || img.height != cfg.raster_px()) {
        img = resample(img, cfg.raster_px(), cfg.raster_px());
    }
    img.grid = canon;
    return img;
}

// Per-module reading the reference asks for, with a weight measuring how
// decisively it asks: the kernel-weighted mean's distance from mid-gray.
inline TargetPattern desired_pattern(const PixelImage& reference, const CodeConfig& cfg) {
    const PixelImage canon = canonicalize_reference(reference, cfg);
    const GrayImage gray = to_grayscale(canon);
    const GridGeometry& g = *canon.grid;
    const GaussianKernel kernel = GaussianKernel::for_module_px(g.module_px);
    const CentralFilter filter = CentralFilter::for_module_px(g.module_px);

    TargetPattern p;
    p.side = g.modules;
    p.desired.resize(static_cast<size_t>(p.side) * p.side);
    p.weight.resize(p.desired.size());
    for (int row = 0; row < p.side; ++row)
        for (int col = 0; col < p.side; ++col) {
            const size_t k = static_cast<size_t>(row) * p.side + col;
            p.desired[k] = binarize_mean(module_center_mean(gray, g, filter, row, col));
            double mean = 0.0;
            const int x0 = g.origin_x + col * g.module_px;
            const int y0 = g.origin_y + row * g.module_px;
            for (int dy = 0; dy < g.module_px; ++dy)
                for (int dx = 0; dx < g.module_px; ++dx)
                    mean += kernel.at(dx, dy) * gray.at(x0 + dx, y0 + dy);
            p.weight[k] = std::abs(2.0 * mean - 1.0);
        }
    return p;
}

struct MatchReport {
    int free_bits = 0;
    int rank = 0;
    int vectors_applied = 0;
    double agreement_before = 0.0; // weighted fraction of modules matching the pattern
    double agreement_after = 0.0;
};

struct QartResult {
    ModuleMatrix matrix;
    MatchReport report;
};

// Steers free codeword bits so the encoded symbol matches the desired
// pattern as closely as the code allows. Pivots are claimed in decreasing
// weight order, every pivot module is set to its desired value, and greedy
// strict-improvement passes then mop up the ripple modules. The result is a
// valid symbol for the same payload by construction, and never agrees less
// than the untouched base symbol.
inline QartResult qart_transform(const Payload& payload, const CodeConfig& cfg,
                                 const TargetPattern& pattern) {
    FreeBitBasis basis = free_bit_basis(payload, cfg);
    const int side = basis.base_matrix.side;
    if (pattern.side != side)
        throw ExtentMismatch("pattern side does not match symbol side");
    const size_t n_modules = static_cast<size_t>(side) * side;

    const BitGrid desired = BitGrid::from_cells(pattern.desired, side);
    BitGrid current = BitGrid::from_cells(basis.base_matrix.cells, side);

    auto agreement = [&](const BitGrid& cur) {
        double num = 0.0, den = 0.0;
        for (size_t k = 0; k < n_modules; ++k) {
            den += pattern.weight[k];
            if (cur.get(k) == desired.get(k)) num += pattern.weight[k];
        }
        return den > 0.0 ? num / den : 1.0;
    };
    const double base_agreement = agreement(current);

    // module indices by priority: heavier first, then row-major
    std::vector<size_t> priority(n_modules);
    std::iota(priority.begin(), priority.end(), size_t{0});
    std::stable_sort(priority.begin(), priority.end(), [&](size_t a, size_t b) {
        return pattern.weight[a] > pattern.weight[b];
    });

    std::vector<FreeBitVector>& rows = basis.vectors;
    std::vector<char> used(rows.size(), 0);
    std::vector<std::pair<size_t, size_t>> pivots; // (module, row) in claim order
    for (size_t mod : priority) {
        size_t found = rows.size();
        for (size_t r = 0; r < rows.size(); ++r)
            if (!used[r] && rows[r].footprint.get(mod)) {
                found = r;
                break;
            }
        if (found == rows.size()) continue;
        used[found] = 1;
        pivots.emplace_back(mod, found);
        for (size_t r = 0; r < rows.size(); ++r)
            if (r != found && rows[r].footprint.get(mod)) {
                rows[r].footprint ^= rows[found].footprint;
                for (uint32_t b : rows[found].bits) {
                    auto it = std::find(rows[r].bits.begin(), rows[r].bits.end(), b);
                    if (it == rows[r].bits.end())
                        rows[r].bits.push_back(b);
                    else
                        rows[r].bits.erase(it);
                }
            }
        if (pivots.size() == rows.size()) break;
    }

    // main pass: force every pivot module to its desired value
    std::vector<char> applied(rows.size(), 0);
    for (auto [mod, r] : pivots)
        if (current.get(mod) != desired.get(mod)) {
            current ^= rows[r].footprint;
            applied[r] ^= 1;
        }

    // greedy passes over pivot rows while any toggle strictly helps
    auto toggle_gain = [&](const FreeBitVector& row) {
        double gain = 0.0;
        row.footprint.for_each_set([&](size_t k) {
            const double w = pattern.weight[k];
            gain += current.get(k) == desired.get(k) ? -w : w;
        });
        return gain;
    };
    for (bool improved = true; improved;) {
        improved = false;
        for (auto [mod, r] : pivots)
            if (toggle_gain(rows[r]) > 1e-12) {
                current ^= rows[r].footprint;
                applied[r] ^= 1;
                improved = true;
            }
    }

    QartResult out;
    out.report.free_bits = static_cast<int>(rows.size());
    out.report.rank = static_cast<int>(pivots.size());
    out.report.agreement_before = base_agreement;

    const double final_agreement = agreement(current);
    if (final_agreement < base_agreement) {
        // never hand back something worse than the plain symbol
        out.matrix = basis.base_matrix;
        out.report.vectors_applied = 0;
        out.report.agreement_after = base_agreement;
        return out;
    }

    // rebuild from codewords so the result is a round-trip of the encoder
    std::vector<uint8_t> codewords = basis.base_codewords;
    int applied_count = 0;
    for (size_t r = 0; r < rows.size(); ++r)
        if (applied[r]) {
            ++applied_count;
            for (uint32_t b : rows[r].bits) {
                const int abs_bit = basis.free_bit_positions[b];
                codewords[abs_bit / 8] ^= static_cast<uint8_t>(0x80 >> (abs_bit % 8));
            }
        }
    out.matrix = assemble_symbol(codewords, cfg);
    out.report.vectors_applied = applied_count;
    out.report.agreement_after = final_agreement;

    const BitGrid check = BitGrid::from_cells(out.matrix.cells, side);
    for (size_t i = 0; i < check.words.size(); ++i)
        if (check.words[i] != current.words[i])
            throw Error("internal: codeword replay diverged from bit tracking");
    return out;
}

} // namespace qrsr
