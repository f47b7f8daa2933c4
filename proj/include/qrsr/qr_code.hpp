#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qrsr/image.hpp"
#include "qrsr/qr_types.hpp"
#include "qrsr/reed_solomon.hpp"

namespace qrsr {

namespace detail {

class BitWriter {
public:
    void append(uint32_t value, int bits) {
        for (int i = bits - 1; i >= 0; --i)
            bits_.push_back(static_cast<uint8_t>((value >> i) & 1));
    }
    size_t size() const { return bits_.size(); }
    const std::vector<uint8_t>& bits() const { return bits_; }

    std::vector<uint8_t> to_bytes(size_t byte_count) const {
        std::vector<uint8_t> out(byte_count, 0);
        for (size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) out[i / 8] |= static_cast<uint8_t>(0x80 >> (i % 8));
        return out;
    }

private:
    std::vector<uint8_t> bits_;
};

} // namespace detail

inline std::vector<int> alignment_coords(int version) {
    switch (version) {
        case 1: return {};
        case 2: return {6, 18};
        case 3: return {6, 22};
        case 4: return {6, 26};
        case 5: return {6, 30};
    }
    throw InvalidConfig("version must be in [1,5]");
}

inline int remainder_bits(int version) {
    return version == 1 ? 0 : 7; // versions 2..6 carry 7 leftover bits
}

inline bool mask_bit(int mask_id, int row, int col) {
    switch (mask_id) {
        case 0: return (row + col) % 2 == 0;
        case 1: return row % 2 == 0;
        case 2: return col % 3 == 0;
        case 3: return (row + col) % 3 == 0;
        case 4: return (row / 2 + col / 3) % 2 == 0;
        case 5: return row * col % 2 + row * col % 3 == 0;
        case 6: return (row * col % 2 + row * col % 3) % 2 == 0;
        case 7: return ((row + col) % 2 + row * col % 3) % 2 == 0;
    }
    throw InvalidConfig("mask id must be in [0,7]");
}

// 15 format bits: 5 data bits (level, mask) protected by BCH(15,5) with
// generator 0x537, XORed with the fixed pattern 0x5412. Bit i below means
// (bits >> i) & 1.
inline uint16_t format_bits(EcLevel level, int mask_id) {
    int level_bits = 0;
    switch (level) {
        case EcLevel::L: level_bits = 1; break;
        case EcLevel::M: level_bits = 0; break;
        case EcLevel::Q: level_bits = 3; break;
        case EcLevel::H: level_bits = 2; break;
    }
    const int data = level_bits << 3 | mask_id;
    int rem = data;
    for (int i = 0; i < 10; ++i)
        rem = (rem << 1) ^ ((rem >> 9) * 0x537);
    return static_cast<uint16_t>((data << 10 | rem) ^ 0x5412);
}

// Positions of format bit i (0..14) for each of the two copies, as
// (row, col).
inline std::pair<int, int> format_position_copy1(int i) {
    if (i <= 5) return {i, 8};
    if (i == 6) return {7, 8};
    if (i == 7) return {8, 8};
    if (i == 8) return {8, 7};
    return {8, 14 - i};
}

inline std::pair<int, int> format_position_copy2(int i, int side) {
    if (i < 8) return {8, side - 1 - i};
    return {side - 15 + i, 8};
}

// Fixed structure for a version: finders, separators, timing, alignment and
// the dark module drawn into cells; function_mask additionally covers the
// format info slots (their values depend on level/mask and are set later).
inline ModuleMatrix function_patterns(int version) {
    const int side = 17 + 4 * version;
    ModuleMatrix m(side);

    auto set = [&](int row, int col, bool dark) {
        m.set_cell(row, col, dark ? 0 : 1);
        m.mark_function(row, col);
    };

    for (int i = 8; i <= side - 9; ++i) {
        set(6, i, i % 2 == 0);
        set(i, 6, i % 2 == 0);
    }

    auto draw_finder = [&](int top, int left) {
        for (int dr = -1; dr <= 7; ++dr)
            for (int dc = -1; dc <= 7; ++dc) {
                const int r = top + dr, c = left + dc;
                if (r < 0 || c < 0 || r >= side || c >= side) continue;
                const int d = std::max(std::abs(dr - 3), std::abs(dc - 3));
                set(r, c, d != 2 && d != 4);
            }
    };
    draw_finder(0, 0);
    draw_finder(0, side - 7);
    draw_finder(side - 7, 0);

    const std::vector<int> coords = alignment_coords(version);
    const int last = static_cast<int>(coords.size()) - 1;
    for (int a = 0; a < static_cast<int>(coords.size()); ++a)
        for (int b = 0; b < static_cast<int>(coords.size()); ++b) {
            if ((a == 0 && b == 0) || (a == 0 && b == last) || (a == last && b == 0))
                continue;
            const int cr = coords[a], cc = coords[b];
            for (int dr = -2; dr <= 2; ++dr)
                for (int dc = -2; dc <= 2; ++dc)
                    set(cr + dr, cc + dc, std::max(std::abs(dr), std::abs(dc)) != 1);
        }

    for (int i = 0; i < 15; ++i) {
        auto [r1, c1] = format_position_copy1(i);
        auto [r2, c2] = format_position_copy2(i, side);
        m.mark_function(r1, c1);
        m.mark_function(r2, c2);
    }
    set(side - 8, 8, true); // dark module

    return m;
}

inline std::vector<uint8_t> classify_modules(const CodeConfig& cfg) {
    cfg.validate();
    return function_patterns(cfg.version).function_mask;
}

// All non-function positions in codeword placement order: column pairs from
// the right edge, alternating upward and downward, skipping column 6.
inline std::vector<std::pair<int, int>> data_region_walk(const ModuleMatrix& fn) {
    const int side = fn.side;
    std::vector<std::pair<int, int>> order;
    for (int right = side - 1; right >= 1; right -= 2) {
        if (right == 6) right = 5;
        for (int vert = 0; vert < side; ++vert) {
            for (int j = 0; j < 2; ++j) {
                const int col = right - j;
                const bool upward = ((right + 1) & 2) == 0;
                const int row = upward ? side - 1 - vert : vert;
                if (!fn.is_function(row, col)) order.emplace_back(row, col);
            }
        }
    }
    return order;
}

inline int byte_mode_capacity(int version, EcLevel level) {
    const RsBlockSpec spec = rs_block_spec(version, level);
    return (spec.data_codewords() * 8 - 12) / 8; // 4 mode bits + 8 count bits
}

// Payload to data codewords: byte mode header, payload, terminator, then
// alternating pad bytes.
inline std::vector<uint8_t> build_data_codewords(const Payload& payload, const CodeConfig& cfg) {
    cfg.validate();
    const RsBlockSpec spec = rs_block_spec(cfg.version, cfg.ec_level);
    const int capacity = byte_mode_capacity(cfg.version, cfg.ec_level);
    const int length = static_cast<int>(payload.bytes.size());
    if (length > capacity)
        throw CapacityExceeded("payload of " + std::to_string(length) +
                               " bytes exceeds capacity of " + std::to_string(capacity));

    const size_t total_bits = static_cast<size_t>(spec.data_codewords()) * 8;
    detail::BitWriter bw;
    bw.append(0x4, 4); // byte mode
    bw.append(static_cast<uint32_t>(length), 8);
    for (uint8_t b : payload.bytes) bw.append(b, 8);
    bw.append(0, std::min<int>(4, static_cast<int>(total_bits - bw.size())));

    std::vector<uint8_t> codewords = bw.to_bytes(spec.data_codewords());
    size_t filled = (bw.size() + 7) / 8;
    for (size_t i = filled, k = 0; i < codewords.size(); ++i, ++k)
        codewords[i] = (k % 2 == 0) ? 0xEC : 0x11;
    return codewords;
}

// Splits data codewords into blocks, appends per-block ec codewords and
// interleaves both parts column-wise.
inline std::vector<uint8_t> interleave_codewords(std::span<const uint8_t> data,
                                                 const RsBlockSpec& spec) {
    std::vector<std::vector<uint8_t>> data_blocks, ec_blocks;
    size_t off = 0;
    for (const auto& g : spec.groups)
        for (int i = 0; i < g.count; ++i) {
            data_blocks.emplace_back(data.begin() + off, data.begin() + off + g.data_codewords);
            ec_blocks.push_back(rs_encode_block(data_blocks.back(), g.ec_codewords()));
            off += g.data_codewords;
        }

    std::vector<uint8_t> out;
    out.reserve(spec.total_codewords());
    size_t max_data = 0;
    for (const auto& b : data_blocks) max_data = std::max(max_data, b.size());
    for (size_t i = 0; i < max_data; ++i)
        for (const auto& b : data_blocks)
            if (i < b.size()) out.push_back(b[i]);
    for (size_t i = 0; i < static_cast<size_t>(spec.ec_per_block()); ++i)
        for (const auto& b : ec_blocks) out.push_back(b[i]);
    return out;
}

// Builds the full symbol from finished data codewords: ec generation,
// interleaving, placement, masking, format info. Remainder bits are zero
// before masking, like everything else in the data region.
inline ModuleMatrix assemble_symbol(std::span<const uint8_t> data_codewords,
                                    const CodeConfig& cfg) {
    cfg.validate();
    const RsBlockSpec spec = rs_block_spec(cfg.version, cfg.ec_level);
    if (static_cast<int>(data_codewords.size()) != spec.data_codewords())
        throw InvalidConfig("data codeword count does not match block structure");

    const std::vector<uint8_t> sequence = interleave_codewords(data_codewords, spec);
    ModuleMatrix m = function_patterns(cfg.version);
    const std::vector<std::pair<int, int>> order = data_region_walk(m);

    for (size_t k = 0; k < order.size(); ++k) {
        const auto [row, col] = order[k];
        int bit = 0;
        if (k < sequence.size() * 8)
            bit = (sequence[k / 8] >> (7 - k % 8)) & 1;
        const bool dark = (bit != 0) != mask_bit(cfg.mask_id, row, col);
        m.set_cell(row, col, dark ? 0 : 1);
    }

    const uint16_t fmt = format_bits(cfg.ec_level, cfg.mask_id);
    for (int i = 0; i < 15; ++i) {
        const bool dark = (fmt >> i) & 1;
        auto [r1, c1] = format_position_copy1(i);
        auto [r2, c2] = format_position_copy2(i, m.side);
        m.set_cell(r1, c1, dark ? 0 : 1);
        m.set_cell(r2, c2, dark ? 0 : 1);
    }
    return m;
}

inline ModuleMatrix encode(const Payload& payload, const CodeConfig& cfg) {
    return assemble_symbol(build_data_codewords(payload, cfg), cfg);
}

// Paints the module grid into a fresh raster with a white quiet zone and
// records the grid geometry on the image.
inline PixelImage rasterize(const ModuleMatrix& m, const CodeConfig& cfg) {
    cfg.validate();
    if (m.side != cfg.side())
        throw ExtentMismatch("matrix side does not match version");
    const int s = cfg.module_px, q = cfg.quiet_px;
    PixelImage img(cfg.raster_px(), cfg.raster_px(), 1, 1.0);
    for (int row = 0; row < m.side; ++row)
        for (int col = 0; col < m.side; ++col) {
            const double v = m.cell(row, col) ? 1.0 : 0.0;
            for (int dy = 0; dy < s; ++dy)
                for (int dx = 0; dx < s; ++dx)
                    img.at(q + col * s + dx, q + row * s + dy) = v;
        }
    img.grid = GridGeometry{q, q, s, m.side};
    return img;
}

} // namespace qrsr
