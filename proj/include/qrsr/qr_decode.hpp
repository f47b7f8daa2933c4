#pragma once

#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "qrsr/qr_code.hpp"
#include "qrsr/sampling.hpp"

namespace qrsr {

struct DecodeResult {
    Payload payload;
    EcLevel ec_level = EcLevel::M;
    int mask_id = 0;
    std::vector<int> block_corrections;

    int total_corrections() const {
        return std::accumulate(block_corrections.begin(), block_corrections.end(), 0);
    }
};

namespace detail {

struct FormatInfo {
    EcLevel level;
    int mask_id;
};

// Nearest valid format code within Hamming distance 3; the code's minimum
// distance of 7 makes that choice unique.
inline std::optional<FormatInfo> match_format(uint16_t read) {
    for (EcLevel level : {EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H})
        for (int mask = 0; mask < 8; ++mask) {
            const uint16_t code = format_bits(level, mask);
            if (std::popcount(static_cast<uint16_t>(code ^ read)) <= 3)
                return FormatInfo{level, mask};
        }
    return std::nullopt;
}

class BitReader {
public:
    explicit BitReader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}

    uint32_t take(int bits) {
        uint32_t v = 0;
        for (int i = 0; i < bits; ++i) {
            v = (v << 1) | ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1);
            ++pos_;
        }
        return v;
    }
    size_t remaining() const { return bytes_.size() * 8 - pos_; }

private:
    const std::vector<uint8_t>& bytes_;
    size_t pos_ = 0;
};

} // namespace detail

// Decodes a sampled cell array. Reads and error-corrects the format info,
// unmasks, deinterleaves, corrects each block and parses the byte segment.
inline DecodeResult decode_cells(const std::vector<uint8_t>& cells, int version) {
    const int side = 17 + 4 * version;
    if (static_cast<int>(cells.size()) != side * side)
        throw ExtentMismatch("cell count does not match version");
    auto cell = [&](int r, int c) { return cells[static_cast<size_t>(r) * side + c]; };

    uint16_t copy1 = 0, copy2 = 0;
    for (int i = 0; i < 15; ++i) {
        auto [r1, c1] = format_position_copy1(i);
        auto [r2, c2] = format_position_copy2(i, side);
        copy1 |= static_cast<uint16_t>((cell(r1, c1) ? 0 : 1) << i);
        copy2 |= static_cast<uint16_t>((cell(r2, c2) ? 0 : 1) << i);
    }
    std::optional<detail::FormatInfo> fmt = detail::match_format(copy1);
    if (!fmt) fmt = detail::match_format(copy2);
    if (!fmt)
        throw FormatInfoUnreadable("both format info copies are damaged beyond repair");

    const RsBlockSpec spec = rs_block_spec(version, fmt->level);
    const ModuleMatrix fn = function_patterns(version);
    const std::vector<std::pair<int, int>> order = data_region_walk(fn);

    std::vector<uint8_t> sequence(spec.total_codewords(), 0);
    for (size_t k = 0; k < sequence.size() * 8; ++k) {
        const auto [row, col] = order[k];
        const bool dark = cell(row, col) == 0;
        const bool bit = dark != mask_bit(fmt->mask_id, row, col);
        if (bit) sequence[k / 8] |= static_cast<uint8_t>(0x80 >> (k % 8));
    }

    // undo the column-wise interleave of data and ec parts
    const std::vector<int> data_sizes = spec.block_data_sizes();
    const int blocks = spec.block_count();
    const int ec = spec.ec_per_block();
    std::vector<std::vector<uint8_t>> words(blocks);
    size_t pos = 0;
    size_t max_data = *std::max_element(data_sizes.begin(), data_sizes.end());
    for (size_t i = 0; i < max_data; ++i)
        for (int b = 0; b < blocks; ++b)
            if (i < static_cast<size_t>(data_sizes[b])) words[b].push_back(sequence[pos++]);
    for (int i = 0; i < ec; ++i)
        for (int b = 0; b < blocks; ++b) words[b].push_back(sequence[pos++]);

    DecodeResult result;
    result.ec_level = fmt->level;
    result.mask_id = fmt->mask_id;
    std::vector<uint8_t> data_bytes;
    for (int b = 0; b < blocks; ++b) {
        RsCorrection fixed = rs_correct_block(words[b], ec);
        result.block_corrections.push_back(fixed.errors_corrected);
        data_bytes.insert(data_bytes.end(), fixed.codeword.begin(),
                          fixed.codeword.begin() + data_sizes[b]);
    }

    detail::BitReader reader(data_bytes);
    if (reader.take(4) != 0x4)
        throw Error("only byte mode segments are supported");
    const uint32_t count = reader.take(8);
    if (count * 8 > reader.remaining())
        throw Error("segment length exceeds available data");
    result.payload.bytes.reserve(count);
    for (uint32_t i = 0; i < count; ++i)
        result.payload.bytes.push_back(static_cast<uint8_t>(reader.take(8)));
    return result;
}

// Decodes from pixels. Without a homography the image must carry grid
// geometry; with one, sample points come from the canonical raster of `cfg`
// mapped through it.
inline DecodeResult decode(const PixelImage& image, const CodeConfig& cfg,
                           const Homography* homography = nullptr) {
    cfg.validate();
    const GrayImage gray = to_grayscale(image);
    std::vector<uint8_t> cells;
    if (homography) {
        const GridGeometry canon{cfg.quiet_px, cfg.quiet_px, cfg.module_px, cfg.side()};
        cells = sample_cells_mapped(gray, canon, *homography);
    } else {
        if (!gray.grid)
            throw InvalidConfig("image carries no grid geometry");
        if (gray.grid->modules != cfg.side())
            throw ExtentMismatch("grid side does not match version");
        cells = sample_cells(gray, *gray.grid);
    }
    return decode_cells(cells, cfg.version);
}

inline std::optional<DecodeResult> try_decode(const PixelImage& image, const CodeConfig& cfg,
                                              const Homography* homography = nullptr) {
    try {
        return decode(image, cfg, homography);
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace qrsr
