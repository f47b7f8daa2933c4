#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qrsr/errors.hpp"

namespace qrsr {

enum class EcLevel { L, M, Q, H };

inline char ec_level_letter(EcLevel l) {
    switch (l) {
        case EcLevel::L: return 'L';
        case EcLevel::M: return 'M';
        case EcLevel::Q: return 'Q';
        case EcLevel::H: return 'H';
    }
    return '?';
}

inline EcLevel ec_level_from_letter(char c) {
    switch (c) {
        case 'L': case 'l': return EcLevel::L;
        case 'M': case 'm': return EcLevel::M;
        case 'Q': case 'q': return EcLevel::Q;
        case 'H': case 'h': return EcLevel::H;
    }
    throw InvalidConfig(std::string("unknown error correction level: ") + c);
}

struct Payload {
    std::vector<uint8_t> bytes;

    Payload() = default;
    explicit Payload(std::vector<uint8_t> b) : bytes(std::move(b)) {}

    static Payload from_string(std::string_view s) {
        return Payload(std::vector<uint8_t>(s.begin(), s.end()));
    }

    std::string to_string() const {
        return std::string(bytes.begin(), bytes.end());
    }

    bool operator==(const Payload&) const = default;
};

struct CodeConfig {
    int version = 3;
    EcLevel ec_level = EcLevel::M;
    int mask_id = 4;
    int module_px = 20;  // rendered module size in pixels
    int quiet_px = 80;   // quiet zone border in pixels

    int side() const { return 17 + 4 * version; }
    int raster_px() const { return side() * module_px + 2 * quiet_px; }

    void validate() const {
        if (version < 1 || version > 5)
            throw InvalidConfig("version must be in [1,5]");
        if (mask_id < 0 || mask_id > 7)
            throw InvalidConfig("mask id must be in [0,7]");
        if (module_px < 1)
            throw InvalidConfig("module_px must be positive");
        if (quiet_px < 0)
            throw InvalidConfig("quiet_px must be non-negative");
    }
};

// Module grid. cells: 1 = light, 0 = dark. function_mask: 1 marks fixed
// structure (finders with separators, timing, alignment, format info, the
// dark module); everything else carries codeword or remainder bits.
struct ModuleMatrix {
    int side = 0;
    std::vector<uint8_t> cells;
    std::vector<uint8_t> function_mask;

    ModuleMatrix() = default;
    explicit ModuleMatrix(int s)
        : side(s), cells(static_cast<size_t>(s) * s, 1),
          function_mask(static_cast<size_t>(s) * s, 0) {}

    size_t index(int row, int col) const {
        return static_cast<size_t>(row) * side + col;
    }
    uint8_t cell(int row, int col) const { return cells[index(row, col)]; }
    void set_cell(int row, int col, uint8_t v) { cells[index(row, col)] = v; }
    bool is_function(int row, int col) const { return function_mask[index(row, col)] != 0; }
    void mark_function(int row, int col) { function_mask[index(row, col)] = 1; }

    bool operator==(const ModuleMatrix&) const = default;
};

} // namespace qrsr
