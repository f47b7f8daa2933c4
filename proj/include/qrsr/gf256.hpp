#pragma once

#include <array>
#include <cstdint>

namespace qrsr::gf256 {

// GF(2^8) with the reduction polynomial x^8+x^4+x^3+x^2+1 and generator
// alpha = 2. exp is doubled so mul can skip the mod-255 step.
inline constexpr int kPrimitivePoly = 0x11d;

struct Tables {
    std::array<uint8_t, 512> exp{};
    std::array<int, 256> log{};

    Tables() {
        int v = 1;
        for (int i = 0; i < 255; ++i) {
            exp[i] = static_cast<uint8_t>(v);
            log[v] = i;
            v <<= 1;
            if (v & 0x100) v ^= kPrimitivePoly;
        }
        for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
        log[0] = -1;
    }
};

inline const Tables& tables() {
    static const Tables t;
    return t;
}

inline uint8_t add(uint8_t a, uint8_t b) { return a ^ b; }

inline uint8_t mul(uint8_t a, uint8_t b) {
    if (a == 0 || b == 0) return 0;
    const Tables& t = tables();
    return t.exp[t.log[a] + t.log[b]];
}

inline uint8_t pow_alpha(int e) {
    e %= 255;
    if (e < 0) e += 255;
    return tables().exp[e];
}

inline uint8_t inv(uint8_t a) {
    // caller must keep zero out; log[0] is a sentinel
    return tables().exp[255 - tables().log[a]];
}

inline uint8_t div(uint8_t a, uint8_t b) {
    return mul(a, inv(b));
}

} // namespace qrsr::gf256
