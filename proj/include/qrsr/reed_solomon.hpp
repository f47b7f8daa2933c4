#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "qrsr/errors.hpp"
#include "qrsr/gf256.hpp"
#include "qrsr/qr_types.hpp"

namespace qrsr {

struct RsBlockGroup {
    int count = 0;
    int total_codewords = 0;
    int data_codewords = 0;

    int ec_codewords() const { return total_codewords - data_codewords; }
};

// Block layout for one (version, level) pair. All groups share the same
// error correction codeword count; later groups may carry one extra data
// codeword.
struct RsBlockSpec {
    int version = 0;
    EcLevel level = EcLevel::M;
    std::vector<RsBlockGroup> groups;

    int ec_per_block() const { return groups.front().ec_codewords(); }
    int correctable_per_block() const { return ec_per_block() / 2; }

    int block_count() const {
        int n = 0;
        for (const auto& g : groups) n += g.count;
        return n;
    }
    int total_codewords() const {
        int n = 0;
        for (const auto& g : groups) n += g.count * g.total_codewords;
        return n;
    }
    int data_codewords() const {
        int n = 0;
        for (const auto& g : groups) n += g.count * g.data_codewords;
        return n;
    }

    // Sizes of each block's data part, in transmission order.
    std::vector<int> block_data_sizes() const {
        std::vector<int> sizes;
        for (const auto& g : groups)
            for (int i = 0; i < g.count; ++i) sizes.push_back(g.data_codewords);
        return sizes;
    }
};

inline RsBlockSpec rs_block_spec(int version, EcLevel level) {
    auto spec = [&](std::vector<RsBlockGroup> groups) {
        return RsBlockSpec{version, level, std::move(groups)};
    };
    switch (version * 4 + static_cast<int>(level)) {
        case 1 * 4 + 0: return spec({{1, 26, 19}});
        case 1 * 4 + 1: return spec({{1, 26, 16}});
        case 1 * 4 + 2: return spec({{1, 26, 13}});
        case 1 * 4 + 3: return spec({{1, 26, 9}});
        case 2 * 4 + 0: return spec({{1, 44, 34}});
        case 2 * 4 + 1: return spec({{1, 44, 28}});
        case 2 * 4 + 2: return spec({{1, 44, 22}});
        case 2 * 4 + 3: return spec({{1, 44, 16}});
        case 3 * 4 + 0: return spec({{1, 70, 55}});
        case 3 * 4 + 1: return spec({{1, 70, 44}});
        case 3 * 4 + 2: return spec({{2, 35, 17}});
        case 3 * 4 + 3: return spec({{2, 35, 13}});
        case 4 * 4 + 0: return spec({{1, 100, 80}});
        case 4 * 4 + 1: return spec({{2, 50, 32}});
        case 4 * 4 + 2: return spec({{2, 50, 24}});
        case 4 * 4 + 3: return spec({{4, 25, 9}});
        case 5 * 4 + 0: return spec({{1, 134, 108}});
        case 5 * 4 + 1: return spec({{2, 67, 43}});
        case 5 * 4 + 2: return spec({{2, 33, 15}, {2, 34, 16}});
        case 5 * 4 + 3: return spec({{2, 33, 11}, {2, 34, 12}});
    }
    throw InvalidConfig("no block structure for this version/level");
}

// Generator polynomial prod_{i=0..n-1} (x - alpha^i), highest degree first,
// normalized so the leading coefficient is 1.
inline std::vector<uint8_t> rs_generator_poly(int ec_count) {
    std::vector<uint8_t> g{1};
    for (int i = 0; i < ec_count; ++i) {
        std::vector<uint8_t> next(g.size() + 1, 0);
        const uint8_t root = gf256::pow_alpha(i);
        for (size_t j = 0; j < g.size(); ++j) {
            next[j] ^= g[j];
            next[j + 1] ^= gf256::mul(g[j], root);
        }
        g = std::move(next);
    }
    return g;
}

// Remainder of data(x) * x^ec divided by the generator polynomial.
inline std::vector<uint8_t> rs_encode_block(std::span<const uint8_t> data, int ec_count) {
    const std::vector<uint8_t> gen = rs_generator_poly(ec_count);
    std::vector<uint8_t> rem(ec_count, 0);
    for (uint8_t d : data) {
        const uint8_t factor = d ^ rem[0];
        rem.erase(rem.begin());
        rem.push_back(0);
        if (factor)
            for (int j = 0; j < ec_count; ++j)
                rem[j] ^= gf256::mul(factor, gen[j + 1]);
    }
    return rem;
}

namespace detail {

inline std::vector<uint8_t> rs_syndromes(std::span<const uint8_t> word, int ec_count) {
    std::vector<uint8_t> syn(ec_count, 0);
    for (int i = 0; i < ec_count; ++i) {
        const uint8_t a = gf256::pow_alpha(i);
        uint8_t s = 0;
        for (uint8_t w : word) s = static_cast<uint8_t>(gf256::mul(s, a) ^ w);
        syn[i] = s;
    }
    return syn;
}

// Berlekamp-Massey; returns the error locator, lowest degree first.
inline std::vector<uint8_t> rs_error_locator(const std::vector<uint8_t>& syn) {
    std::vector<uint8_t> lambda{1}, prev{1};
    int len = 0, shift = 1;
    uint8_t prev_disc = 1;
    for (size_t n = 0; n < syn.size(); ++n) {
        uint8_t disc = syn[n];
        for (int i = 1; i <= len; ++i)
            if (i < static_cast<int>(lambda.size()))
                disc ^= gf256::mul(lambda[i], syn[n - i]);
        if (disc == 0) {
            ++shift;
            continue;
        }
        std::vector<uint8_t> next = lambda;
        const uint8_t scale = gf256::div(disc, prev_disc);
        if (next.size() < prev.size() + shift) next.resize(prev.size() + shift, 0);
        for (size_t i = 0; i < prev.size(); ++i)
            next[i + shift] ^= gf256::mul(scale, prev[i]);
        if (2 * len <= static_cast<int>(n)) {
            prev = std::move(lambda);
            prev_disc = disc;
            len = static_cast<int>(n) + 1 - len;
            shift = 1;
        } else {
            ++shift;
        }
        lambda = std::move(next);
    }
    while (lambda.size() > 1 && lambda.back() == 0) lambda.pop_back();
    return lambda;
}

inline uint8_t poly_eval_low_first(const std::vector<uint8_t>& p, uint8_t x) {
    uint8_t acc = 0;
    for (size_t i = p.size(); i-- > 0;)
        acc = static_cast<uint8_t>(gf256::mul(acc, x) ^ p[i]);
    return acc;
}

} // namespace detail

struct RsCorrection {
    std::vector<uint8_t> codeword; // corrected, data followed by ec
    int errors_corrected = 0;
};

// Corrects up to floor(ec/2) byte errors in data||ec or throws
// RsUncorrectable. Root count, position range and a syndrome recheck guard
// against accepting a miscorrection beyond that radius.
inline RsCorrection rs_correct_block(std::span<const uint8_t> received, int ec_count) {
    const int n = static_cast<int>(received.size());
    std::vector<uint8_t> word(received.begin(), received.end());
    std::vector<uint8_t> syn = detail::rs_syndromes(word, ec_count);
    if (std::all_of(syn.begin(), syn.end(), [](uint8_t s) { return s == 0; }))
        return {std::move(word), 0};

    const std::vector<uint8_t> lambda = detail::rs_error_locator(syn);
    const int degree = static_cast<int>(lambda.size()) - 1;
    if (degree == 0 || degree > ec_count / 2)
        throw RsUncorrectable("error locator degree exceeds correction radius");

    // omega = syn * lambda mod x^ec
    std::vector<uint8_t> omega(ec_count, 0);
    for (size_t i = 0; i < lambda.size(); ++i)
        for (size_t j = 0; i + j < static_cast<size_t>(ec_count) && j < syn.size(); ++j)
            omega[i + j] ^= gf256::mul(lambda[i], syn[j]);

    // formal derivative of lambda: odd-degree terms survive over GF(2)
    std::vector<uint8_t> dlambda;
    for (size_t i = 1; i < lambda.size(); i += 2) {
        dlambda.push_back(lambda[i]);
        dlambda.push_back(0);
    }

    int roots = 0;
    for (int pos = 0; pos < n; ++pos) {
        const uint8_t x_inv = gf256::pow_alpha(-pos);
        if (detail::poly_eval_low_first(lambda, x_inv) != 0) continue;
        ++roots;
        const uint8_t num = detail::poly_eval_low_first(omega, x_inv);
        const uint8_t den = detail::poly_eval_low_first(dlambda, x_inv);
        if (den == 0)
            throw RsUncorrectable("degenerate error locator derivative");
        const uint8_t magnitude = gf256::mul(gf256::pow_alpha(pos), gf256::div(num, den));
        if (magnitude == 0)
            throw RsUncorrectable("zero error magnitude");
        word[n - 1 - pos] ^= magnitude;
    }
    if (roots != degree)
        throw RsUncorrectable("error locator roots do not match its degree");

    syn = detail::rs_syndromes(word, ec_count);
    if (!std::all_of(syn.begin(), syn.end(), [](uint8_t s) { return s == 0; }))
        throw RsUncorrectable("corrected word fails the syndrome check");
    return {std::move(word), degree};
}

} // namespace qrsr
