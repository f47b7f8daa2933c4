// Acceptance gate: ten end-to-end checks, one line each, exit 0 only when
// every one passes. Tolerances and budgets are pinned below.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qrsr/qrsr.hpp"
#include "support/synthetic.hpp"

using namespace qrsr;

namespace {

// pinned tolerances and budgets
constexpr double kGradTol = 1e-4;        // max relative gradient error
constexpr double kGradProbeStep = 1e-4;  // finite difference step
constexpr double kGradSkipBand = 0.01;   // keep probes away from the read threshold
constexpr double kTiltSsrMin45 = 0.95;   // minimum ssr at the steepest angle
constexpr double kLevelSsrMinL = 0.96;   // minimum ssr for level L repairs
constexpr double kBudget1 = 30.0, kBudget2 = 60.0, kBudget3 = 300.0, kBudget67 = 600.0;

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

uint64_t fnv1a(uint64_t h, const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

void hash_bytes(uint64_t& h, const void* p, size_t n) { h = fnv1a(h, p, n); }

void hash_u64(uint64_t& h, uint64_t v) { hash_bytes(h, &v, sizeof v); }

void hash_double(uint64_t& h, double v) { hash_bytes(h, &v, sizeof v); }

void hash_image(uint64_t& h, const PixelImage& img) {
    hash_u64(h, static_cast<uint64_t>(img.width));
    hash_u64(h, static_cast<uint64_t>(img.height));
    hash_u64(h, static_cast<uint64_t>(img.channels));
    hash_bytes(h, img.values.data(), img.values.size() * sizeof(double));
}

void hash_trace(uint64_t& h, const RefineTrace& t) {
    hash_u64(h, t.iterations.size());
    for (const auto& it : t.iterations) {
        hash_double(h, it.loss);
        hash_double(h, it.srl);
        hash_double(h, it.perceptual);
        hash_double(h, it.error_rate);
        hash_double(h, it.step);
        hash_u64(h, static_cast<uint64_t>(it.mismatch_count));
    }
    hash_double(h, t.final_error_rate);
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 1) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

const Payload kPayload = Payload::from_string("Thanks reviewer!");

// ---------------------------------------------------------------- criterion 1
Outcome criterion1() {
    const auto t0 = Clock::now();
    CodeConfig cfg; // version 3, level M, mask 4, 20 px modules, 80 px quiet
    std::mt19937 rng(101);
    std::uniform_int_distribution<int> len(1, byte_mode_capacity(cfg.version, cfg.ec_level));
    int ok = 0;
    const int total = 1000;
    for (int i = 0; i < total; ++i) {
        const Payload payload = i == 0 ? kPayload : testsupport::random_payload(rng, len(rng));
        const PixelImage img = rasterize(encode(payload, cfg), cfg);
        try {
            const DecodeResult r = decode(img, cfg);
            if (r.payload == payload && r.total_corrections() == 0) ++ok;
        } catch (const Error&) {
        }
    }
    const double secs = secs_since(t0);
    Outcome o;
    o.pass = ok == total && secs < kBudget1;
    o.detail = std::to_string(ok) + "/" + std::to_string(total) +
               " raster round trips with zero corrections in " + fmt(secs) + "s (budget " +
               fmt(kBudget1, 0) + "s)";
    return o;
}

// ---------------------------------------------------------------- criterion 2
Outcome criterion2() {
    const auto t0 = Clock::now();
    CodeConfig cfg;
    const ModuleMatrix fn = function_patterns(cfg.version);
    const auto order = data_region_walk(fn);
    std::mt19937 rng(202);
    std::uniform_int_distribution<int> len(1, 42);

    int at_radius_ok = 0, beyond_ok = 0;
    const int total = 200;
    for (int i = 0; i < total; ++i) {
        const Payload payload = testsupport::random_payload(rng, len(rng));
        const ModuleMatrix clean = encode(payload, cfg);

        std::vector<int> bytes(70);
        for (size_t k = 0; k < bytes.size(); ++k) bytes[k] = static_cast<int>(k);
        std::shuffle(bytes.begin(), bytes.end(), rng);

        ModuleMatrix damaged = clean;
        for (int k = 0; k < 13; ++k) {
            const size_t bit = static_cast<size_t>(bytes[k]) * 8 + (rng() % 8);
            const auto [row, col] = order[bit];
            damaged.set_cell(row, col, damaged.cell(row, col) ? 0 : 1);
        }
        try {
            const DecodeResult r = i % 10 == 0 ? decode(rasterize(damaged, cfg), cfg)
                                               : decode_cells(damaged.cells, cfg.version);
            if (r.payload == payload && r.total_corrections() == 13) ++at_radius_ok;
        } catch (const Error&) {
        }

        ModuleMatrix beyond = damaged;
        const size_t extra = static_cast<size_t>(bytes[13]) * 8 + (rng() % 8);
        const auto [row, col] = order[extra];
        beyond.set_cell(row, col, beyond.cell(row, col) ? 0 : 1);
        bool silently_original = false;
        try {
            silently_original = decode_cells(beyond.cells, cfg.version).payload == payload;
        } catch (const Error&) {
        }
        if (!silently_original) ++beyond_ok;
    }
    const double secs = secs_since(t0);
    Outcome o;
    o.pass = at_radius_ok == total && beyond_ok == total && secs < kBudget2;
    o.detail = std::to_string(at_radius_ok) + "/" + std::to_string(total) +
               " corrected at 13 byte errors, " + std::to_string(beyond_ok) + "/" +
               std::to_string(total) + " refused or changed at 14, in " + fmt(secs) +
               "s (budget " + fmt(kBudget2, 0) + "s)";
    return o;
}

// ---------------------------------------------------------------- criterion 3
Outcome criterion3() {
    const auto t0 = Clock::now();
    CodeConfig cfg;
    cfg.version = 2;
    cfg.mask_id = 2;
    cfg.module_px = 6;
    cfg.quiet_px = 12;

    std::mt19937 rng(303);
    std::uniform_int_distribution<int> len(1, byte_mode_capacity(cfg.version, cfg.ec_level));
    double worst = 0.0;
    int probes_done = 0;
    const int images = 50, probes_per_image = 40;

    for (int i = 0; i < images; ++i) {
        const ModuleMatrix target = encode(testsupport::random_payload(rng, len(rng)), cfg);
        const PixelImage img = testsupport::blended_input(target, cfg, 1000 + i);
        const SrlEval eval = scan_loss_eval(img, target, true);
        std::vector<uint8_t> phi(eval.report.per_module.size());
        for (size_t k = 0; k < phi.size(); ++k) phi[k] = eval.report.per_module[k].phi;
        const GrayImage gray = to_grayscale(img);

        const GridGeometry& g = *img.grid;
        std::uniform_int_distribution<int> coord(g.origin_x, g.origin_x + g.code_px() - 1);
        std::uniform_int_distribution<int> chan(0, img.channels - 1);
        int done = 0;
        while (done < probes_per_image) {
            const int x = coord(rng), y = coord(rng), c = chan(rng);
            if (std::abs(gray.at(x, y) - 0.5) < kGradSkipBand) continue;
            PixelImage plus = img, minus = img;
            plus.at(x, y, c) += kGradProbeStep;
            minus.at(x, y, c) -= kGradProbeStep;
            const double fd = (scan_loss_frozen(plus, target, phi) -
                               scan_loss_frozen(minus, target, phi)) /
                              (2 * kGradProbeStep);
            const double an = eval.gradient.at(x, y, c);
            if (fd != an) {
                const double scale = std::max({std::abs(fd), std::abs(an), 1e-12});
                worst = std::max(worst, std::abs(fd - an) / scale);
            }
            ++done;
            ++probes_done;
        }
    }
    const double secs = secs_since(t0);
    Outcome o;
    o.pass = worst <= kGradTol && secs < kBudget3;
    o.detail = "max relative gradient error " + fmt(worst * 1e6, 3) + "e-6 over " +
               std::to_string(probes_done) + " probes (tolerance " + fmt(kGradTol * 1e4, 0) +
               "e-4), " + fmt(secs) + "s";
    return o;
}

// ---------------------------------------------------------------- criterion 4
Outcome criterion4() {
    const auto t0 = Clock::now();
    CodeConfig cfg;
    const ModuleMatrix fn = function_patterns(cfg.version);
    const auto order = data_region_walk(fn);
    const int codeword_bits = rs_block_spec(cfg.version, cfg.ec_level).total_codewords() * 8;

    std::mt19937 rng(404);
    std::uniform_int_distribution<int> len(1, 42);
    std::uniform_real_distribution<double> jitter(-0.15, 0.15);

    int consistent = 0, exact_counts = 0, zero_noise_cases = 0;
    const int total = 200;
    for (int i = 0; i < total; ++i) {
        const Payload payload = testsupport::random_payload(rng, len(rng));
        const ModuleMatrix target = encode(payload, cfg);
        PixelImage img = rasterize(target, cfg);
        const GridGeometry g = *img.grid;

        const int k_flips = i % 5 == 0 ? 0 : 1 + static_cast<int>(rng() % 40);
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) < k_flips)
            chosen.insert(static_cast<int>(rng() % codeword_bits));
        for (int bit : chosen) {
            const auto [row, col] = order[bit];
            const double v = target.cell(row, col) ? 0.0 : 1.0;
            for (int dy = 0; dy < g.module_px; ++dy)
                for (int dx = 0; dx < g.module_px; ++dx)
                    img.at(g.origin_x + col * g.module_px + dx,
                           g.origin_y + row * g.module_px + dy) = v;
        }

        const bool noisy = i % 2 == 1;
        if (noisy) {
            // sub-threshold speckle confined to codeword-bit modules
            for (int n = 0; n < 3000; ++n) {
                const int bit = static_cast<int>(rng() % codeword_bits);
                const auto [row, col] = order[bit];
                const int px = g.origin_x + col * g.module_px + static_cast<int>(rng() % g.module_px);
                const int py = g.origin_y + row * g.module_px + static_cast<int>(rng() % g.module_px);
                img.at(px, py) = std::clamp(img.at(px, py) + jitter(rng), 0.0, 1.0);
            }
        }

        const SrlReport report = scan_loss(img, target);
        const bool module_errors = report.error_rate > 0.0;
        bool decoder_evidence = false;
        try {
            const DecodeResult r = decode(img, cfg);
            decoder_evidence = r.total_corrections() > 0 || r.payload != payload;
        } catch (const Error&) {
            decoder_evidence = true;
        }
        if (module_errors == decoder_evidence) ++consistent;
        if (!noisy) {
            ++zero_noise_cases;
            if (report.mismatch_count == k_flips &&
                report.error_rate == static_cast<double>(k_flips) / 841.0)
                ++exact_counts;
        }
    }
    const double secs = secs_since(t0);
    Outcome o;
    o.pass = consistent == total && exact_counts == zero_noise_cases;
    o.detail = std::to_string(consistent) + "/" + std::to_string(total) +
               " images agree between module error rate and decoder evidence, " +
               std::to_string(exact_counts) + "/" + std::to_string(zero_noise_cases) +
               " exact flip counts, " + fmt(secs) + "s";
    return o;
}

// ---------------------------------------------------------------- criterion 5
struct Run5 {
    bool ok = true;
    int decoded = 0, monotone = 0, total = 0;
    uint64_t digest = 1469598103934665603ull;
};

Run5 run_criterion5() {
    Run5 r;
    CodeConfig cfg;
    r.total = 100;
    for (int seed = 1; seed <= r.total; ++seed) {
        std::mt19937 rng(5000 + seed);
        std::uniform_real_distribution<double> w(0.05, 1.0);
        TargetPattern p;
        p.side = cfg.side();
        p.desired.resize(static_cast<size_t>(p.side) * p.side);
        p.weight.resize(p.desired.size());
        for (size_t k = 0; k < p.desired.size(); ++k) {
            p.desired[k] = static_cast<uint8_t>(rng() & 1);
            p.weight[k] = w(rng);
        }
        const QartResult q = qart_transform(kPayload, cfg, p);
        try {
            const DecodeResult d = decode_cells(q.matrix.cells, cfg.version);
            if (d.payload == kPayload && d.total_corrections() == 0) ++r.decoded;
        } catch (const Error&) {
        }
        if (q.report.agreement_after >= q.report.agreement_before) ++r.monotone;
        hash_bytes(r.digest, q.matrix.cells.data(), q.matrix.cells.size());
        hash_double(r.digest, q.report.agreement_before);
        hash_double(r.digest, q.report.agreement_after);
        hash_u64(r.digest, static_cast<uint64_t>(q.report.vectors_applied));
    }
    r.ok = r.decoded == r.total && r.monotone == r.total;
    return r;
}

// ------------------------------------------------------- criteria 6, 7 and 8
struct Pipeline {
    // criterion 6
    int entry_unscannable = 0;
    int repaired_scannable = 0;
    int total6 = 0;
    double secs6 = 0.0;
    // criterion 7
    std::vector<double> angles{0.0, 15.0, 30.0, 45.0};
    std::vector<int> tilt_scanned; // per angle
    double secs7 = 0.0;
    // criterion 8
    std::vector<std::pair<char, double>> level_ssr;
    double secs8 = 0.0;
    // criterion 9 input
    std::vector<RefineTrace> traces;
    // criterion 10 input
    uint64_t digest = 1469598103934665603ull;
};

Pipeline run_pipeline() {
    Pipeline out;
    CodeConfig cfg;
    RefineConfig rcfg; // tau 0.15 matches level M
    out.total6 = 50;
    out.tilt_scanned.assign(out.angles.size(), 0);

    const ModuleMatrix plain = encode(kPayload, cfg);

    auto t6 = Clock::now();
    double tilt_secs = 0.0;
    for (int seed = 1; seed <= out.total6; ++seed) {
        const PixelImage blend = testsupport::blended_input(plain, cfg, seed);
        const auto entry = try_decode(blend, cfg);
        if (!entry || entry->payload != kPayload) ++out.entry_unscannable;

        RepairResult r = repair(blend, kPayload, cfg, rcfg);
        const auto flat = try_decode(r.image, cfg);
        if (flat && flat->payload == kPayload) ++out.repaired_scannable;
        hash_image(out.digest, r.image);
        hash_trace(out.digest, r.trace);

        // criterion 7 consumes each repaired image before it is dropped
        const auto t7 = Clock::now();
        std::vector<SsrCase> one;
        one.push_back(SsrCase{std::move(r.image), kPayload, std::nullopt,
                              "seed" + std::to_string(seed)});
        const auto rows = tilt_sweep(one, out.angles, cfg, 1.2, 1);
        for (size_t a = 0; a < rows.size(); ++a) {
            out.tilt_scanned[a] += rows[a].report.scanned;
            hash_u64(out.digest, static_cast<uint64_t>(rows[a].report.scanned));
        }
        tilt_secs += secs_since(t7);

        out.traces.push_back(std::move(r.trace));
    }
    out.secs7 = tilt_secs;
    out.secs6 = secs_since(t6) - tilt_secs;

    const auto t8 = Clock::now();
    for (EcLevel level : {EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H}) {
        CodeConfig lcfg = cfg;
        lcfg.ec_level = level;
        RefineConfig lrcfg;
        lrcfg.tau = default_tau(level);
        const ModuleMatrix ltarget = encode(kPayload, lcfg);
        int scanned = 0;
        for (int seed = 1; seed <= out.total6; ++seed) {
            const PixelImage blend = testsupport::blended_input(ltarget, lcfg, seed);
            RepairResult r = repair(blend, kPayload, lcfg, lrcfg);
            const auto d = try_decode(r.image, lcfg);
            if (d && d->payload == kPayload) ++scanned;
            hash_image(out.digest, r.image);
            hash_trace(out.digest, r.trace);
            out.traces.push_back(std::move(r.trace));
        }
        out.level_ssr.emplace_back(ec_level_letter(level),
                                   static_cast<double>(scanned) / out.total6);
        hash_double(out.digest, out.level_ssr.back().second);
    }
    out.secs8 = secs_since(t8);
    return out;
}

Outcome criterion6(const Pipeline& p) {
    Outcome o;
    const double ssr = static_cast<double>(p.repaired_scannable) / p.total6;
    o.pass = p.entry_unscannable == p.total6 && p.repaired_scannable == p.total6 &&
             p.secs6 + p.secs7 < kBudget67;
    o.detail = std::to_string(p.entry_unscannable) + "/" + std::to_string(p.total6) +
               " blends unscannable at entry, repaired ssr " + fmt(ssr, 4) + " in " +
               fmt(p.secs6) + "s (budget " + fmt(kBudget67, 0) + "s shared with tilt)";
    return o;
}

Outcome criterion7(const Pipeline& p) {
    Outcome o;
    o.pass = true;
    std::string parts;
    for (size_t a = 0; a < p.angles.size(); ++a) {
        const double ssr = static_cast<double>(p.tilt_scanned[a]) / p.total6;
        const double need = p.angles[a] >= 45.0 ? kTiltSsrMin45 : 1.0;
        if (ssr < need) o.pass = false;
        if (!parts.empty()) parts += ", ";
        parts += fmt(p.angles[a], 0) + "deg=" + fmt(ssr, 4);
    }
    o.detail = "repaired ssr by tilt angle: " + parts + " (floor " + fmt(kTiltSsrMin45, 2) +
               " at 45), " + fmt(p.secs7) + "s";
    return o;
}

Outcome criterion8(const Pipeline& p) {
    Outcome o;
    o.pass = true;
    std::string parts;
    for (const auto& [letter, ssr] : p.level_ssr) {
        const double need = letter == 'L' ? kLevelSsrMinL : 1.0;
        if (ssr < need) o.pass = false;
        if (!parts.empty()) parts += ", ";
        parts += std::string(1, letter) + "=" + fmt(ssr, 4);
    }
    o.detail = "repair ssr by level with per-level gates: " + parts + " (floor " +
               fmt(kLevelSsrMinL, 2) + " at L, 1.00 elsewhere), " + fmt(p.secs8) + "s";
    return o;
}

Outcome criterion9(const Pipeline& p) {
    Outcome o;
    size_t iterations = 0;
    bool clean = true;
    for (const RefineTrace& t : p.traces)
        for (const RefineIteration& it : t.iterations) {
            ++iterations;
            if (it.srl_grad_phi0_max != 0.0) clean = false;
        }
    o.pass = clean && !p.traces.empty();
    o.detail = "gradient over matching modules is exactly zero in " + std::to_string(iterations) +
               " recorded iterations from " + std::to_string(p.traces.size()) + " traces";
    return o;
}

Outcome criterion10(const Run5& first5, const Pipeline& first_pipeline) {
    const auto t0 = Clock::now();
    const Run5 second5 = run_criterion5();
    const Pipeline second = run_pipeline();
    Outcome o;
    o.pass = second5.digest == first5.digest && second.digest == first_pipeline.digest;
    std::ostringstream os;
    os << "rerun digests " << (o.pass ? "match" : "differ") << " (pattern transform 0x" << std::hex
       << first5.digest << ", repair pipeline 0x" << first_pipeline.digest << std::dec << "), "
       << fmt(secs_since(t0)) << "s";
    o.detail = os.str();
    return o;
}

} // namespace

int main() {
    std::vector<Outcome> results(10);

    results[0] = criterion1();
    results[1] = criterion2();
    results[2] = criterion3();
    results[3] = criterion4();

    const Run5 r5 = run_criterion5();
    results[4].pass = r5.ok;
    results[4].detail = std::to_string(r5.decoded) + "/" + std::to_string(r5.total) +
                        " steered symbols decode clean, " + std::to_string(r5.monotone) + "/" +
                        std::to_string(r5.total) + " with non-decreasing agreement";

    const Pipeline pipeline = run_pipeline();
    results[5] = criterion6(pipeline);
    results[6] = criterion7(pipeline);
    results[7] = criterion8(pipeline);
    results[8] = criterion9(pipeline);
    results[9] = criterion10(r5, pipeline);

    bool all = true;
    for (size_t i = 0; i < results.size(); ++i) {
        all = all && results[i].pass;
        std::cout << "criterion " << (i + 1) << ": " << (results[i].pass ? "PASS" : "FAIL")
                  << " - " << results[i].detail << "\n";
    }
    std::cout << (all ? "acceptance: all criteria passed" : "acceptance: FAILURES above") << "\n";
    return all ? 0 : 1;
}
