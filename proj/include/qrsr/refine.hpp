#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "qrsr/perceptual.hpp"
#include "qrsr/qart.hpp"
#include "qrsr/qr_decode.hpp"
#include "qrsr/scan_loss.hpp"

namespace qrsr {

enum class StepRule { Backtracking, Fixed };

// Gate threshold matched to the nominal correction capacity of each level.
inline double default_tau(EcLevel level) {
    switch (level) {
        case EcLevel::L: return 0.07;
        case EcLevel::M: return 0.15;
        case EcLevel::Q: return 0.25;
        case EcLevel::H: return 0.30;
    }
    return 0.15;
}

struct RefineConfig {
    double lambda1 = 500.0;  // scan loss weight
    double lambda2 = 3.0;    // perceptual weight
    double gamma = 0.0;      // initial step; 0 derives one from the kernel scale
    double lambda_reg = 0.01; // extra perceptual pull while the gate is off
    double tau = 0.15;       // error rate at or above which the scan term is active
    int max_iters = 100;
    StepRule step_rule = StepRule::Backtracking;
    PerceptualConfig perceptual;
    double stable_tol = 1e-12; // plateau detection while polishing
    int stable_window = 3;

    void validate() const {
        if (lambda1 <= 0.0)
            throw InvalidConfig("lambda1 must be positive");
        if (lambda2 < 0.0 || lambda_reg < 0.0)
            throw InvalidConfig("weights must be non-negative");
        if (tau <= 0.0 || tau > 1.0)
            throw InvalidConfig("tau must lie in (0,1]");
        if (max_iters < 1)
            throw InvalidConfig("max_iters must be positive");
        if (gamma < 0.0)
            throw InvalidConfig("gamma must be non-negative");
    }
};

struct RefineIteration {
    int iter = 0;
    bool gate = false;  // scan term active during this iteration
    double step = 0.0;  // accepted step size, 0 when no move was taken
    double loss = 0.0;  // active objective after the move
    double srl = 0.0;
    double perceptual = 0.0;
    double error_rate = 0.0;
    int mismatch_count = 0;
    double srl_grad_phi0_max = 0.0; // largest |gradient| over gated-off modules
    std::vector<uint8_t> phi;       // gate vector at iteration entry
};

struct RefineTrace {
    std::vector<RefineIteration> iterations;
    bool converged = false; // final image decodes to the same payload as the target
    bool stalled = false;
    double final_error_rate = 0.0;
    double final_loss = 0.0;
};

struct ObjectiveParts {
    double total = 0.0;
    double srl = 0.0;
    double perceptual = 0.0;
};

// The undecorated objective: scan loss plus perceptual anchor, both always
// on. The descent loop applies its own gating on top of these pieces.
inline ObjectiveParts objective(const PixelImage& x, const ModuleMatrix& target,
                                const PixelImage& x_ref, const RefineConfig& cfg = {}) {
    cfg.validate();
    ObjectiveParts parts;
    parts.srl = scan_loss(x, target).loss;
    parts.perceptual = perceptual_distance(x, x_ref, cfg.perceptual);
    parts.total = cfg.lambda1 * parts.srl + cfg.lambda2 * parts.perceptual;
    return parts;
}

namespace detail {

// Step size that moves a freshly gated module's central mean across the
// read threshold in one projected step: the scan gradient scales like
// lambda1 * kernel weight / module count, so its reciprocal (times the
// squared luma norm for color inputs) restores pixel-sized motion.
inline double derive_gamma(const RefineConfig& cfg, const GridGeometry& g, int channels) {
    const GaussianKernel kernel = GaussianKernel::for_module_px(g.module_px);
    const CentralFilter filter = CentralFilter::for_module_px(g.module_px);
    const double mean_w = kernel.central_mean(filter);
    const double channel_sq =
        channels == 3 ? kLumaR * kLumaR + kLumaG * kLumaG + kLumaB * kLumaB : 1.0;
    const double n = static_cast<double>(g.modules) * g.modules;
    return n / (cfg.lambda1 * mean_w * channel_sq);
}

inline double max_abs_gradient_off_modules(const PixelImage& grad, const SrlReport& report,
                                           const GridGeometry& g) {
    double m = 0.0;
    for (int row = 0; row < report.side; ++row)
        for (int col = 0; col < report.side; ++col) {
            if (report.module(row, col).phi) continue;
            const int x0 = g.origin_x + col * g.module_px;
            const int y0 = g.origin_y + row * g.module_px;
            for (int dy = 0; dy < g.module_px; ++dy)
                for (int dx = 0; dx < g.module_px; ++dx)
                    for (int c = 0; c < grad.channels; ++c)
                        m = std::max(m, std::abs(grad.at(x0 + dx, y0 + dy, c)));
        }
    return m;
}

} // namespace detail

// Projected gradient descent on the gated objective. While the sampled
// error rate is at or above tau the scan term drives the update; below tau
// only the perceptual anchor (reweighted by lambda_reg) keeps polishing.
// Pixels are clamped to [0,1] after every step. Wrong modules whose scan
// gradient vanished (flat at the threshold) get a direct nudge of their
// central pixels toward the target so the loop cannot sit on the kink.
inline std::pair<PixelImage, RefineTrace> pgd_refine(const PixelImage& x0,
                                                     const ModuleMatrix& target,
                                                     const PixelImage& x_ref,
                                                     const RefineConfig& cfg = {}) {
    cfg.validate();
    PixelImage x = x0;
    x.clamp01();
    const GridGeometry g = detail::require_grid(x, target);
    if (!x.same_extent(x_ref))
        throw ExtentMismatch("reference image extents differ from input");

    const PerceptualRef pref = perceptual_prepare(x_ref, cfg.perceptual);
    const double gamma0 = cfg.gamma > 0.0 ? cfg.gamma : detail::derive_gamma(cfg, g, x.channels);
    const CentralFilter filter = CentralFilter::for_module_px(g.module_px);
    constexpr double kArmijo = 1e-4;
    constexpr double kNudge = 0.01;

    RefineTrace trace;
    SrlEval eval = scan_loss_eval(x, target, true);
    PerceptualEval perc = perceptual_eval(x, pref, cfg.perceptual, true);

    auto active_loss = [&](bool gate, double srl, double perceptual) {
        return gate ? cfg.lambda1 * srl + cfg.lambda2 * perceptual
                    : (cfg.lambda2 + cfg.lambda1 * cfg.lambda_reg) * perceptual;
    };

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const bool gate = eval.report.error_rate >= cfg.tau;
        RefineIteration rec;
        rec.iter = iter;
        rec.gate = gate;
        rec.srl_grad_phi0_max =
            detail::max_abs_gradient_off_modules(eval.gradient, eval.report, g);
        rec.phi.resize(eval.report.per_module.size());
        for (size_t k = 0; k < rec.phi.size(); ++k)
            rec.phi[k] = eval.report.per_module[k].phi;

        if (eval.report.error_rate == 0.0) {
            rec.step = 0.0;
            rec.srl = eval.report.loss;
            rec.perceptual = perc.value;
            rec.loss = active_loss(gate, rec.srl, rec.perceptual);
            rec.error_rate = 0.0;
            rec.mismatch_count = 0;
            trace.iterations.push_back(std::move(rec));
            break;
        }

        PixelImage grad(x.width, x.height, x.channels, 0.0);
        const double w_srl = gate ? cfg.lambda1 : 0.0;
        const double w_perc = gate ? cfg.lambda2 : cfg.lambda2 + cfg.lambda1 * cfg.lambda_reg;
        for (size_t i = 0; i < grad.values.size(); ++i)
            grad.values[i] = w_srl * eval.gradient.values[i] + w_perc * perc.gradient.values[i];

        const double f0 = active_loss(gate, eval.report.loss, perc.value);
        PixelImage accepted;
        SrlEval accepted_eval;
        PerceptualEval accepted_perc;
        double accepted_step = 0.0;

        auto try_step = [&](double step) {
            PixelImage cand = x;
            for (size_t i = 0; i < cand.values.size(); ++i)
                cand.values[i] = std::clamp(cand.values[i] - step * grad.values[i], 0.0, 1.0);
            SrlEval cand_eval = scan_loss_eval(cand, target, true);
            PerceptualEval cand_perc = perceptual_eval(cand, pref, cfg.perceptual, true);
            const double f = active_loss(gate, cand_eval.report.loss, cand_perc.value);
            double move_sq = 0.0;
            for (size_t i = 0; i < cand.values.size(); ++i) {
                const double d = cand.values[i] - x.values[i];
                move_sq += d * d;
            }
            const bool ok = move_sq > 0.0 && f <= f0 - kArmijo * move_sq / step;
            if (ok) {
                accepted = std::move(cand);
                accepted_eval = std::move(cand_eval);
                accepted_perc = std::move(cand_perc);
                accepted_step = step;
            }
            return ok;
        };

        if (cfg.step_rule == StepRule::Fixed) {
            PixelImage cand = x;
            for (size_t i = 0; i < cand.values.size(); ++i)
                cand.values[i] = std::clamp(cand.values[i] - gamma0 * grad.values[i], 0.0, 1.0);
            accepted = std::move(cand);
            accepted_eval = scan_loss_eval(accepted, target, true);
            accepted_perc = perceptual_eval(accepted, pref, cfg.perceptual, true);
            accepted_step = gamma0;
        } else {
            double step = gamma0;
            for (int k = 0; k < 10 && !try_step(step); ++k) step *= 0.5;
        }

        bool nudged = false;
        if (accepted_step == 0.0) {
            // no acceptable descent step; keep x as is for this iteration
            accepted = x;
            accepted_eval = std::move(eval);
            accepted_perc = std::move(perc);
        }

        if (gate) {
            // kink rescue: any wrong module with a vanished scan gradient
            const GridGeometry& ag = *accepted.grid;
            for (int row = 0; row < target.side; ++row)
                for (int col = 0; col < target.side; ++col) {
                    if (!accepted_eval.report.module(row, col).phi) continue;
                    const int x0p = ag.origin_x + col * ag.module_px;
                    const int y0p = ag.origin_y + row * ag.module_px;
                    double gmax = 0.0;
                    for (int dy = 0; dy < ag.module_px; ++dy)
                        for (int dx = 0; dx < ag.module_px; ++dx)
                            for (int c = 0; c < accepted.channels; ++c)
                                gmax = std::max(
                                    gmax, std::abs(accepted_eval.gradient.at(x0p + dx, y0p + dy, c)));
                    if (gmax > 0.0) continue;
                    const double dir = target.cell(row, col) ? kNudge : -kNudge;
                    for (int dy = 0; dy < filter.block; ++dy)
                        for (int dx = 0; dx < filter.block; ++dx)
                            for (int c = 0; c < accepted.channels; ++c) {
                                double& v = accepted.at(x0p + filter.offset + dx,
                                                        y0p + filter.offset + dy, c);
                                v = std::clamp(v + dir, 0.0, 1.0);
                            }
                    nudged = true;
                }
            if (nudged) {
                accepted_eval = scan_loss_eval(accepted, target, true);
                accepted_perc = perceptual_eval(accepted, pref, cfg.perceptual, true);
            }
        }

        x = std::move(accepted);
        eval = std::move(accepted_eval);
        perc = std::move(accepted_perc);

        rec.step = accepted_step;
        rec.srl = eval.report.loss;
        rec.perceptual = perc.value;
        rec.loss = active_loss(gate, rec.srl, rec.perceptual);
        rec.error_rate = eval.report.error_rate;
        rec.mismatch_count = eval.report.mismatch_count;
        trace.iterations.push_back(std::move(rec));

        if (eval.report.error_rate == 0.0) break;
        if (accepted_step == 0.0 && !nudged) {
            trace.stalled = true;
            break;
        }
        const auto& its = trace.iterations;
        if (static_cast<int>(its.size()) >= cfg.stable_window) {
            bool stable = true;
            for (int k = 0; k < cfg.stable_window; ++k) {
                const auto& r = its[its.size() - 1 - k];
                if (r.gate || std::abs(r.loss - its.back().loss) > cfg.stable_tol)
                    stable = false;
            }
            if (stable) break;
        }
    }

    trace.final_error_rate = eval.report.error_rate;
    trace.final_loss = trace.iterations.empty() ? 0.0 : trace.iterations.back().loss;

    const int version = (target.side - 17) / 4;
    try {
        const DecodeResult got = decode_cells(sample_cells(to_grayscale(x), g), version);
        const DecodeResult want = decode_cells(target.cells, version);
        trace.converged = got.payload == want.payload;
    } catch (const Error&) {
        trace.converged = false;
    }
    return {std::move(x), std::move(trace)};
}

struct RepairResult {
    PixelImage image;
    ModuleMatrix target;
    MatchReport match;
    RefineTrace trace;
};

// Full pipeline for one stylized image: pick the closest valid symbol via
// the free-bit transform, then pull the pixels until it scans.
inline RepairResult repair(const PixelImage& x0, const Payload& payload,
                           const CodeConfig& code_cfg, const RefineConfig& refine_cfg = {}) {
    code_cfg.validate();
    refine_cfg.validate();
    const PixelImage canon = canonicalize_reference(x0, code_cfg);
    const TargetPattern pattern = desired_pattern(canon, code_cfg);
    QartResult q = qart_transform(payload, code_cfg, pattern);
    auto [image, trace] = pgd_refine(canon, q.matrix, canon, refine_cfg);
    return RepairResult{std::move(image), std::move(q.matrix), q.report, std::move(trace)};
}

} // namespace qrsr
