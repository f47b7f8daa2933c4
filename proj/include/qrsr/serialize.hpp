#pragma once

#include <iomanip>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qrsr/qart.hpp"
#include "qrsr/qr_decode.hpp"
#include "qrsr/refine.hpp"
#include "qrsr/scan_loss.hpp"
#include "qrsr/verify.hpp"

namespace qrsr {

// Text form of a module grid: side length, then cell rows ('1' = light),
// then the function mask rows ('1' = fixed structure).
inline std::string matrix_to_text(const ModuleMatrix& m) {
    std::string out = std::to_string(m.side) + "\n";
    for (int row = 0; row < m.side; ++row) {
        for (int col = 0; col < m.side; ++col) out += m.cell(row, col) ? '1' : '0';
        out += '\n';
    }
    for (int row = 0; row < m.side; ++row) {
        for (int col = 0; col < m.side; ++col) out += m.is_function(row, col) ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline ModuleMatrix matrix_from_text(const std::string& text) {
    std::istringstream in(text);
    int side = 0;
    if (!(in >> side) || side <= 0)
        throw IoError("matrix text: bad side length");
    ModuleMatrix m(side);
    std::string line;
    std::getline(in, line); // finish the header line
    auto read_block = [&](auto&& assign) {
        for (int row = 0; row < side; ++row) {
            if (!std::getline(in, line) || static_cast<int>(line.size()) < side)
                throw IoError("matrix text: truncated row");
            for (int col = 0; col < side; ++col) {
                const char c = line[col];
                if (c != '0' && c != '1')
                    throw IoError("matrix text: cells must be 0 or 1");
                assign(row, col, c == '1');
            }
        }
    };
    read_block([&](int r, int c, bool v) { m.set_cell(r, c, v ? 1 : 0); });
    read_block([&](int r, int c, bool v) { if (v) m.mark_function(r, c); });
    return m;
}

inline nlohmann::json to_json(const SrlReport& r) {
    nlohmann::json per = nlohmann::json::array();
    for (int row = 0; row < r.side; ++row)
        for (int col = 0; col < r.side; ++col) {
            const SrlModule& m = r.module(row, col);
            per.push_back({{"row", row},
                           {"col", col},
                           {"phi", static_cast<int>(m.phi)},
                           {"weighted_error", m.weighted_error}});
        }
    return {{"loss", r.loss},
            {"error_rate", r.error_rate},
            {"mismatch_count", r.mismatch_count},
            {"side", r.side},
            {"per_module", std::move(per)}};
}

inline nlohmann::json to_json(const MatchReport& r) {
    return {{"free_bits", r.free_bits},
            {"rank", r.rank},
            {"vectors_applied", r.vectors_applied},
            {"agreement_before", r.agreement_before},
            {"agreement_after", r.agreement_after}};
}

inline nlohmann::json to_json(const DecodeResult& r) {
    return {{"payload", r.payload.to_string()},
            {"ec_level", std::string(1, ec_level_letter(r.ec_level))},
            {"mask_id", r.mask_id},
            {"block_corrections", r.block_corrections},
            {"total_corrections", r.total_corrections()}};
}

inline nlohmann::json to_json(const SsrReport& r) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : r.items)
        items.push_back({{"id", item.id},
                         {"scannable", item.scannable},
                         {"corrections", item.corrections},
                         {"failure", item.failure}});
    return {{"total", r.total}, {"scanned", r.scanned}, {"ssr", r.ssr}, {"items", std::move(items)}};
}

// One json object per line, one line per iteration.
inline std::string trace_to_jsonl(const RefineTrace& t) {
    std::string out;
    for (const auto& it : t.iterations) {
        const nlohmann::json line = {{"iter", it.iter},
                                     {"gate", it.gate},
                                     {"step", it.step},
                                     {"loss", it.loss},
                                     {"srl", it.srl},
                                     {"perceptual", it.perceptual},
                                     {"error_rate", it.error_rate},
                                     {"mismatch_count", it.mismatch_count},
                                     {"srl_grad_phi0_max", it.srl_grad_phi0_max}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

inline nlohmann::json trace_summary_json(const RefineTrace& t) {
    return {{"iterations", t.iterations.size()},
            {"converged", t.converged},
            {"stalled", t.stalled},
            {"final_error_rate", t.final_error_rate},
            {"final_loss", t.final_loss}};
}

// Fixed-width table for sweep results; one row per (label, ssr) pair.
struct TableRow {
    std::string label;
    int scanned = 0;
    int total = 0;
    double ssr = 0.0;
};

inline std::string format_table(const std::string& title, const std::vector<TableRow>& rows) {
    size_t label_w = 5;
    for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
    std::ostringstream out;
    out << title << "\n";
    out << std::left << std::setw(static_cast<int>(label_w) + 2) << "case"
        << std::right << std::setw(9) << "scanned" << std::setw(7) << "total"
        << std::setw(9) << "ssr" << "\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(label_w) + 2) << r.label
            << std::right << std::setw(9) << r.scanned << std::setw(7) << r.total
            << std::setw(9) << std::fixed << std::setprecision(4) << r.ssr << "\n";
    }
    return out.str();
}

} // namespace qrsr
