// Command line front end. Exit codes: 0 success (and scannable where that
// applies), 1 finished but not scannable, 2 usage problems, 3 input or
// domain errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qrsr/qrsr.hpp"

namespace fs = std::filesystem;
using namespace qrsr;

namespace {

constexpr int kExitScannable = 0;
constexpr int kExitUnscannable = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;

struct CodeOptions {
    int version = 3;
    std::string ec = "M";
    int mask = 4;
    int module_px = 20;
    int quiet_px = 80;

    CodeConfig to_config() const {
        CodeConfig cfg;
        cfg.version = version;
        cfg.ec_level = ec_level_from_letter(ec.at(0));
        cfg.mask_id = mask;
        cfg.module_px = module_px;
        cfg.quiet_px = quiet_px;
        cfg.validate();
        return cfg;
    }
};

struct RefineOptions {
    double lambda1 = 500.0;
    double lambda2 = 3.0;
    double gamma = 0.0;
    double lambda_reg = 0.01;
    double tau = 0.0; // 0 = per-level default
    int max_iters = 100;
    std::string step_rule = "backtracking";

    RefineConfig to_config(EcLevel level) const {
        RefineConfig cfg;
        cfg.lambda1 = lambda1;
        cfg.lambda2 = lambda2;
        cfg.gamma = gamma;
        cfg.lambda_reg = lambda_reg;
        cfg.tau = tau > 0.0 ? tau : default_tau(level);
        cfg.max_iters = max_iters;
        if (step_rule == "backtracking")
            cfg.step_rule = StepRule::Backtracking;
        else if (step_rule == "fixed")
            cfg.step_rule = StepRule::Fixed;
        else
            throw InvalidConfig("step rule must be backtracking or fixed");
        cfg.validate();
        return cfg;
    }
};

// with_ec=false leaves --ec to the caller (sweep owns a repeatable list)
void add_code_options(CLI::App* cmd, CodeOptions& opts, bool with_ec = true) {
    cmd->add_option("--version", opts.version, "symbol version (1-5)")->check(CLI::Range(1, 5));
    if (with_ec)
        cmd->add_option("--ec", opts.ec, "error correction level (L,M,Q,H)")
            ->check(CLI::IsMember({"L", "M", "Q", "H"}));
    cmd->add_option("--mask", opts.mask, "mask pattern id (0-7)")->check(CLI::Range(0, 7));
    cmd->add_option("--module-px", opts.module_px, "rendered module size in pixels")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--quiet-px", opts.quiet_px, "quiet zone width in pixels")
        ->check(CLI::NonNegativeNumber);
}

void add_refine_options(CLI::App* cmd, RefineOptions& opts) {
    cmd->add_option("--lambda1", opts.lambda1, "scan loss weight");
    cmd->add_option("--lambda2", opts.lambda2, "perceptual weight");
    cmd->add_option("--gamma", opts.gamma, "initial step size (0 = derive)");
    cmd->add_option("--lambda-reg", opts.lambda_reg, "perceptual boost while the gate is off");
    cmd->add_option("--tau", opts.tau, "gate threshold (0 = per-level default)");
    cmd->add_option("--max-iters", opts.max_iters, "iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--step-rule", opts.step_rule, "backtracking or fixed")
        ->check(CLI::IsMember({"backtracking", "fixed"}));
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << text;
    if (!f) throw IoError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::vector<fs::path> png_files_in(const std::string& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no png files in " + dir);
    return files;
}

// Minimal key=value config for sweep runs; '#' starts a comment and
// repeatable keys accumulate. Unknown keys are rejected.
struct SweepSettings {
    std::vector<std::string> messages;
    std::vector<std::string> ecs;
    std::vector<double> angles;
    std::string dir;
    double focal_length = 1.2;
    CodeOptions code;
    RefineOptions refine;
};

void apply_sweep_config(const std::string& path, SweepSettings& s,
                        const std::set<std::string>& overridden) {
    std::istringstream in(read_text_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const size_t eq = line.find('=');
        auto trim = [](std::string v) {
            const size_t a = v.find_first_not_of(" \t\r");
            const size_t b = v.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        if (trim(line).empty()) continue;
        if (eq == std::string::npos)
            throw CLI::ValidationError("config", "line " + std::to_string(lineno) +
                                                     ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (overridden.count(key)) continue;
        try {
            if (key == "message") s.messages.push_back(value);
            else if (key == "ec") s.ecs.push_back(value);
            else if (key == "angle") s.angles.push_back(std::stod(value));
            else if (key == "dir") s.dir = value;
            else if (key == "focal-length") s.focal_length = std::stod(value);
            else if (key == "version") s.code.version = std::stoi(value);
            else if (key == "mask") s.code.mask = std::stoi(value);
            else if (key == "module-px") s.code.module_px = std::stoi(value);
            else if (key == "quiet-px") s.code.quiet_px = std::stoi(value);
            else if (key == "lambda1") s.refine.lambda1 = std::stod(value);
            else if (key == "lambda2") s.refine.lambda2 = std::stod(value);
            else if (key == "gamma") s.refine.gamma = std::stod(value);
            else if (key == "lambda-reg") s.refine.lambda_reg = std::stod(value);
            else if (key == "tau") s.refine.tau = std::stod(value);
            else if (key == "max-iters") s.refine.max_iters = std::stoi(value);
            else if (key == "step-rule") s.refine.step_rule = value;
            else
                throw CLI::ValidationError("config", "line " + std::to_string(lineno) +
                                                         ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw CLI::ValidationError("config", "line " + std::to_string(lineno) +
                                                     ": bad value for '" + key + "'");
        }
    }
}

int cmd_encode(const std::string& message, const CodeOptions& code, const std::string& out,
               const std::string& matrix_out) {
    const CodeConfig cfg = code.to_config();
    const ModuleMatrix m = encode(Payload::from_string(message), cfg);
    if (!out.empty()) write_png(out, rasterize(m, cfg));
    if (!matrix_out.empty()) write_text_file(matrix_out, matrix_to_text(m));
    std::cout << "encoded " << message.size() << " bytes into a " << m.side << "x" << m.side
              << " symbol (version " << cfg.version << ", level "
              << ec_level_letter(cfg.ec_level) << ", mask " << cfg.mask_id << ")\n";
    return kExitScannable;
}

int cmd_blend(const std::string& message, const CodeOptions& code, const std::string& photo,
              double weight, const std::string& out) {
    const CodeConfig cfg = code.to_config();
    const ModuleMatrix m = encode(Payload::from_string(message), cfg);
    const PixelImage raster = expand_channels(rasterize(m, cfg), 3);
    PixelImage img = read_png(photo);
    if (img.width != raster.width || img.height != raster.height)
        img = resample(img, raster.width, raster.height);
    img = expand_channels(img, 3);
    PixelImage mixed = blend(img, raster, weight);
    mixed.grid = raster.grid;
    write_png(out, mixed);
    std::cout << "blended " << photo << " over the symbol at weight " << weight << "\n";
    return kExitScannable;
}

int cmd_qart(const std::string& message, const CodeOptions& code, const std::string& reference,
             const std::string& matrix_out, const std::string& raster_out,
             const std::string& report_out) {
    const CodeConfig cfg = code.to_config();
    const PixelImage ref = read_png(reference);
    const TargetPattern pattern = desired_pattern(ref, cfg);
    const QartResult result = qart_transform(Payload::from_string(message), cfg, pattern);
    if (!matrix_out.empty()) write_text_file(matrix_out, matrix_to_text(result.matrix));
    if (!raster_out.empty()) write_png(raster_out, rasterize(result.matrix, cfg));
    if (!report_out.empty()) write_text_file(report_out, to_json(result.report).dump(2) + "\n");
    std::cout << "agreement " << result.report.agreement_before << " -> "
              << result.report.agreement_after << " using " << result.report.vectors_applied
              << " of " << result.report.free_bits << " free bits\n";
    return kExitScannable;
}

int cmd_repair(const std::string& message, const CodeOptions& code, const RefineOptions& refine,
               const std::string& input, const std::string& out, const std::string& trace_out,
               const std::string& report_out, const std::string& overlay_out) {
    const CodeConfig cfg = code.to_config();
    const RefineConfig rcfg = refine.to_config(cfg.ec_level);
    const Payload payload = Payload::from_string(message);
    const PixelImage x0 = read_png(input);

    const RepairResult result = repair(x0, payload, cfg, rcfg);
    if (!out.empty()) write_png(out, result.image);
    if (!trace_out.empty()) write_text_file(trace_out, trace_to_jsonl(result.trace));
    if (!overlay_out.empty()) write_png(overlay_out, overlay_errors(result.image, result.target));

    const auto decoded = try_decode(result.image, cfg);
    const bool scannable = decoded && decoded->payload == payload;
    if (!report_out.empty()) {
        nlohmann::json report = {{"match", to_json(result.match)},
                                 {"refine", trace_summary_json(result.trace)},
                                 {"scannable", scannable}};
        if (decoded) report["decode"] = to_json(*decoded);
        write_text_file(report_out, report.dump(2) + "\n");
    }
    std::cout << "iterations " << result.trace.iterations.size() << ", final error rate "
              << result.trace.final_error_rate << ", "
              << (scannable ? "scannable" : "not scannable") << "\n";
    return scannable ? kExitScannable : kExitUnscannable;
}

int cmd_verify(const std::string& message, const CodeOptions& code, const std::string& input,
               std::vector<double> angles, double focal_length, const std::string& report_out,
               int jobs) {
    const CodeConfig cfg = code.to_config();
    const Payload payload = Payload::from_string(message);
    const PixelImage img = canonicalize_reference(read_png(input), cfg);
    if (angles.empty()) angles = {0.0};

    std::vector<SsrCase> cases;
    cases.push_back(SsrCase{img, payload, std::nullopt, "flat"});
    const std::vector<TiltSweepRow> rows =
        tilt_sweep(cases, angles, cfg, focal_length, resolve_jobs(jobs));

    std::vector<TableRow> table;
    bool all_ok = true;
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& row : rows) {
        table.push_back(TableRow{"angle=" + std::to_string(row.degrees), row.report.scanned,
                                 row.report.total, row.report.ssr});
        jrows.push_back({{"angle", row.degrees}, {"report", to_json(row.report)}});
        if (row.report.scanned != row.report.total) all_ok = false;
    }
    std::cout << format_table("tilt verification", table);
    if (!report_out.empty()) write_text_file(report_out, jrows.dump(2) + "\n");
    return all_ok ? kExitScannable : kExitUnscannable;
}

int cmd_analyze(const std::string& message, const CodeOptions& code, const std::string& input,
                const std::string& matrix_in, const std::string& report_out,
                const std::string& overlay_out) {
    const CodeConfig cfg = code.to_config();
    const PixelImage img = canonicalize_reference(read_png(input), cfg);
    ModuleMatrix target;
    if (!matrix_in.empty())
        target = matrix_from_text(read_text_file(matrix_in));
    else if (!message.empty())
        target = encode(Payload::from_string(message), cfg);
    else
        throw InvalidConfig("analyze needs --matrix or --message to define the target");

    const SrlReport report = scan_loss(img, target);
    if (!report_out.empty()) write_text_file(report_out, to_json(report).dump(2) + "\n");
    if (!overlay_out.empty()) write_png(overlay_out, overlay_errors(img, target));

    const auto decoded = try_decode(img, cfg);
    const auto expected = decode_cells(target.cells, cfg.version);
    const bool scannable = decoded && decoded->payload == expected.payload;
    std::cout << "loss " << report.loss << ", error rate " << report.error_rate << ", mismatches "
              << report.mismatch_count << ", " << (scannable ? "scannable" : "not scannable")
              << "\n";
    return scannable ? kExitScannable : kExitUnscannable;
}

int cmd_sweep(const SweepSettings& s, const std::string& report_out, int jobs) {
    if (s.messages.empty())
        throw InvalidConfig("sweep needs at least one message");
    if (s.dir.empty())
        throw InvalidConfig("sweep needs a corpus directory");
    std::vector<std::string> ecs = s.ecs;
    if (ecs.empty()) ecs = {"L", "M", "Q", "H"};
    std::vector<double> angles = s.angles;
    if (angles.empty()) angles = {0.0, 15.0, 30.0, 45.0};
    const int n_jobs = resolve_jobs(jobs);

    const std::vector<fs::path> files = png_files_in(s.dir);
    std::vector<PixelImage> corpus;
    for (const auto& f : files) corpus.push_back(read_png(f.string()));

    std::vector<TableRow> table;
    nlohmann::json jrows = nlohmann::json::array();
    for (const std::string& ec : ecs) {
        CodeOptions code = s.code;
        code.ec = ec;
        const CodeConfig cfg = code.to_config();
        const RefineConfig rcfg = s.refine.to_config(cfg.ec_level);

        struct Item {
            PixelImage image;
            Payload payload;
            std::string id;
        };
        const size_t n_cases = corpus.size() * s.messages.size();
        std::vector<Item> repaired = parallel_map<Item>(n_cases, n_jobs, [&](size_t i) {
            const size_t ci = i % corpus.size();
            const size_t mi = i / corpus.size();
            const Payload payload = Payload::from_string(s.messages[mi]);
            RepairResult r = repair(corpus[ci], payload, cfg, rcfg);
            return Item{std::move(r.image), payload,
                        files[ci].filename().string() + "#" + std::to_string(mi)};
        });

        std::vector<SsrCase> cases;
        for (auto& item : repaired)
            cases.push_back(SsrCase{std::move(item.image), item.payload, std::nullopt, item.id});
        const std::vector<TiltSweepRow> rows =
            tilt_sweep(cases, angles, cfg, s.focal_length, n_jobs);
        for (const auto& row : rows) {
            std::ostringstream label;
            label << "ec=" << ec << " tau=" << rcfg.tau << " angle=" << row.degrees;
            table.push_back(
                TableRow{label.str(), row.report.scanned, row.report.total, row.report.ssr});
            jrows.push_back({{"ec", ec},
                             {"tau", rcfg.tau},
                             {"angle", row.degrees},
                             {"report", to_json(row.report)}});
        }
    }
    std::cout << format_table("repair sweep", table);
    if (!report_out.empty()) write_text_file(report_out, jrows.dump(2) + "\n");
    return kExitScannable;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scannable stylized code toolkit"};
    app.require_subcommand(1);

    // encode
    auto* enc = app.add_subcommand("encode", "encode a message into a symbol raster");
    std::string enc_message, enc_out, enc_matrix_out;
    CodeOptions enc_code;
    enc->add_option("--message,-m", enc_message, "payload text")->required();
    enc->add_option("--out,-o", enc_out, "output png path");
    enc->add_option("--matrix-out", enc_matrix_out, "output matrix text path");
    add_code_options(enc, enc_code);

    // blend
    auto* bl = app.add_subcommand("blend", "blend a photo over an encoded symbol");
    std::string bl_message, bl_photo, bl_out;
    double bl_weight = 0.7;
    CodeOptions bl_code;
    bl->add_option("--message,-m", bl_message, "payload text")->required();
    bl->add_option("--photo", bl_photo, "photo png path")->required();
    bl->add_option("--weight", bl_weight, "photo weight in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    bl->add_option("--out,-o", bl_out, "output png path")->required();
    add_code_options(bl, bl_code);

    // qart-transform
    auto* qt = app.add_subcommand("qart-transform",
                                  "steer free bits toward a reference image");
    std::string qt_message, qt_reference, qt_matrix_out, qt_raster_out, qt_report;
    CodeOptions qt_code;
    qt->add_option("--message,-m", qt_message, "payload text")->required();
    qt->add_option("--reference", qt_reference, "reference png path")->required();
    qt->add_option("--matrix-out", qt_matrix_out, "output matrix text path");
    qt->add_option("--raster-out", qt_raster_out, "output png path");
    qt->add_option("--report", qt_report, "match report json path");
    add_code_options(qt, qt_code);

    // repair
    auto* rp = app.add_subcommand("repair", "make a stylized image scannable");
    std::string rp_message, rp_input, rp_out, rp_trace, rp_report, rp_overlay;
    CodeOptions rp_code;
    RefineOptions rp_refine;
    rp->add_option("--message,-m", rp_message, "payload text")->required();
    rp->add_option("--input,-i", rp_input, "stylized input png")->required();
    rp->add_option("--out,-o", rp_out, "repaired output png");
    rp->add_option("--trace", rp_trace, "iteration trace jsonl path");
    rp->add_option("--report", rp_report, "summary report json path");
    rp->add_option("--overlay", rp_overlay, "error overlay png path");
    add_code_options(rp, rp_code);
    add_refine_options(rp, rp_refine);

    // verify
    auto* vf = app.add_subcommand("verify", "decode an image, optionally under tilt");
    std::string vf_message, vf_input, vf_report;
    std::vector<double> vf_angles;
    double vf_focal = 1.2;
    int vf_jobs = 0;
    CodeOptions vf_code;
    vf->add_option("--message,-m", vf_message, "expected payload text")->required();
    vf->add_option("--input,-i", vf_input, "input png")->required();
    vf->add_option("--angle", vf_angles, "tilt angles in degrees (repeatable)");
    vf->add_option("--focal-length", vf_focal, "camera focal length in image widths");
    vf->add_option("--report", vf_report, "report json path");
    vf->add_option("--jobs", vf_jobs, "worker threads (default QRSR_JOBS or 1)");
    add_code_options(vf, vf_code);

    // analyze
    auto* an = app.add_subcommand("analyze", "score an image against a target symbol");
    std::string an_message, an_input, an_matrix, an_report, an_overlay;
    CodeOptions an_code;
    an->add_option("--message,-m", an_message, "payload text defining the target");
    an->add_option("--input,-i", an_input, "input png")->required();
    an->add_option("--matrix", an_matrix, "target matrix text path");
    an->add_option("--report", an_report, "module report json path");
    an->add_option("--overlay", an_overlay, "error overlay png path");
    add_code_options(an, an_code);

    // sweep
    auto* sw = app.add_subcommand("sweep", "repair a corpus across levels and angles");
    SweepSettings sw_settings;
    std::string sw_config, sw_report;
    int sw_jobs = 0;
    sw->add_option("--config", sw_config, "key = value config file");
    sw->add_option("--message,-m", sw_settings.messages, "payload text (repeatable)");
    sw->add_option("--ec", sw_settings.ecs, "levels to sweep (repeatable)")
        ->check(CLI::IsMember({"L", "M", "Q", "H"}));
    sw->add_option("--angle", sw_settings.angles, "tilt angles (repeatable)");
    sw->add_option("--dir", sw_settings.dir, "corpus directory of png files");
    sw->add_option("--focal-length", sw_settings.focal_length, "camera focal length");
    sw->add_option("--report", sw_report, "report json path");
    sw->add_option("--jobs", sw_jobs, "worker threads (default QRSR_JOBS or 1)");
    add_code_options(sw, sw_settings.code, false);
    add_refine_options(sw, sw_settings.refine);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*enc) return cmd_encode(enc_message, enc_code, enc_out, enc_matrix_out);
        if (*bl) return cmd_blend(bl_message, bl_code, bl_photo, bl_weight, bl_out);
        if (*qt)
            return cmd_qart(qt_message, qt_code, qt_reference, qt_matrix_out, qt_raster_out,
                            qt_report);
        if (*rp)
            return cmd_repair(rp_message, rp_code, rp_refine, rp_input, rp_out, rp_trace,
                              rp_report, rp_overlay);
        if (*vf)
            return cmd_verify(vf_message, vf_code, vf_input, vf_angles, vf_focal, vf_report,
                              vf_jobs);
        if (*an) return cmd_analyze(an_message, an_code, an_input, an_matrix, an_report,
                                    an_overlay);
        if (*sw) {
            std::set<std::string> overridden;
            for (const auto& name : {"message", "ec", "angle", "dir", "focal-length", "version",
                                     "mask", "module-px", "quiet-px", "lambda1", "lambda2",
                                     "gamma", "lambda-reg", "tau", "max-iters", "step-rule"})
                if (sw->count(std::string("--") + name) > 0) overridden.insert(name);
            if (!sw_config.empty()) apply_sweep_config(sw_config, sw_settings, overridden);
            return cmd_sweep(sw_settings, sw_report, sw_jobs);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitUsage;
}
