// texfx: transfers designer text effects from a stylized exemplar onto plain
// glyph images, analyzes exemplar statistics, and batch-generates typography
// libraries from one example pair.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "texfx/analysis.hpp"
#include "texfx/png_io.hpp"
#include "texfx/synthesis.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace texfx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitDegenerate = 3;

struct Options {
    std::string source_text, source_style, target_text, target_dir, out, report;
    SynthesisParams params;
    std::vector<std::string> modes = {"random", "grid", "angle", "ring", "distance"};
    int partitions = 16;
    int threads = 1;
    bool dump_debug = false;
    bool verbose = false;
    std::string mode_name = "full";
};

void log_verbose(const Options& opt, const std::string& msg) {
    if (opt.verbose) std::cerr << "texfx: " << msg << "\n";
}

std::string replace_extension(const std::string& path, const std::string& ext) {
    return fs::path(path).replace_extension(ext).string();
}

json params_json(const SynthesisParams& p) {
    json j;
    j["patch_size"] = p.patch_size;
    j["scales"] = p.scales;
    j["scale_factor"] = p.scale_factor;
    j["lambda1"] = p.lambda1;
    j["lambda2"] = p.lambda2;
    j["lambda3"] = p.lambda3;
    j["omega"] = p.omega;
    j["pyramid_depth"] = p.pyramid_depth;
    j["coarsest"] = p.coarsest;
    j["iterations"] = p.iterations;
    j["mode"] = p.mode == SynthesisParams::Mode::Full ? "full" : "baseline";
    j["binarize_threshold"] = p.binarize_threshold;
    j["outlier_fraction"] = p.outlier_fraction;
    return j;
}

json trace_json(const std::vector<LevelTrace>& trace) {
    json levels = json::array();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        json lvl;
        lvl["level"] = i;
        lvl["width"] = trace[i].width;
        lvl["height"] = trace[i].height;
        lvl["objective"] = trace[i].objective;
        levels.push_back(std::move(lvl));
    }
    return levels;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
}

// Blue-cyan-yellow-red ramp for distance visualizations.
RasterImage false_color(const std::vector<double>& values, int width, int height) {
    double max_v = 1e-9;
    for (double v : values) max_v = std::max(max_v, v);
    RasterImage img(width, height, 3);
    const float stops[4][3] = {{0.05f, 0.05f, 0.4f}, {0.0f, 0.8f, 0.9f},
                               {0.95f, 0.9f, 0.2f}, {0.85f, 0.1f, 0.1f}};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double t = values[static_cast<std::size_t>(y) * width + x] / max_v * 3.0;
            const int k = std::min(2, static_cast<int>(t));
            const float f = static_cast<float>(t - k);
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = stops[k][c] * (1 - f) + stops[k + 1][c] * f;
        }
    return img;
}

void dump_width_fit(const RasterImage& text, const SynthesisParams& params,
                    const std::string& path) {
    const TextMask mask = binarize(text, params.binarize_threshold);
    const SkeletonContour sc = skeletonize(mask);
    const DistanceTransform to_skel =
        distance_to_set(mask.width, mask.height, sc.skeleton_pixels);
    const WidthRegression reg = fit_width_regression(sc, to_skel);

    std::vector<double> radii;
    for (const Pixel& q : sc.contour)
        radii.push_back(to_skel.dist[static_cast<std::size_t>(q.y) * mask.width + q.x]);
    std::sort(radii.begin(), radii.end());

    json j;
    j["slope"] = reg.slope;
    j["intercept"] = reg.intercept;
    j["contour_count"] = reg.contour_count;
    j["mean_radius"] = reg.mean_radius();
    json pts = json::array();
    for (std::size_t i = 0; i < radii.size(); ++i) {
        json pt;
        pt["rank"] = i + 1;
        pt["radius"] = radii[i];
        pt["fitted"] = reg.slope * static_cast<double>(i + 1) + reg.intercept;
        pts.push_back(std::move(pt));
    }
    j["points"] = std::move(pts);
    write_json(j, path);
}

json posterior_json(const ScalePosterior& sp) {
    json j;
    j["scales"] = sp.scale_count;
    json joint = json::array(), post = json::array();
    for (int l = 1; l <= sp.scale_count; ++l) {
        json jr = json::array(), pr = json::array();
        for (int x = 0; x < DistanceField::kBins; ++x) {
            jr.push_back(sp.joint_at(l, x));
            pr.push_back(sp.posterior_at(l, x));
        }
        joint.push_back(std::move(jr));
        post.push_back(std::move(pr));
    }
    j["joint"] = std::move(joint);
    j["posterior"] = std::move(post);
    return j;
}

void dump_source_debug(const SourceContext& src, const std::string& stem) {
    save_image(false_color(src.field.dist, src.field.width, src.field.height),
               stem + ".dist.png");
    dump_width_fit(src.text, src.params, stem + ".widthfit.json");

    std::vector<std::uint8_t> indices(src.scale_map.scal.size());
    for (std::size_t i = 0; i < indices.size(); ++i)
        indices[i] = static_cast<std::uint8_t>(src.scale_map.scal[i] - 1);
    std::vector<std::array<std::uint8_t, 3>> palette;
    const std::array<std::uint8_t, 3> base[6] = {{31, 119, 180}, {255, 127, 14},
                                                 {44, 160, 44},  {214, 39, 40},
                                                 {148, 103, 189}, {140, 86, 75}};
    for (int l = 0; l < std::max(1, src.scale_map.scale_count); ++l)
        palette.push_back(base[l % 6]);
    save_indexed_image(indices, src.scale_map.width, src.scale_map.height, palette,
                       stem + ".scalemap.png");
    write_json(posterior_json(src.posterior), stem + ".posterior.json");
}

int run_transfer_command(const Options& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    log_verbose(opt, "loading images");
    const RasterImage source_text = load_image(opt.source_text);
    const RasterImage source_style = load_image(opt.source_style);
    const RasterImage target_text = load_image(opt.target_text);

    log_verbose(opt, "preprocessing source pair");
    const SourceContext src = prepare_source(source_text, source_style, opt.params);
    TransferContext ctx = prepare_transfer(src, target_text);
    log_verbose(opt, "synthesizing");
    const TransferResult result = run_transfer(ctx, opt.params.seed);
    save_image(result.output, opt.out);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json sidecar;
    sidecar["command"] = "transfer";
    sidecar["source_text"] = opt.source_text;
    sidecar["source_style"] = opt.source_style;
    sidecar["target_text"] = opt.target_text;
    sidecar["out"] = opt.out;
    sidecar["seed"] = opt.params.seed;
    sidecar["params"] = params_json(opt.params);
    sidecar["levels"] = trace_json(result.trace);
    sidecar["wall_time_seconds"] = wall;
    write_json(sidecar, replace_extension(opt.out, ".json"));

    if (opt.dump_debug) {
        const std::string stem = replace_extension(opt.out, "");
        dump_source_debug(src, stem + ".source");
        const LevelData& finest = ctx.levels.back();
        save_image(false_color(finest.tgt_dist, finest.tgt_text.width(),
                               finest.tgt_text.height()),
                   stem + ".target.dist.png");
    }
    log_verbose(opt, "done");
    return kExitOk;
}

int run_batch_command(const Options& opt) {
    std::error_code ec;
    fs::directory_iterator dir(opt.target_dir, ec);
    if (ec) {
        std::cerr << "texfx: cannot read directory: " << opt.target_dir << "\n";
        return kExitIo;
    }
    std::vector<fs::path> targets;
    for (const auto& entry : dir) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") targets.push_back(entry.path());
    }
    std::sort(targets.begin(), targets.end());
    if (targets.empty()) {
        std::cerr << "texfx: no PNG files in " << opt.target_dir << "\n";
        return kExitUsage;
    }

    const RasterImage source_text = load_image(opt.source_text);
    const RasterImage source_style = load_image(opt.source_style);
    log_verbose(opt, "preprocessing source pair once for " +
                         std::to_string(targets.size()) + " glyphs");
    const SourceContext src = prepare_source(source_text, source_style, opt.params);

    fs::create_directories(opt.out);

    struct GlyphResult {
        std::string target, out, error;
        std::uint64_t seed = 0;
        bool ok = false;
    };
    std::vector<GlyphResult> results(targets.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < targets.size(); i = next.fetch_add(1)) {
            GlyphResult& r = results[i];
            r.target = targets[i].string();
            r.seed = opt.params.seed ^ fnv1a64(targets[i].filename().string());
            r.out = (fs::path(opt.out) / targets[i].filename()).string();
            try {
                const RasterImage target_text = load_image(r.target);
                TransferContext ctx = prepare_transfer(src, target_text);
                const TransferResult result = run_transfer(ctx, r.seed);
                save_image(result.output, r.out);
                r.ok = true;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };
    const int thread_count =
        std::max(1, std::min<int>(opt.threads, static_cast<int>(targets.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int succeeded = 0;
    json entries = json::array();
    for (const GlyphResult& r : results) {
        json e;
        e["target"] = r.target;
        e["seed"] = r.seed;
        if (r.ok) {
            e["status"] = "ok";
            e["out"] = r.out;
            ++succeeded;
        } else {
            e["status"] = "failed";
            e["error"] = r.error;
        }
        entries.push_back(std::move(e));
        if (!r.ok) std::cerr << "texfx: " << r.target << " failed: " << r.error << "\n";
    }
    json manifest;
    manifest["command"] = "batch";
    manifest["source_text"] = opt.source_text;
    manifest["source_style"] = opt.source_style;
    manifest["out_dir"] = opt.out;
    manifest["base_seed"] = opt.params.seed;
    manifest["params"] = params_json(opt.params);
    manifest["succeeded"] = succeeded;
    manifest["failed"] = static_cast<int>(results.size()) - succeeded;
    manifest["targets"] = std::move(entries);
    write_json(manifest, (fs::path(opt.out) / "manifest.json").string());

    if (opt.dump_debug) dump_source_debug(src, (fs::path(opt.out) / "source").string());

    return succeeded > 0 ? kExitOk : kExitIo;
}

int run_analyze_command(const Options& opt) {
    const RasterImage source_text = load_image(opt.source_text);
    const RasterImage source_style = load_image(opt.source_style);

    std::vector<PartitionMode> modes;
    for (const std::string& name : opt.modes) modes.push_back(parse_partition_mode(name));

    AnalysisOptions options;
    options.partitions = opt.partitions;
    options.seed = opt.params.seed;
    log_verbose(opt, "running the partition study");
    const std::vector<ModeReport> reports =
        analyze_pair(source_text, source_style, modes, options);

    json j;
    j["image"] = opt.source_style;
    json mode_entries = json::array();
    for (const ModeReport& report : reports) {
        json m;
        m["mode"] = partition_mode_name(report.mode);
        m["r_color"] = report.color.r_color;
        m["epsilon"] = report.color.epsilon;
        if (report.scale.degenerate) {
            m["r_scale"] = nullptr;
            m["warning"] = "sigma_intra is zero; scale reliability is infinite";
        } else {
            m["r_scale"] = report.scale.r_scale;
        }
        m["sigma_inter"] = report.scale.sigma_inter;
        m["sigma_intra"] = report.scale.sigma_intra;
        json curves = json::array();
        for (std::size_t c = 0; c < report.curves.curves.size(); ++c) {
            json curve;
            curve["partition"] = c;
            json points = json::array();
            for (std::size_t s = 0; s < report.curves.sizes.size(); ++s) {
                json pt;
                pt["size"] = report.curves.sizes[s];
                pt["mean"] = report.curves.curves[c][s].mean;
                pt["std"] = report.curves.curves[c][s].stddev;
                points.push_back(std::move(pt));
            }
            curve["points"] = std::move(points);
            curves.push_back(std::move(curve));
        }
        m["curves"] = std::move(curves);
        mode_entries.push_back(std::move(m));
    }
    j["modes"] = std::move(mode_entries);

    if (opt.report.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json(j, opt.report);

    if (opt.dump_debug) {
        // dumps land next to the report; without one there is no named path
        if (opt.report.empty()) {
            std::cerr << "texfx: --dump-debug needs --report to anchor the dump paths\n";
        } else {
            const std::string stem = replace_extension(opt.report, "");
            const TextMask mask = binarize(source_text, opt.params.binarize_threshold);
            const DistanceField field =
                compute_distance_field(mask, opt.params.outlier_fraction);
            save_image(false_color(field.dist, field.width, field.height),
                       stem + ".dist.png");
            dump_width_fit(source_text, opt.params, stem + ".widthfit.json");
        }
    }
    return kExitOk;
}

void add_param_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--seed", opt.params.seed, "RNG seed");
    cmd->add_option("--lambda1", opt.params.lambda1, "distribution term weight");
    cmd->add_option("--lambda2", opt.params.lambda2, "psycho-visual term weight");
    cmd->add_option("--lambda3", opt.params.lambda3, "text term weight inside appearance");
    cmd->add_option("--omega", opt.params.omega, "scale filter threshold");
    cmd->add_option("--patch-size", opt.params.patch_size, "patch side (odd, >= 3)");
    cmd->add_option("--scales", opt.params.scales, "number of joint scales L");
    cmd->add_option("--pyramid-depth", opt.params.pyramid_depth, "pyramid levels");
    cmd->add_option("--coarsest", opt.params.coarsest, "coarsest pyramid size in pixels");
    cmd->add_option("--iterations", opt.params.iterations, "search sweeps per level");
    cmd->add_option("--mode", opt.mode_name, "objective mode: full|baseline")
        ->check(CLI::IsMember({"full", "baseline"}));
    cmd->add_option("--binarize-threshold", opt.params.binarize_threshold,
                    "text mask threshold in (0,1)");
    cmd->add_option("--outlier-frac", opt.params.outlier_fraction,
                    "contour-radius outlier fraction (advanced)");
    cmd->add_flag("--dump-debug", opt.dump_debug, "write distance/scale debug artifacts");
    cmd->add_flag("--verbose", opt.verbose, "log progress to stderr");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"statistics-guided text effects transfer"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* transfer_cmd = app.add_subcommand("transfer", "stylize one target glyph image");
    transfer_cmd->add_option("--source-text", opt.source_text, "raw source text PNG")
        ->required();
    transfer_cmd->add_option("--source-style", opt.source_style, "stylized source PNG")
        ->required();
    transfer_cmd->add_option("--target-text", opt.target_text, "raw target text PNG")
        ->required();
    transfer_cmd->add_option("--out", opt.out, "output PNG path")->required();
    add_param_flags(transfer_cmd, opt);

    CLI::App* batch_cmd = app.add_subcommand("batch", "stylize every PNG in a directory");
    batch_cmd->add_option("--source-text", opt.source_text, "raw source text PNG")
        ->required();
    batch_cmd->add_option("--source-style", opt.source_style, "stylized source PNG")
        ->required();
    batch_cmd->add_option("--target-dir", opt.target_dir, "directory of target glyph PNGs")
        ->required();
    batch_cmd->add_option("--out", opt.out, "output directory")->required();
    batch_cmd->add_option("--threads", opt.threads, "worker threads");
    add_param_flags(batch_cmd, opt);

    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "reliability statistics for an exemplar pair");
    analyze_cmd->add_option("--source-text", opt.source_text, "raw source text PNG")
        ->required();
    analyze_cmd->add_option("--source-style", opt.source_style, "stylized source PNG")
        ->required();
    analyze_cmd->add_option("--report", opt.report, "report JSON path (stdout if omitted)");
    analyze_cmd->add_option("--modes", opt.modes, "partition modes to run")->delimiter(',');
    analyze_cmd->add_option("--partitions", opt.partitions, "partition count N");
    add_param_flags(analyze_cmd, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    opt.params.mode = opt.mode_name == "baseline" ? SynthesisParams::Mode::Baseline
                                                  : SynthesisParams::Mode::Full;

    try {
        opt.params.validate();
        if (transfer_cmd->parsed()) return run_transfer_command(opt);
        if (batch_cmd->parsed()) return run_batch_command(opt);
        if (analyze_cmd->parsed()) return run_analyze_command(opt);
        return kExitUsage;
    } catch (const FileNotFoundError& e) {
        std::cerr << "texfx: " << e.what() << "\n";
        return kExitIo;
    } catch (const DecodeError& e) {
        std::cerr << "texfx: " << e.what() << "\n";
        return kExitIo;
    } catch (const UnsupportedFormatError& e) {
        std::cerr << "texfx: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        std::cerr << "texfx: " << e.what() << "\n";
        return kExitIo;
    } catch (const InvalidArgumentError& e) {
        std::cerr << "texfx: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "texfx: " << e.what() << "\n";
        return kExitDegenerate;
    }
}
