// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. The CLI binary path comes in as argv[1] (used by the
// batch/single equivalence check).

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "texfx/analysis.hpp"
#include "texfx/png_io.hpp"
#include "texfx/synthesis.hpp"

#include "oracles.hpp"
#include "testutil.hpp"

using namespace texfx;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    char buffer[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buffer, sizeof(buffer), format, args);
    va_end(args);
    return buffer;
}

// 1. Self-transfer fidelity at full defaults on a 192x192 exemplar.
void criterion_self_transfer() {
    RasterImage text, style;
    testutil::make_neon_ring(192, text, style);
    SynthesisParams params; // defaults: m=5 L=5 lambdas .01/.005/10 omega .3 depth 10
    const auto t0 = std::chrono::steady_clock::now();
    const TransferResult result = transfer(text, style, text, params);
    const double wall = seconds_since(t0);
    const double psnr = testutil::psnr(result.output, style);
    report(1, "self-transfer fidelity", psnr >= 24.0 && wall <= 300.0,
           fmt("PSNR %.2f dB >= 24, wall %.1f s <= 300", psnr, wall));
}

// 2. Randomized search reaches the exhaustive appearance optimum.
void criterion_patchmatch_optimality() {
    int total = 0, good = 0;
    double worst_wall = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng gen(seed * 101);
        const RasterImage src_text = testutil::value_noise(32, 32, 1, 2, gen, 0.01);
        const RasterImage src_style = testutil::value_noise(32, 32, 3, 2, gen, 0.01);
        const RasterImage tgt_text = testutil::value_noise(32, 32, 1, 2, gen, 0.01);
        const RasterImage tgt_style = testutil::value_noise(32, 32, 3, 2, gen, 0.01);

        SynthesisParams params;
        params.pyramid_depth = 1;
        params.scales = 1;
        params.lambda1 = 0.0;
        params.lambda2 = 0.0;
        params.mode = SynthesisParams::Mode::Baseline;

        TransferContext ctx;
        ctx.params = params;
        LevelData lvl;
        lvl.src_text = src_text;
        lvl.src_style = src_style;
        lvl.tgt_text = tgt_text;
        lvl.tgt_style = tgt_style;
        lvl.src_dist.assign(32 * 32, 0.0);
        lvl.src_bin.assign(32 * 32, 0);
        lvl.tgt_dist.assign(32 * 32, 0.0);
        lvl.tgt_bin.assign(32 * 32, 0);
        ctx.levels.push_back(std::move(lvl));

        const auto t0 = std::chrono::steady_clock::now();
        NNField field = make_field(ctx, 0);
        Rng init(seed);
        for (Pixel& q : field.nnf)
            q = {field.half() + init.below(field.src_width),
                 field.half() + init.below(field.src_height)};
        rebuild_usage(field);
        recompute_costs(ctx, 0, field);
        Rng sweep(seed * 7 + 1);
        for (int it = 0; it < 5; ++it) patchmatch_step(ctx, 0, field, it, sweep);

        const auto opt = oracles::exhaustive_appearance_nnf(tgt_text, tgt_style, src_text,
                                                            src_style, 5, params.lambda3);
        worst_wall = std::max(worst_wall, seconds_since(t0));
        for (std::size_t i = 0; i < field.size(); ++i) {
            ++total;
            if (field.cost[i] <= opt[i] * 1.05 + 1e-12) ++good;
        }
    }
    const double frac = static_cast<double>(good) / total;
    report(2, "randomized search near-optimality", frac >= 0.90 && worst_wall <= 10.0,
           fmt("%.1f%% of pixels within 5%% of exhaustive (>= 90%%), worst pair %.2f s",
               100.0 * frac, worst_wall));
}

// 3. Scale detection equals the literal transcription of the filter loop.
void criterion_scale_detection_equivalence() {
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng gen(seed * 7919 + 13);
        const RasterImage text = testutil::value_noise(32, 32, 1, 8, gen);
        const RasterImage style = testutil::value_noise(32, 32, 3, 8, gen);
        const ScaleStack stack = build_scale_stack(text, style, 5, 2.0, 5);
        const ScaleMap sm = detect_optimal_scales(stack, 0.3, 0, MatchStrategy::Exhaustive);
        const std::vector<int> ref = oracles::alg1_transcription(stack, 0.3);
        if (sm.scal != ref) ++mismatches;
    }
    report(3, "optimal-scale detection equivalence", mismatches == 0,
           fmt("%d of 10 seeded 32x32 pairs diverged (need 0)", mismatches));
}

// 4. Distance normalization on bars plus resolution-doubling stability.
void criterion_distance_normalization() {
    bool pass = true;
    std::string detail;
    for (int w : {3, 6, 12}) {
        RasterImage img = testutil::make_bar(8 * w + 10, 16 * w, w, 12 * w);
        const TextMask mask = binarize(img, 0.5);
        const SkeletonContour sc = skeletonize(mask);
        const DistanceField df = compute_distance_field(mask);

        double contour_sum = 0.0;
        for (const Pixel& q : sc.contour)
            contour_sum += df.dist[static_cast<std::size_t>(q.y) * mask.width + q.x];
        const double mean = contour_sum / sc.contour.size();
        double skel_max = 0.0;
        for (const Pixel& p : sc.skeleton_pixels)
            skel_max = std::max(skel_max,
                                df.dist[static_cast<std::size_t>(p.y) * mask.width + p.x]);
        if (!(mean >= 0.95 && mean <= 1.05 && skel_max <= 0.1)) pass = false;
        detail += fmt("w=%d contour %.3f skel %.3f; ", w, mean, skel_max);
    }

    auto rect = [](int scale) {
        RasterImage img(172 * scale, 260 * scale, 1);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const double cx = (x + 0.5) / scale, cy = (y + 0.5) / scale;
                if (cx >= 55.5 && cx < 116.5 && cy >= 50.0 && cy < 210.0) img.at(x, y) = 1.0f;
            }
        return img;
    };
    const DistanceField df_c = compute_distance_field(binarize(rect(1), 0.5));
    const DistanceField df_f = compute_distance_field(binarize(rect(2), 0.5));
    double worst = 0.0;
    for (int y = 4; y < 256; ++y)
        for (int x = 4; x < 168; ++x) {
            double fine = 0.0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    fine += df_f.dist[static_cast<std::size_t>(2 * y + dy) * 344 + 2 * x + dx];
            worst = std::max(worst,
                             std::abs(df_c.dist[static_cast<std::size_t>(y) * 172 + x] -
                                      fine / 4.0));
        }
    if (worst >= 0.05) pass = false;
    detail += fmt("doubling max delta %.3f < 0.05", worst);
    report(4, "normalized distance statistics", pass, detail);
}

// 5. Posterior columns always sum to one.
void criterion_posterior_normalization() {
    Rng gen(424242);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int L = gen.range(2, 6);
        std::vector<std::int64_t> hist(static_cast<std::size_t>(L) * 100, 0);
        bool any = false;
        for (int x = 0; x < 100; ++x) {
            if (gen.unit() < 0.4) continue; // empty column
            for (int l = 0; l < L; ++l) {
                hist[static_cast<std::size_t>(l) * 100 + x] = gen.below(40);
                any |= hist[static_cast<std::size_t>(l) * 100 + x] > 0;
            }
        }
        if (!any) hist[gen.below(L * 100)] = 1;
        const ScalePosterior sp = estimate_posterior(hist, L);
        for (int x = 0; x < 100; ++x) {
            double col = 0.0;
            for (int l = 1; l <= L; ++l) col += sp.posterior_at(l, x);
            worst = std::max(worst, std::abs(col - 1.0));
        }
    }
    report(5, "posterior column normalization", worst <= 1e-9,
           fmt("worst |column sum - 1| = %.2e <= 1e-9 over 100 histograms", worst));
}

// 6. The usage-square identity holds exactly on arbitrary fields.
void criterion_usage_identity() {
    Rng gen(777);
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        NNField field;
        field.patch_size = 5;
        field.width = gen.range(4, 24);
        field.height = gen.range(4, 24);
        field.src_width = gen.range(4, 24);
        field.src_height = gen.range(4, 24);
        field.nnf.resize(static_cast<std::size_t>(field.width) * field.height);
        field.usage.assign(static_cast<std::size_t>(field.src_width) * field.src_height, 0);
        for (Pixel& q : field.nnf)
            q = {field.half() + gen.below(field.src_width),
                 field.half() + gen.below(field.src_height)};
        rebuild_usage(field);

        long long lhs = 0, rhs = 0;
        for (const Pixel& q : field.nnf) lhs += field.usage_at(q);
        for (int u : field.usage) rhs += static_cast<long long>(u) * u;
        if (lhs != rhs) ++bad;
    }
    report(6, "usage-count square identity", bad == 0,
           fmt("%d of 100 random fields violated the identity (need 0)", bad));
}

// 7. The psycho-visual weight lowers usage-count variance.
void criterion_psycho_direction() {
    RasterImage text, style;
    testutil::make_neon_ring(96, text, style);
    const RasterImage target = testutil::make_bar(96, 96, 8, 68);

    SynthesisParams with;
    with.pyramid_depth = 6;
    with.coarsest = 32;
    with.iterations = 6;
    with.seed = 31;
    SynthesisParams without = with;
    with.lambda2 = 0.005;
    without.lambda2 = 0.0;

    const TransferResult a = transfer(text, style, target, with);
    const TransferResult b = transfer(text, style, target, without);
    const double var_with = testutil::population_variance(a.final_field.usage);
    const double var_without = testutil::population_variance(b.final_field.usage);
    report(7, "psycho-visual term spreads usage", var_with < var_without,
           fmt("usage variance %.3f (lambda2=0.005) < %.3f (lambda2=0)", var_with,
               var_without));
}

// 8. Distribution-seeded initialization matches the distance fields.
void criterion_init_correlation() {
    RasterImage text, style;
    testutil::make_neon_ring(192, text, style);
    SynthesisParams params;
    const SourceContext src = prepare_source(text, style, params);
    TransferContext ctx = prepare_transfer(src, text);

    Rng rng(params.seed);
    const NNField field = init_by_distribution(ctx, 0, rng);
    const LevelData& lvl = ctx.levels[0];
    std::vector<double> dp, dq;
    for (int j = 0; j < field.height; ++j)
        for (int i = 0; i < field.width; ++i) {
            const Pixel p = field.target_pixel(i, j);
            const Pixel q = field.nnf[static_cast<std::size_t>(j) * field.width + i];
            dp.push_back(lvl.tgt_dist[static_cast<std::size_t>(p.y) * lvl.tgt_text.width() + p.x]);
            dq.push_back(lvl.src_dist[static_cast<std::size_t>(q.y) * lvl.src_text.width() + q.x]);
        }
    const double corr = testutil::pearson(dp, dq);
    report(8, "distribution-seeded initialization", corr >= 0.95,
           fmt("corr(dist(p), dist(nnf(p))) = %.4f >= 0.95", corr));
}

// 9. Partition-mode ranking on the synthetic suite.
void criterion_analysis_ranking() {
    const std::vector<PartitionMode> modes = {PartitionMode::Random, PartitionMode::Grid,
                                              PartitionMode::Angle, PartitionMode::Ring,
                                              PartitionMode::Distance};
    AnalysisOptions options;
    options.seed = 5;

    RasterImage text = testutil::make_stroke_glyph(160);
    const DistanceField field = compute_distance_field(binarize(text, 0.5));

    // hue-by-distance image scores the color factor
    const RasterImage hue_style = testutil::colorize_by_distance(text, field);
    std::map<PartitionMode, double> r_color;
    for (const ModeReport& rep : analyze_pair(text, hue_style, modes, options))
        r_color[rep.mode] = rep.color.r_color;

    // two-texture image scores the scale factor
    const RasterImage tex_style = testutil::two_texture_by_distance(text, field);
    std::map<PartitionMode, double> r_scale;
    for (const ModeReport& rep : analyze_pair(text, tex_style, modes, options))
        r_scale[rep.mode] = rep.scale.r_scale;

    bool pass = true;
    for (PartitionMode m : {PartitionMode::Random, PartitionMode::Grid, PartitionMode::Angle,
                            PartitionMode::Ring}) {
        if (r_color[PartitionMode::Distance] <= r_color[m]) pass = false;
        if (r_scale[PartitionMode::Distance] <= r_scale[m]) pass = false;
    }
    for (PartitionMode m : {PartitionMode::Grid, PartitionMode::Angle, PartitionMode::Ring,
                            PartitionMode::Distance})
        if (r_color[PartitionMode::Random] >= r_color[m]) pass = false;

    report(9, "partition-mode reliability ranking", pass,
           fmt("r_color dist %.3f rand %.3f | r_scale dist %.2f rand %.2f grid %.2f angle "
               "%.2f ring %.2f",
               r_color[PartitionMode::Distance], r_color[PartitionMode::Random],
               r_scale[PartitionMode::Distance], r_scale[PartitionMode::Random],
               r_scale[PartitionMode::Grid], r_scale[PartitionMode::Angle],
               r_scale[PartitionMode::Ring]));
}

// 10. Per-level objective never increases across sweeps.
void criterion_objective_monotonicity() {
    RasterImage text, style;
    testutil::make_neon_ring(96, text, style);
    int violations = 0;
    double worst = 0.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        SynthesisParams params;
        params.pyramid_depth = 6;
        params.coarsest = 32;
        params.iterations = 6;
        params.seed = seed;
        const TransferResult result = transfer(text, style, text, params);
        for (const LevelTrace& trace : result.trace)
            for (std::size_t i = 1; i < trace.objective.size(); ++i) {
                const double rise = trace.objective[i] - trace.objective[i - 1];
                if (rise > 1e-9) {
                    ++violations;
                    worst = std::max(worst, rise);
                }
            }
    }
    report(10, "per-level objective monotonicity", violations == 0,
           fmt("%d objective increases over 5 seeded runs (worst +%.2e, need 0)", violations,
               worst));
}

// 11. Batch equals single transfers with the derived per-glyph seeds.
void criterion_batch_single_equivalence(const std::string& cli) {
    const fs::path dir = fs::temp_directory_path() / "texfx_acceptance";
    fs::create_directories(dir / "glyphs");

    RasterImage text, style;
    testutil::make_neon_ring(64, text, style);
    save_image(text, (dir / "src_text.png").string());
    save_image(style, (dir / "src_style.png").string());
    save_image(testutil::make_bar(64, 64, 5, 44), (dir / "glyphs" / "one.png").string());
    save_image(testutil::make_bar(64, 64, 8, 36), (dir / "glyphs" / "two.png").string());
    save_image(testutil::make_stroke_glyph(64), (dir / "glyphs" / "three.png").string());

    const std::string fast = " --pyramid-depth 5 --scales 5 --coarsest 24 --iterations 4";
    auto shell = [](const std::string& cmd) {
        return WEXITSTATUS(std::system((cmd + " >/dev/null 2>&1").c_str()));
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool pass = true;
    std::string detail;
    const fs::path out = dir / "batch";
    if (shell(cli + " batch --source-text " + (dir / "src_text.png").string() +
              " --source-style " + (dir / "src_style.png").string() + " --target-dir " +
              (dir / "glyphs").string() + " --out " + out.string() + fast + " --seed 99") != 0) {
        pass = false;
        detail = "batch run failed";
    } else {
        const std::string manifest = slurp(out / "manifest.json");
        for (const std::string name : {"one", "two", "three"}) {
            const auto at = manifest.find(name + ".png");
            const auto seed_at = manifest.find("\"seed\": ", at);
            const auto seed_end = manifest.find_first_of(",\n", seed_at);
            if (at == std::string::npos || seed_at == std::string::npos) {
                pass = false;
                continue;
            }
            const std::string seed = manifest.substr(seed_at + 8, seed_end - seed_at - 8);
            const fs::path single = dir / ("single_" + name + ".png");
            if (shell(cli + " transfer --source-text " + (dir / "src_text.png").string() +
                      " --source-style " + (dir / "src_style.png").string() +
                      " --target-text " + (dir / "glyphs" / (name + ".png")).string() +
                      " --out " + single.string() + fast + " --seed " + seed) != 0)
                pass = false;
            else if (slurp(out / (name + ".png")) != slurp(single))
                pass = false;
        }
        detail = pass ? "3 glyphs byte-identical to single runs" : "outputs diverged";
    }
    report(11, "batch/single equivalence", pass, detail);
}

} // namespace

int main(int argc, char** argv) {
    criterion_self_transfer();
    criterion_patchmatch_optimality();
    criterion_scale_detection_equivalence();
    criterion_distance_normalization();
    criterion_posterior_normalization();
    criterion_usage_identity();
    criterion_psycho_direction();
    criterion_init_correlation();
    criterion_analysis_ranking();
    criterion_objective_monotonicity();
    if (argc > 1)
        criterion_batch_single_equivalence(argv[1]);
    else
        report(11, "batch/single equivalence", false, "CLI binary path not supplied");

    if (g_failures == 0)
        std::printf("all %d criteria passed\n", 11);
    else
        std::printf("%d criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
