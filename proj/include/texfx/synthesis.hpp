#pragma once

#include <cstdint>
#include <vector>

#include "texfx/image.hpp"
#include "texfx/rng.hpp"
#include "texfx/scale_stats.hpp"
#include "texfx/text_geometry.hpp"

namespace texfx {

struct SynthesisParams {
    int patch_size = 5;        // m, odd
    int scales = 5;            // L
    double scale_factor = 2.0; // s
    double lambda1 = 0.01;     // distribution term weight
    double lambda2 = 0.005;    // psycho-visual term weight
    double lambda3 = 10.0;     // text-vs-style balance inside the appearance term
    double omega = 0.3;        // scale filter threshold
    int pyramid_depth = 10;
    int coarsest = 32;
    int iterations = 10;       // PatchMatch sweeps per pyramid level
    std::uint64_t seed = 1;
    enum class Mode { Baseline, Full };
    Mode mode = Mode::Full;
    double binarize_threshold = 0.5;
    double outlier_fraction = 0.2;

    void validate() const;
};

// Target-to-source correspondence map over patch centers. Entry (i,j) is the
// target patch centered at pixel (i+half, j+half); nnf values are source
// pixel coordinates, always valid patch centers. usage counts how many target
// patches currently map to each source center; cost caches the appearance +
// distribution part of each correspondence (the usage penalty is read live
// from the counts).
struct NNField {
    int width = 0, height = 0;         // target center grid
    int src_width = 0, src_height = 0; // source center grid
    int patch_size = 5;
    std::vector<Pixel> nnf;
    std::vector<double> cost;
    std::vector<int> usage; // indexed by source center grid

    int half() const { return patch_size / 2; }
    std::size_t size() const { return nnf.size(); }
    Pixel target_pixel(int i, int j) const { return {i + half(), j + half()}; }
    std::size_t usage_index(Pixel q) const {
        return static_cast<std::size_t>(q.y - half()) * src_width + (q.x - half());
    }
    int usage_at(Pixel q) const { return usage[usage_index(q)]; }
};

// Everything one pyramid level needs for matching. tgt_style evolves during
// synthesis; coarser entries hold the result already synthesized there.
struct LevelData {
    RasterImage src_text, src_style;
    RasterImage tgt_text, tgt_style;
    std::vector<double> src_dist, tgt_dist; // normalized distances at this level
    std::vector<int> src_bin, tgt_bin;      // bins against the source field edges
};

struct TransferContext {
    SynthesisParams params;
    std::vector<LevelData> levels; // coarsest first
    ScalePosterior posterior;

    int level_count() const { return static_cast<int>(levels.size()); }
    // Number of joint scales used at a level: the level itself plus up to
    // L-1 coarser pyramid levels.
    int scale_window(int level) const;
};

// Source-side preprocessing shared across targets (batch mode reuses one).
struct SourceContext {
    SynthesisParams params;
    RasterImage text, style;
    DistanceField field;
    ScaleMap scale_map;
    ScalePosterior posterior;
    Pyramid text_pyr, style_pyr;
    std::vector<std::vector<double>> dist_levels;
    std::vector<std::vector<int>> bin_levels;
};

double distribution_cost(double dist_p, double dist_q);
double psycho_cost(int usage_count);

// Posterior-weighted multi-scale joint patch distance (full mode), or the
// single-scale two-image SSD (baseline mode). Posterior weights renormalize
// over the level's active scale window.
double appearance_cost(const TransferContext& ctx, int level, Pixel p, Pixel q);

double total_cost(const TransferContext& ctx, int level, Pixel p, Pixel q,
                  int usage_count);

NNField make_field(const TransferContext& ctx, int level);
void rebuild_usage(NNField& field);
// Refresh the cached appearance+distribution costs for the current map.
void recompute_costs(const TransferContext& ctx, int level, NNField& field);
// Sum of total_cost over all centers with the field's current usage counts
// (equivalently: match costs plus lambda2 times the sum of squared counts).
double field_objective(const TransferContext& ctx, int level, const NNField& field);

// Seeds the coarsest-level field by matching distance bins: each target
// center draws candidates from source centers of its bin (nearest nonempty
// bin as fallback) and keeps the one minimizing the distribution cost. The
// exhaustive variant scans every source center instead.
NNField init_by_distribution(const TransferContext& ctx, int level, Rng& rng,
                             bool exhaustive = false);

// One PatchMatch sweep: scanline propagation (forward on even iterations,
// backward on odd) followed by exponential random search (radius halving
// from the source dimension down to 1). Usage counts update live; a swap is
// accepted only when it strictly decreases the total objective, accounting
// the exact change of the squared-usage sum. Returns the objective at the
// start of the sweep (costs refreshed against the current tgt_style).
double patchmatch_step(const TransferContext& ctx, int level, NNField& field,
                       int iteration, Rng& rng);

// Unweighted Wexler-style voting: every target pixel averages the source
// pixels predicted by all patches that cover it.
RasterImage vote(const NNField& field, const RasterImage& source_style, int patch_size);

NNField upsample_field(const TransferContext& ctx, int coarse_level, int fine_level,
                       const NNField& coarse, Rng& rng);

struct LevelTrace {
    int width = 0, height = 0;
    // Objective at the start of each sweep plus one final value after the
    // last vote; length = iterations + 1.
    std::vector<double> objective;
};

struct TransferResult {
    RasterImage output;
    std::vector<LevelTrace> trace;
    NNField final_field;
};

SourceContext prepare_source(const RasterImage& S, const RasterImage& S_style,
                             const SynthesisParams& params);
TransferContext prepare_transfer(const SourceContext& src, const RasterImage& T);
TransferResult run_transfer(TransferContext& ctx, std::uint64_t seed);

// Full pipeline with params.seed.
TransferResult transfer(const RasterImage& S, const RasterImage& S_style,
                        const RasterImage& T, const SynthesisParams& params);

} // namespace texfx
