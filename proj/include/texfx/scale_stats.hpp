#pragma once

#include <cstdint>
#include <vector>

#include "texfx/image.hpp"
#include "texfx/text_geometry.hpp"

namespace texfx {

// Decimated (S_l, S'_l) level pairs for the optimal-scale detection. Level 1
// is full resolution; level l is sampled at stride s^(l-1). Point decimation,
// not box filtering: the detector's variance criterion expects per-level
// pixel statistics to survive, and a prefilter would wash them out.
// Levels are kept only while min(width, height) >= 2 * patch_size so a
// self-match outside the exclusion window exists; L clamps accordingly.
struct ScaleStack {
    int scale_count = 0;     // L after clamping
    double factor = 2.0;     // s
    int patch_size = 5;      // m
    std::vector<RasterImage> text_levels;  // index 0 = level 1 (full res)
    std::vector<RasterImage> style_levels;

    const RasterImage& text(int level) const { return text_levels[level - 1]; }
    const RasterImage& style(int level) const { return style_levels[level - 1]; }
    // Full-resolution pixel mapped into a level, clamped to the patch interior.
    Pixel to_level(Pixel q, int level) const;
};

ScaleStack build_scale_stack(const RasterImage& text, const RasterImage& style,
                             int scale_count, double factor, int patch_size);

struct ScaleMatch {
    Pixel match{};            // best correspondence, in level coordinates
    double distance = 0.0;    // joint text+style mean-SSD at the minimum
    bool found = false;       // false when the exclusion window leaves no candidate
};

// Exhaustive argmin of the joint patch distance over all level centers at
// Chebyshev distance >= patch_size from q's mapping. Ties keep the first
// candidate in row-major order.
ScaleMatch best_match_at_scale(const ScaleStack& stack, int level, Pixel q_fullres);

// Per-pixel optimal scale in {1..L}; pixels whose level mapping has no
// admissible self-match candidate default to scale L (counted in
// `defaulted`).
struct ScaleMap {
    int width = 0;
    int height = 0;
    int scale_count = 0;
    std::vector<int> scal;
    std::int64_t defaulted = 0;

    int at(int x, int y) const { return scal[static_cast<std::size_t>(y) * width + x]; }
};

enum class MatchStrategy {
    Auto,       // exhaustive up to 64x64 levels, randomized search beyond
    Exhaustive,
    Randomized,
};

// Coarse-to-fine filter: starting at the roughest level, a pixel passes to a
// finer level while sigma + sqrt(d) exceeds omega; the first level where the
// criterion fails becomes its optimal scale, survivors get scale 1. sigma is
// sqrt of the pooled per-patch variance of the style patch (all pixels and
// channels jointly) divided by 2.
ScaleMap detect_optimal_scales(const ScaleStack& stack, double omega,
                               std::uint64_t seed = 0,
                               MatchStrategy strategy = MatchStrategy::Auto);

// hist(l, x) = number of pixels with scal = l and distance bin = x.
// Row-major L x 100.
std::vector<std::int64_t> scale_distance_histogram(const ScaleMap& sm,
                                                   const DistanceField& df);

struct ScalePosterior {
    int scale_count = 0;
    std::vector<double> joint;     // L x 100, sums to 1
    std::vector<double> posterior; // L x 100, each column sums to 1

    double joint_at(int level, int bin) const {
        return joint[static_cast<std::size_t>(level - 1) * DistanceField::kBins + bin];
    }
    double posterior_at(int level, int bin) const {
        return posterior[static_cast<std::size_t>(level - 1) * DistanceField::kBins + bin];
    }
};

// Joint = hist / total; posterior columns normalize to 1. Columns with no
// support copy the nearest supported column (ties resolve to the lower bin).
ScalePosterior estimate_posterior(const std::vector<std::int64_t>& hist, int scale_count);

} // namespace texfx
