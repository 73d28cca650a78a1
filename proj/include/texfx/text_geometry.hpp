#pragma once

#include <cstdint>
#include <vector>

#include "texfx/image.hpp"

namespace texfx {

// Binary text region. `inside[y*width+x]` is nonzero for pixels in the region.
struct TextMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> inside;

    bool is_inside(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height &&
               inside[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

// Medial skeleton plus the 4-adjacency boundary of the region, both as pixel
// sets. Contour order is the row-major scan (deterministic).
struct SkeletonContour {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> skeleton; // bitmap, width*height
    std::vector<Pixel> skeleton_pixels;
    std::vector<Pixel> contour;

    int contour_count() const { return static_cast<int>(contour.size()); }
};

// Linear fit of sorted contour radii against their rank (1-based).
struct WidthRegression {
    double slope = 0.0;       // pixels per rank
    double intercept = 0.0;   // pixels
    int contour_count = 0;

    double mean_radius() const { return 0.5 * slope * contour_count + intercept; }
    double outlier_floor(double fraction = 0.2) const {
        return fraction * slope * contour_count + intercept;
    }
};

// Exact Euclidean distance transform result. `nearest` holds the linear pixel
// index of the closest set member (any one of them on exact ties).
struct DistanceTransform {
    int width = 0;
    int height = 0;
    std::vector<double> dist;  // Euclidean distance
    std::vector<double> dist2; // exact squared distance (integer-valued)
    std::vector<std::int32_t> nearest;
};

// Normalized skeleton distance field: contour pixels sit at 1, the skeleton
// near 0, background grows past 1. Carries the 100-bin uniform quantization
// of [0, max] used by the scale statistics.
struct DistanceField {
    int width = 0;
    int height = 0;
    std::vector<double> dist;      // normalized distance per pixel
    std::vector<int> bin;          // quantized bin per pixel, in [0,99]
    std::vector<double> bin_edges; // 101 ascending edges over [0, max]
    WidthRegression regression;
    double max_dist = 0.0;

    static constexpr int kBins = 100;

    // Quantize an arbitrary distance against this field's edges. Values past
    // the max clamp to bin 99; a value exactly on an interior edge goes to
    // the higher bin.
    int bin_of(double value) const;
};

// Threshold on per-pixel luma (mean of channels); ties land inside.
// Throws DegenerateMaskError when the result is all-inside or all-outside.
TextMask binarize(const RasterImage& text_img, double threshold);

// Iterative two-subcycle thinning (Zhang-Suen) to a 1-pixel-wide skeleton,
// plus the 4-adjacency boundary trace. Pixels on the image border count as
// boundary when they touch the image edge.
SkeletonContour skeletonize(const TextMask& mask);

// Exact Euclidean distance transform (two-pass lower-envelope method) with
// nearest-member recovery. `points` must be nonempty.
DistanceTransform distance_to_set(int width, int height, const std::vector<Pixel>& points);

// Sorts contour radii ascending and fits radius against rank by ordinary
// least squares. Needs at least 2 contour pixels.
WidthRegression fit_width_regression(const SkeletonContour& sc,
                                     const DistanceTransform& dist_to_skel);

// Outlier-corrected contour radius: raw skeleton distance floored at the
// regression value for the 20% rank.
double corrected_radius(Pixel q_on_contour, const WidthRegression& reg,
                        const DistanceTransform& dist_to_skel,
                        double outlier_fraction = 0.2);

// Assembles the normalized field: outside the region 1 + dist(q,contour)/mean
// radius, inside 1 - dist(q,contour)/corrected radius at the nearest contour
// pixel (negative values floor at 0). Builds the uniform 100-bin quantization
// over [0, max].
DistanceField normalized_distance_field(const TextMask& mask, const SkeletonContour& sc,
                                        const WidthRegression& reg,
                                        const DistanceTransform& dist_to_skel,
                                        const DistanceTransform& dist_to_contour,
                                        double outlier_fraction = 0.2);

// Full pipeline: binarize is assumed done; runs skeleton, transforms,
// regression and the normalized field in one call.
DistanceField compute_distance_field(const TextMask& mask, double outlier_fraction = 0.2);

} // namespace texfx
