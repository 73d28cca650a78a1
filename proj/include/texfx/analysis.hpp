#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texfx/image.hpp"
#include "texfx/text_geometry.hpp"

namespace texfx {

enum class PartitionMode { Random, Grid, Angle, Ring, Distance };

const char* partition_mode_name(PartitionMode mode);
// Parses "random", "grid", "angle", "ring" or "distance".
PartitionMode parse_partition_mode(const std::string& name);

// Splits the pixel domain into N equal-population classes (within one pixel)
// by quantiles of a per-mode scalar coordinate; random mode shuffles.
struct PartitionMap {
    PartitionMode mode = PartitionMode::Random;
    int N = 0;
    int width = 0, height = 0;
    std::vector<int> label;

    int at(int x, int y) const { return label[static_cast<std::size_t>(y) * width + x]; }
};

// `field` is required for the distance mode and ignored elsewhere.
PartitionMap make_partition(PartitionMode mode, int width, int height,
                            const DistanceField* field, int N, std::uint64_t seed);

struct ColorReliability {
    double r_color = 0.0;
    double epsilon = 1.0;
};

// Trains a one-vs-rest logistic classifier (RGB + bias, L2 1e-4, full-batch
// gradient descent, 500 epochs or gradient norm < 1e-5) to predict the
// partition label from pixel color; epsilon is the training error.
ColorReliability color_reliability(const PartitionMap& partition, const RasterImage& style);

struct CurvePoint {
    double mean = 0.0;
    double stddev = 0.0;
};

// curves[partition][size_index]
struct ResponseCurves {
    std::vector<int> sizes;
    std::vector<std::vector<CurvePoint>> curves;
};

// For each patch size and partition: the joint text+style distance from each
// member pixel to its best same-image match (Chebyshev exclusion >= size),
// aggregated to mean and population standard deviation. Members subsample to
// at most `max_samples` per partition.
ResponseCurves scale_response_curves(const PartitionMap& partition, const RasterImage& text,
                                     const RasterImage& style, const std::vector<int>& sizes,
                                     std::uint64_t seed, int max_samples = 2000);

struct ScaleReliability {
    double r_scale = 0.0;
    double sigma_inter = 0.0;
    double sigma_intra = 0.0;
    bool degenerate = false; // sigma_intra == 0: reliability reported infinite
};

ScaleReliability scale_reliability(const ResponseCurves& curves);

struct ModeReport {
    PartitionMode mode;
    ColorReliability color;
    ScaleReliability scale;
    ResponseCurves curves;
};

struct AnalysisOptions {
    int partitions = 16;
    std::vector<int> sizes = {3, 5, 9, 15, 21};
    std::uint64_t seed = 1;
    int max_samples = 2000;
};

// Runs the full study for the requested modes, in the given order.
std::vector<ModeReport> analyze_pair(const RasterImage& text, const RasterImage& style,
                                     const std::vector<PartitionMode>& modes,
                                     const AnalysisOptions& options);

} // namespace texfx
