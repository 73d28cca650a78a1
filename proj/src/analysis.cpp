#include "texfx/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "texfx/rng.hpp"

namespace texfx {

const char* partition_mode_name(PartitionMode mode) {
    switch (mode) {
        case PartitionMode::Random: return "random";
        case PartitionMode::Grid: return "grid";
        case PartitionMode::Angle: return "angle";
        case PartitionMode::Ring: return "ring";
        case PartitionMode::Distance: return "distance";
    }
    return "?";
}

PartitionMode parse_partition_mode(const std::string& name) {
    if (name == "random") return PartitionMode::Random;
    if (name == "grid") return PartitionMode::Grid;
    if (name == "angle") return PartitionMode::Angle;
    if (name == "ring") return PartitionMode::Ring;
    if (name == "distance") return PartitionMode::Distance;
    throw InvalidArgumentError("unknown partition mode: " + name);
}

namespace {

// Assign labels by sorted order: indices are split into N contiguous blocks
// whose sizes differ by at most one (larger blocks first).
void assign_by_order(const std::vector<std::size_t>& order, int N, std::vector<int>& label) {
    const std::size_t total = order.size();
    const std::size_t base = total / N;
    const std::size_t rem = total % N;
    std::size_t pos = 0;
    for (int c = 0; c < N; ++c) {
        const std::size_t count = base + (static_cast<std::size_t>(c) < rem ? 1 : 0);
        for (std::size_t k = 0; k < count; ++k) label[order[pos++]] = c;
    }
}

std::vector<std::size_t> order_by_scalar(const std::vector<double>& scalar) {
    std::vector<std::size_t> order(scalar.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scalar[a] < scalar[b];
    });
    return order;
}

} // namespace

PartitionMap make_partition(PartitionMode mode, int width, int height,
                            const DistanceField* field, int N, std::uint64_t seed) {
    if (N < 2) throw InvalidArgumentError("partition count must be >= 2");
    if (mode == PartitionMode::Distance && field == nullptr)
        throw InvalidArgumentError("distance mode requires a distance field");

    PartitionMap pm;
    pm.mode = mode;
    pm.N = N;
    pm.width = width;
    pm.height = height;
    const std::size_t total = static_cast<std::size_t>(width) * height;
    pm.label.assign(total, 0);

    const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;

    switch (mode) {
        case PartitionMode::Random: {
            std::vector<std::size_t> order(total);
            std::iota(order.begin(), order.end(), 0);
            Rng rng(seed);
            for (std::size_t i = total - 1; i > 0; --i)
                std::swap(order[i], order[rng.below(static_cast<int>(i + 1))]);
            assign_by_order(order, N, pm.label);
            break;
        }
        case PartitionMode::Grid: {
            // Near-square cell grid: quantiles of x into columns, then of y
            // within each column band.
            int gx = static_cast<int>(std::sqrt(static_cast<double>(N)));
            while (N % gx != 0) --gx;
            const int gy = N / gx;
            std::vector<double> xs(total);
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    xs[static_cast<std::size_t>(y) * width + x] = x;
            std::vector<std::size_t> order = order_by_scalar(xs);
            std::vector<int> band(total);
            assign_by_order(order, gx, band);
            for (int bx = 0; bx < gx; ++bx) {
                std::vector<std::size_t> members;
                for (std::size_t i = 0; i < total; ++i)
                    if (band[i] == bx) members.push_back(i);
                std::stable_sort(members.begin(), members.end(),
                                 [&](std::size_t a, std::size_t b) {
                                     return a / width < b / width;
                                 });
                std::vector<int> sub(total, 0);
                assign_by_order(members, gy, sub);
                for (std::size_t i : members) pm.label[i] = bx * gy + sub[i];
            }
            break;
        }
        case PartitionMode::Angle:
        case PartitionMode::Ring:
        case PartitionMode::Distance: {
            std::vector<double> scalar(total);
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * width + x;
                    if (mode == PartitionMode::Angle)
                        scalar[i] = std::atan2(y - cy, x - cx);
                    else if (mode == PartitionMode::Ring)
                        scalar[i] = std::hypot(x - cx, y - cy);
                    else
                        scalar[i] = field->dist[i];
                }
            assign_by_order(order_by_scalar(scalar), N, pm.label);
            break;
        }
    }
    return pm;
}

ColorReliability color_reliability(const PartitionMap& partition, const RasterImage& style) {
    if (partition.width != style.width() || partition.height != style.height())
        throw DimensionMismatchError("partition and style image dimensions differ");

    const int N = partition.N;
    constexpr int kFeatures = 4; // r, g, b, bias
    constexpr double kL2 = 1e-4;
    constexpr double kLearningRate = 2.0;
    constexpr double kGradTol = 1e-5;
    constexpr int kMaxEpochs = 500;

    const std::size_t total = partition.label.size();
    std::vector<double> features(total * kFeatures);
    for (int y = 0; y < style.height(); ++y)
        for (int x = 0; x < style.width(); ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * style.width() + x;
            for (int c = 0; c < 3; ++c)
                features[i * kFeatures + c] =
                    style.channels() == 3 ? style.at(x, y, c) : style.at(x, y, 0);
            features[i * kFeatures + 3] = 1.0;
        }

    std::vector<double> weights(static_cast<std::size_t>(N) * kFeatures, 0.0);
    std::vector<double> grad(weights.size());

    for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < total; ++i) {
            const double* x = &features[i * kFeatures];
            for (int c = 0; c < N; ++c) {
                const double* w = &weights[static_cast<std::size_t>(c) * kFeatures];
                double z = 0.0;
                for (int f = 0; f < kFeatures; ++f) z += w[f] * x[f];
                const double p = 1.0 / (1.0 + std::exp(-z));
                const double err = p - (partition.label[i] == c ? 1.0 : 0.0);
                double* g = &grad[static_cast<std::size_t>(c) * kFeatures];
                for (int f = 0; f < kFeatures; ++f) g[f] += err * x[f];
            }
        }
        double norm2 = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            grad[k] /= static_cast<double>(total);
            if (k % kFeatures != kFeatures - 1) grad[k] += 2.0 * kL2 * weights[k];
            norm2 += grad[k] * grad[k];
        }
        if (std::sqrt(norm2) < kGradTol) break;
        for (std::size_t k = 0; k < weights.size(); ++k)
            weights[k] -= kLearningRate * grad[k];
    }

    std::size_t wrong = 0;
    for (std::size_t i = 0; i < total; ++i) {
        const double* x = &features[i * kFeatures];
        int best = 0;
        double best_score = 0.0;
        for (int c = 0; c < N; ++c) {
            const double* w = &weights[static_cast<std::size_t>(c) * kFeatures];
            double z = 0.0;
            for (int f = 0; f < kFeatures; ++f) z += w[f] * x[f];
            if (c == 0 || z > best_score) {
                best = c;
                best_score = z;
            }
        }
        if (best != partition.label[i]) ++wrong;
    }

    ColorReliability r;
    r.epsilon = static_cast<double>(wrong) / static_cast<double>(total);
    r.r_color = 1.0 - r.epsilon;
    return r;
}

namespace {

inline int chebyshev(Pixel a, Pixel b) {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

double joint_distance(const RasterImage& text, const RasterImage& style,
                      Pixel a, Pixel b, int m) {
    return patch_ssd(text, {a.x, a.y}, text, {b.x, b.y}, m) +
           patch_ssd(style, {a.x, a.y}, style, {b.x, b.y}, m);
}

// Best same-image match distance for every valid center, exhaustively on
// small images and by propagation + random search elsewhere.
std::vector<double> self_match_distances(const RasterImage& text, const RasterImage& style,
                                         int m, Rng& rng) {
    const int w = text.width(), h = text.height();
    const int half = m / 2;
    std::vector<double> best(static_cast<std::size_t>(w) * h, -1.0);
    std::vector<Pixel> match(best.size());
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    const double centers = static_cast<double>(w - m + 1) * (h - m + 1);
    const double exhaustive_work =
        centers * centers * m * m * (text.channels() + style.channels());
    if (exhaustive_work <= 2.5e9) {
        for (int y = half; y <= h - 1 - half; ++y)
            for (int x = half; x <= w - 1 - half; ++x) {
                double b = -1.0;
                for (int cy = half; cy <= h - 1 - half; ++cy)
                    for (int cx = half; cx <= w - 1 - half; ++cx) {
                        if (chebyshev({cx, cy}, {x, y}) < m) continue;
                        const double d = joint_distance(text, style, {x, y}, {cx, cy}, m);
                        if (b < 0.0 || d < b) b = d;
                    }
                best[idx(x, y)] = b;
            }
        return best;
    }

    for (int y = half; y <= h - 1 - half; ++y)
        for (int x = half; x <= w - 1 - half; ++x) {
            for (int attempt = 0; attempt < 64; ++attempt) {
                const Pixel cand{rng.range(half, w - 1 - half), rng.range(half, h - 1 - half)};
                if (chebyshev(cand, {x, y}) < m) continue;
                match[idx(x, y)] = cand;
                best[idx(x, y)] = joint_distance(text, style, {x, y}, cand, m);
                break;
            }
        }

    auto try_candidate = [&](Pixel p, Pixel cand) {
        if (cand.x < half || cand.x > w - 1 - half || cand.y < half || cand.y > h - 1 - half)
            return;
        if (chebyshev(cand, p) < m) return;
        const double d = joint_distance(text, style, p, cand, m);
        std::size_t i = idx(p.x, p.y);
        if (best[i] < 0.0 || d < best[i]) {
            best[i] = d;
            match[i] = cand;
        }
    };

    const int max_dim = std::max(w, h);
    for (int iter = 0; iter < 10; ++iter) {
        const bool fwd = iter % 2 == 0;
        const int step = fwd ? 1 : -1;
        const int y0 = fwd ? half : h - 1 - half;
        const int x0 = fwd ? half : w - 1 - half;
        for (int y = y0; y >= half && y <= h - 1 - half; y += step)
            for (int x = x0; x >= half && x <= w - 1 - half; x += step) {
                const Pixel p{x, y};
                if (x - step >= half && x - step <= w - 1 - half && best[idx(x - step, y)] >= 0) {
                    Pixel cand = match[idx(x - step, y)];
                    cand.x += step;
                    try_candidate(p, cand);
                }
                if (y - step >= half && y - step <= h - 1 - half && best[idx(x, y - step)] >= 0) {
                    Pixel cand = match[idx(x, y - step)];
                    cand.y += step;
                    try_candidate(p, cand);
                }
                if (best[idx(x, y)] < 0) continue;
                for (int radius = max_dim; radius >= 1; radius /= 2) {
                    Pixel cand{match[idx(x, y)].x + rng.range(-radius, radius),
                               match[idx(x, y)].y + rng.range(-radius, radius)};
                    cand.x = std::clamp(cand.x, half, w - 1 - half);
                    cand.y = std::clamp(cand.y, half, h - 1 - half);
                    try_candidate(p, cand);
                }
            }
    }
    return best;
}

} // namespace

namespace {

void validate_sizes(const std::vector<int>& sizes) {
    for (int m : sizes)
        if (m < 3 || m % 2 == 0)
            throw InvalidArgumentError("response-curve patch sizes must be odd and >= 3");
}

// Per-size best-match maps; these do not depend on the partition, so the
// full study computes them once and aggregates per mode.
std::vector<std::vector<double>> match_maps(const RasterImage& text, const RasterImage& style,
                                            const std::vector<int>& sizes,
                                            std::uint64_t seed) {
    std::vector<std::vector<double>> maps;
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        Rng rng(seed ^ (0x51D3ULL * (si + 1)));
        maps.push_back(self_match_distances(text, style, sizes[si], rng));
    }
    return maps;
}

ResponseCurves aggregate_curves(const PartitionMap& partition,
                                const std::vector<std::vector<double>>& maps,
                                const std::vector<int>& sizes, std::uint64_t seed,
                                int max_samples) {
    ResponseCurves rc;
    rc.sizes = sizes;
    rc.curves.assign(partition.N, std::vector<CurvePoint>(sizes.size()));

    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const int half = sizes[si] / 2;

        // Partition members restricted to valid patch centers, subsampled.
        std::vector<std::vector<std::size_t>> members(partition.N);
        for (int y = half; y <= partition.height - 1 - half; ++y)
            for (int x = half; x <= partition.width - 1 - half; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * partition.width + x;
                members[partition.label[i]].push_back(i);
            }
        Rng sampler(seed ^ (0xA5A5ULL + si));
        for (auto& list : members) {
            if (list.empty())
                throw InvalidArgumentError("a partition has no valid patch centers");
            if (static_cast<int>(list.size()) > max_samples) {
                for (std::size_t i = list.size() - 1; i > 0; --i)
                    std::swap(list[i], list[sampler.below(static_cast<int>(i + 1))]);
                list.resize(max_samples);
            }
        }

        for (int c = 0; c < partition.N; ++c) {
            double sum = 0.0, sum2 = 0.0;
            for (std::size_t i : members[c]) {
                const double d = maps[si][i];
                sum += d;
                sum2 += d * d;
            }
            const double n = static_cast<double>(members[c].size());
            const double mean = sum / n;
            rc.curves[c][si].mean = mean;
            rc.curves[c][si].stddev = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
        }
    }
    return rc;
}

} // namespace

ResponseCurves scale_response_curves(const PartitionMap& partition, const RasterImage& text,
                                     const RasterImage& style, const std::vector<int>& sizes,
                                     std::uint64_t seed, int max_samples) {
    if (partition.width != text.width() || partition.height != text.height() ||
        text.width() != style.width() || text.height() != style.height())
        throw DimensionMismatchError("partition/text/style dimensions differ");
    validate_sizes(sizes);
    return aggregate_curves(partition, match_maps(text, style, sizes, seed), sizes, seed,
                            max_samples);
}

ScaleReliability scale_reliability(const ResponseCurves& curves) {
    const int parts = static_cast<int>(curves.curves.size());
    const int sizes = static_cast<int>(curves.sizes.size());
    if (parts < 2 || sizes < 2)
        throw InvalidArgumentError("scale reliability needs >= 2 partitions and sizes");

    ScaleReliability r;
    // sigma_inter: per size, the across-partition population std of means.
    double inter_sum = 0.0;
    for (int s = 0; s < sizes; ++s) {
        double sum = 0.0, sum2 = 0.0;
        for (int c = 0; c < parts; ++c) {
            const double v = curves.curves[c][s].mean;
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / parts;
        inter_sum += std::sqrt(std::max(0.0, sum2 / parts - mean * mean));
    }
    r.sigma_inter = inter_sum / sizes;

    double intra_sum = 0.0;
    for (int c = 0; c < parts; ++c)
        for (int s = 0; s < sizes; ++s) intra_sum += curves.curves[c][s].stddev;
    r.sigma_intra = intra_sum / (static_cast<double>(parts) * sizes);

    if (r.sigma_intra > 0.0) {
        r.r_scale = r.sigma_inter / r.sigma_intra;
    } else {
        r.degenerate = true;
        r.r_scale = std::numeric_limits<double>::infinity();
    }
    return r;
}

std::vector<ModeReport> analyze_pair(const RasterImage& text, const RasterImage& style,
                                     const std::vector<PartitionMode>& modes,
                                     const AnalysisOptions& options) {
    if (text.width() != style.width() || text.height() != style.height())
        throw DimensionMismatchError("text and style images must share dimensions");

    validate_sizes(options.sizes);

    DistanceField field;
    bool have_field = false;
    for (PartitionMode mode : modes)
        if (mode == PartitionMode::Distance && !have_field) {
            field = compute_distance_field(binarize(text, 0.5));
            have_field = true;
        }

    const std::vector<std::vector<double>> maps =
        match_maps(text, style, options.sizes, options.seed);

    std::vector<ModeReport> reports;
    for (PartitionMode mode : modes) {
        ModeReport report;
        report.mode = mode;
        const PartitionMap pm =
            make_partition(mode, text.width(), text.height(),
                           have_field ? &field : nullptr, options.partitions, options.seed);
        report.color = color_reliability(pm, style);
        report.curves =
            aggregate_curves(pm, maps, options.sizes, options.seed, options.max_samples);
        report.scale = scale_reliability(report.curves);
        reports.push_back(std::move(report));
    }
    return reports;
}

} // namespace texfx
