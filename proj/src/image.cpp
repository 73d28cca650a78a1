#include "texfx/image.hpp"

#include <algorithm>
#include <cmath>

namespace texfx {

RasterImage::RasterImage(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1)
        throw InvalidArgumentError("image dimensions must be >= 1");
    if (channels != 1 && channels != 3)
        throw InvalidArgumentError("channel count must be 1 or 3");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

float RasterImage::luma(int x, int y) const {
    if (channels_ == 1) return at(x, y, 0);
    float s = 0.0f;
    for (int c = 0; c < channels_; ++c) s += at(x, y, c);
    return s / static_cast<float>(channels_);
}

int clamp_center(int v, int dim, int patch_size) {
    const int h = patch_size / 2;
    return std::clamp(v, h, dim - 1 - h);
}

Pixel clamp_center(Pixel p, int width, int height, int patch_size) {
    return {clamp_center(p.x, width, patch_size), clamp_center(p.y, height, patch_size)};
}

namespace {

// One axis of area-average resampling. Each output cell i covers
// [i*f, (i+1)*f) in source pixel units, f = n0/n1. The first covered value
// is used as an offset so constant runs come out bit-exact.
void resample_axis(const double* src, int n0, int stride0, int count,
                   int stride_outer0, double* dst, int n1, int stride1,
                   int stride_outer1, int channels) {
    const double f = static_cast<double>(n0) / static_cast<double>(n1);
    for (int i = 0; i < n1; ++i) {
        const double lo = i * f;
        const double hi = std::min((i + 1) * f, static_cast<double>(n0));
        const int k0 = static_cast<int>(lo);
        const int k1 = std::min(static_cast<int>(std::ceil(hi)), n0) - 1;
        for (int outer = 0; outer < count; ++outer) {
            for (int c = 0; c < channels; ++c) {
                const double ref =
                    src[static_cast<std::size_t>(outer) * stride_outer0 + k0 * stride0 + c];
                double acc = 0.0, wsum = 0.0;
                for (int k = k0; k <= k1; ++k) {
                    const double w = std::min(hi, static_cast<double>(k + 1)) -
                                     std::max(lo, static_cast<double>(k));
                    acc += w * (src[static_cast<std::size_t>(outer) * stride_outer0 +
                                    k * stride0 + c] - ref);
                    wsum += w;
                }
                dst[static_cast<std::size_t>(outer) * stride_outer1 + i * stride1 + c] =
                    ref + acc / wsum;
            }
        }
    }
}

} // namespace

std::vector<double> resample_area(const std::vector<double>& src, int w0, int h0,
                                  int channels, int w1, int h1) {
    std::vector<double> tmp(static_cast<std::size_t>(w1) * h0 * channels);
    // Horizontal pass: rows are the outer loop.
    resample_axis(src.data(), w0, channels, h0, w0 * channels,
                  tmp.data(), w1, channels, w1 * channels, channels);
    std::vector<double> out(static_cast<std::size_t>(w1) * h1 * channels);
    // Vertical pass: columns are the outer loop.
    resample_axis(tmp.data(), h0, w1 * channels, w1, channels,
                  out.data(), h1, w1 * channels, channels, channels);
    return out;
}

RasterImage downsample(const RasterImage& img, double factor) {
    if (factor <= 1.0)
        throw InvalidArgumentError("downsample factor must be > 1");
    const int w1 = std::max(1, static_cast<int>(std::lround(img.width() / factor)));
    const int h1 = std::max(1, static_cast<int>(std::lround(img.height() / factor)));

    std::vector<double> src(img.data().begin(), img.data().end());
    std::vector<double> out =
        resample_area(src, img.width(), img.height(), img.channels(), w1, h1);

    RasterImage result(w1, h1, img.channels());
    for (std::size_t i = 0; i < out.size(); ++i)
        result.data()[i] = std::clamp(static_cast<float>(out[i]), 0.0f, 1.0f);
    return result;
}

Pyramid build_pyramid(const RasterImage& img, int depth, int coarsest) {
    if (depth < 1) throw InvalidArgumentError("pyramid depth must be >= 1");
    const int max_dim = std::max(img.width(), img.height());
    if (coarsest > max_dim)
        throw InvalidArgumentError("coarsest pyramid size exceeds the image size");

    Pyramid pyr;
    if (depth == 1) {
        pyr.levels.push_back(img);
        pyr.scale_ratios.push_back(1.0);
        return pyr;
    }

    const double growth = static_cast<double>(max_dim) / coarsest;
    int prev_dim = -1;
    for (int j = 0; j < depth; ++j) {
        const double t = static_cast<double>(j) / (depth - 1);
        const int level_dim = (j == depth - 1)
            ? max_dim
            : static_cast<int>(std::lround(coarsest * std::pow(growth, t)));
        if (level_dim == prev_dim) continue; // merge duplicate sizes
        prev_dim = level_dim;
        const double ratio = static_cast<double>(max_dim) / level_dim;
        pyr.scale_ratios.push_back(ratio);
        if (level_dim == max_dim)
            pyr.levels.push_back(img);
        else
            pyr.levels.push_back(downsample(img, ratio));
    }
    return pyr;
}

double patch_ssd(const RasterImage& imgA, PatchCoord pA,
                 const RasterImage& imgB, PatchCoord pB, int patch_size) {
    if (imgA.channels() != imgB.channels())
        throw DimensionMismatchError("patch_ssd requires matching channel counts");
    const int h = patch_size / 2;
    const int ax = clamp_center(pA.x, imgA.width(), patch_size);
    const int ay = clamp_center(pA.y, imgA.height(), patch_size);
    const int bx = clamp_center(pB.x, imgB.width(), patch_size);
    const int by = clamp_center(pB.y, imgB.height(), patch_size);

    const int channels = imgA.channels();
    double acc = 0.0;
    for (int dy = -h; dy <= h; ++dy) {
        for (int dx = -h; dx <= h; ++dx) {
            for (int c = 0; c < channels; ++c) {
                const double d = static_cast<double>(imgA.at(ax + dx, ay + dy, c)) -
                                 static_cast<double>(imgB.at(bx + dx, by + dy, c));
                acc += d * d;
            }
        }
    }
    return acc / (static_cast<double>(patch_size) * patch_size * channels);
}

} // namespace texfx
