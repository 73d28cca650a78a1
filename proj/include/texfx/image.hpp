#pragma once

#include <cstdint>
#include <vector>

#include "texfx/errors.hpp"

namespace texfx {

struct Pixel {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Dense float image, 1 (mask/luma) or 3 (RGB) interleaved channels, values in [0,1].
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int channels, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    float at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    float& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    // Mean of channels at a pixel.
    float luma(int x, int y) const;

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    bool same_dims(const RasterImage& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               channels_ == other.channels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

// Patch center with its 1-based scale index (1 = finest).
struct PatchCoord {
    int x = 0;
    int y = 0;
    int scale = 1;
};

// Levels ordered coarsest to finest; the finest level is the source image itself.
// scale_ratios[i] = full max dimension / level max dimension (finest ratio = 1).
struct Pyramid {
    std::vector<RasterImage> levels;
    std::vector<double> scale_ratios;

    int depth() const { return static_cast<int>(levels.size()); }
    const RasterImage& finest() const { return levels.back(); }
    const RasterImage& coarsest() const { return levels.front(); }
};

// Clamp a patch center so the m-by-m footprint lies inside [0,dim).
int clamp_center(int v, int dim, int patch_size);
Pixel clamp_center(Pixel p, int width, int height, int patch_size);

// Box-prefiltered resampling to round(size/factor). factor must be > 1.
RasterImage downsample(const RasterImage& img, double factor);

// Internal resampling core shared with non-image fields (no [0,1] clamp).
// Area-averages `src` (w0 x h0, `channels` interleaved) onto a w1 x h1 grid.
std::vector<double> resample_area(const std::vector<double>& src, int w0, int h0,
                                  int channels, int w1, int h1);

// Geometric size progression from `coarsest` max-dim up to the input;
// adjacent levels with identical dims are merged, so depth may come out
// smaller than requested for tiny inputs.
Pyramid build_pyramid(const RasterImage& img, int depth, int coarsest);

// Mean squared per-channel difference over the m x m footprints centered at
// pA / pB (centers are clamped to the valid interior first). Symmetric.
double patch_ssd(const RasterImage& imgA, PatchCoord pA,
                 const RasterImage& imgB, PatchCoord pB, int patch_size);

} // namespace texfx
