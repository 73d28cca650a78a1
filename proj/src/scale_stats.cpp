#include "texfx/scale_stats.hpp"

#include <algorithm>
#include <cmath>

#include "texfx/rng.hpp"

namespace texfx {

namespace {

RasterImage decimate(const RasterImage& img, int w1, int h1) {
    RasterImage out(w1, h1, img.channels());
    const double fx = static_cast<double>(img.width()) / w1;
    const double fy = static_cast<double>(img.height()) / h1;
    for (int y = 0; y < h1; ++y) {
        const int sy = std::min(img.height() - 1, static_cast<int>((y + 0.5) * fy));
        for (int x = 0; x < w1; ++x) {
            const int sx = std::min(img.width() - 1, static_cast<int>((x + 0.5) * fx));
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

inline int chebyshev(Pixel a, Pixel b) {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Joint text+style mean-SSD between two level centers.
double joint_distance(const RasterImage& text, const RasterImage& style,
                      Pixel a, Pixel b, int m) {
    return patch_ssd(text, {a.x, a.y}, text, {b.x, b.y}, m) +
           patch_ssd(style, {a.x, a.y}, style, {b.x, b.y}, m);
}

// Pooled population variance of the style patch (all pixels and channels).
double patch_sigma(const RasterImage& style, Pixel c, int m) {
    const int h = m / 2;
    const int cx = clamp_center(c.x, style.width(), m);
    const int cy = clamp_center(c.y, style.height(), m);
    double sum = 0.0, sum2 = 0.0;
    const int n = m * m * style.channels();
    for (int dy = -h; dy <= h; ++dy)
        for (int dx = -h; dx <= h; ++dx)
            for (int ch = 0; ch < style.channels(); ++ch) {
                const double v = style.at(cx + dx, cy + dy, ch);
                sum += v;
                sum2 += v * v;
            }
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    return std::sqrt(var) / 2.0;
}

struct LevelMatches {
    int width = 0, height = 0; // level dims
    std::vector<ScaleMatch> match; // per level pixel (valid centers carry data)
    std::vector<double> sigma;
};

ScaleMatch exhaustive_match(const RasterImage& text, const RasterImage& style,
                            Pixel center, int m) {
    const int h = m / 2;
    ScaleMatch best;
    for (int y = h; y <= text.height() - 1 - h; ++y)
        for (int x = h; x <= text.width() - 1 - h; ++x) {
            const Pixel cand{x, y};
            if (chebyshev(cand, center) < m) continue;
            const double d = joint_distance(text, style, center, cand, m);
            if (!best.found || d < best.distance) {
                best.found = true;
                best.match = cand;
                best.distance = d;
            }
        }
    return best;
}

// Self-NNF via propagation + exponential random search, for levels too large
// to scan exhaustively. 10 sweeps.
void randomized_matches(const RasterImage& text, const RasterImage& style, int m,
                        Rng& rng, LevelMatches& lm) {
    const int h = m / 2;
    const int w = text.width(), ht = text.height();
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    // Random init honoring the exclusion window.
    for (int y = h; y <= ht - 1 - h; ++y)
        for (int x = h; x <= w - 1 - h; ++x) {
            ScaleMatch& sm = lm.match[idx(x, y)];
            for (int attempt = 0; attempt < 64 && !sm.found; ++attempt) {
                const Pixel cand{rng.range(h, w - 1 - h), rng.range(h, ht - 1 - h)};
                if (chebyshev(cand, {x, y}) < m) continue;
                sm.found = true;
                sm.match = cand;
                sm.distance = joint_distance(text, style, {x, y}, cand, m);
            }
        }

    auto try_candidate = [&](Pixel p, Pixel cand) {
        if (cand.x < h || cand.x > w - 1 - h || cand.y < h || cand.y > ht - 1 - h) return;
        if (chebyshev(cand, p) < m) return;
        ScaleMatch& sm = lm.match[idx(p.x, p.y)];
        const double d = joint_distance(text, style, p, cand, m);
        if (!sm.found || d < sm.distance) {
            sm.found = true;
            sm.match = cand;
            sm.distance = d;
        }
    };

    const int max_dim = std::max(w, ht);
    for (int iter = 0; iter < 10; ++iter) {
        const bool forward = (iter % 2 == 0);
        const int x0 = forward ? h : w - 1 - h;
        const int x1 = forward ? w - 1 - h : h;
        const int y0 = forward ? h : ht - 1 - h;
        const int y1 = forward ? ht - 1 - h : h;
        const int step = forward ? 1 : -1;
        for (int y = y0; forward ? y <= y1 : y >= y1; y += step) {
            for (int x = x0; forward ? x <= x1 : x >= x1; x += step) {
                const Pixel p{x, y};
                const int px = x - step, py = y - step;
                if (px >= h && px <= w - 1 - h && lm.match[idx(px, y)].found) {
                    Pixel cand = lm.match[idx(px, y)].match;
                    cand.x += step;
                    try_candidate(p, cand);
                }
                if (py >= h && py <= ht - 1 - h && lm.match[idx(x, py)].found) {
                    Pixel cand = lm.match[idx(x, py)].match;
                    cand.y += step;
                    try_candidate(p, cand);
                }
                ScaleMatch& sm = lm.match[idx(x, y)];
                if (!sm.found) continue;
                for (int radius = max_dim; radius >= 1; radius /= 2) {
                    Pixel cand{sm.match.x + rng.range(-radius, radius),
                               sm.match.y + rng.range(-radius, radius)};
                    cand.x = std::clamp(cand.x, h, w - 1 - h);
                    cand.y = std::clamp(cand.y, h, ht - 1 - h);
                    try_candidate(p, cand);
                }
            }
        }
    }
}

LevelMatches compute_level_matches(const ScaleStack& stack, int level,
                                   MatchStrategy strategy, Rng& rng) {
    const RasterImage& text = stack.text(level);
    const RasterImage& style = stack.style(level);
    const int m = stack.patch_size;
    const int h = m / 2;

    LevelMatches lm;
    lm.width = text.width();
    lm.height = text.height();
    lm.match.assign(static_cast<std::size_t>(lm.width) * lm.height, {});
    lm.sigma.assign(lm.match.size(), 0.0);

    bool exhaustive = strategy != MatchStrategy::Randomized;
    if (strategy == MatchStrategy::Auto && (lm.width > 64 || lm.height > 64))
        exhaustive = false;

    if (!exhaustive) randomized_matches(text, style, m, rng, lm);
    for (int y = h; y <= lm.height - 1 - h; ++y)
        for (int x = h; x <= lm.width - 1 - h; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * lm.width + x;
            if (exhaustive) lm.match[i] = exhaustive_match(text, style, {x, y}, m);
            lm.sigma[i] = patch_sigma(style, {x, y}, m);
        }
    return lm;
}

} // namespace

Pixel ScaleStack::to_level(Pixel q, int level) const {
    const RasterImage& lvl = text_levels[level - 1];
    const double stride = std::pow(factor, level - 1);
    const int x = static_cast<int>(std::lround(q.x / stride));
    const int y = static_cast<int>(std::lround(q.y / stride));
    return clamp_center({x, y}, lvl.width(), lvl.height(), patch_size);
}

ScaleStack build_scale_stack(const RasterImage& text, const RasterImage& style,
                             int scale_count, double factor, int patch_size) {
    if (text.width() != style.width() || text.height() != style.height())
        throw DimensionMismatchError("text/style pair must share dimensions");
    if (scale_count < 1) throw InvalidArgumentError("scale count must be >= 1");
    if (factor <= 1.0) throw InvalidArgumentError("scale factor must be > 1");

    ScaleStack stack;
    stack.factor = factor;
    stack.patch_size = patch_size;
    for (int level = 1; level <= scale_count; ++level) {
        const double stride = std::pow(factor, level - 1);
        const int w = static_cast<int>(std::lround(text.width() / stride));
        const int h = static_cast<int>(std::lround(text.height() / stride));
        if (level > 1 && (w < 2 * patch_size || h < 2 * patch_size)) break;
        if (level == 1) {
            stack.text_levels.push_back(text);
            stack.style_levels.push_back(style);
        } else {
            stack.text_levels.push_back(decimate(text, w, h));
            stack.style_levels.push_back(decimate(style, w, h));
        }
        stack.scale_count = level;
    }
    return stack;
}

ScaleMatch best_match_at_scale(const ScaleStack& stack, int level, Pixel q_fullres) {
    const Pixel center = stack.to_level(q_fullres, level);
    return exhaustive_match(stack.text(level), stack.style(level), center,
                            stack.patch_size);
}

ScaleMap detect_optimal_scales(const ScaleStack& stack, double omega,
                               std::uint64_t seed, MatchStrategy strategy) {
    if (omega <= 0.0) throw InvalidArgumentError("omega must be > 0");
    const RasterImage& full = stack.text(1);
    const int L = stack.scale_count;

    ScaleMap sm;
    sm.width = full.width();
    sm.height = full.height();
    sm.scale_count = L;
    sm.scal.assign(static_cast<std::size_t>(sm.width) * sm.height, 1);

    std::vector<std::uint8_t> active(sm.scal.size(), 1);
    Rng rng(seed ^ 0x5CA1E57A75ULL);

    for (int level = L; level >= 2; --level) {
        const LevelMatches lm = compute_level_matches(stack, level, strategy, rng);
        for (int y = 0; y < sm.height; ++y)
            for (int x = 0; x < sm.width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * sm.width + x;
                if (!active[i]) continue;
                const Pixel c = stack.to_level({x, y}, level);
                const std::size_t ci = static_cast<std::size_t>(c.y) * lm.width + c.x;
                const ScaleMatch& match = lm.match[ci];
                if (!match.found) {
                    sm.scal[i] = L; // unmeasurable: default to the roughest scale
                    sm.defaulted += 1;
                    active[i] = 0;
                    continue;
                }
                const bool passes = lm.sigma[ci] + std::sqrt(match.distance) > omega;
                if (!passes) {
                    sm.scal[i] = level;
                    active[i] = 0;
                }
            }
    }
    return sm;
}

std::vector<std::int64_t> scale_distance_histogram(const ScaleMap& sm,
                                                   const DistanceField& df) {
    if (sm.width != df.width || sm.height != df.height)
        throw DimensionMismatchError("scale map and distance field dimensions differ");
    std::vector<std::int64_t> hist(
        static_cast<std::size_t>(sm.scale_count) * DistanceField::kBins, 0);
    for (std::size_t i = 0; i < sm.scal.size(); ++i)
        hist[static_cast<std::size_t>(sm.scal[i] - 1) * DistanceField::kBins + df.bin[i]] += 1;
    return hist;
}

ScalePosterior estimate_posterior(const std::vector<std::int64_t>& hist, int scale_count) {
    constexpr int B = DistanceField::kBins;
    std::int64_t total = 0;
    for (std::int64_t v : hist) total += v;
    if (total <= 0) throw InvalidArgumentError("histogram is empty");

    ScalePosterior sp;
    sp.scale_count = scale_count;
    sp.joint.resize(hist.size());
    sp.posterior.assign(hist.size(), 0.0);
    for (std::size_t i = 0; i < hist.size(); ++i)
        sp.joint[i] = static_cast<double>(hist[i]) / static_cast<double>(total);

    std::vector<std::int64_t> col_sum(B, 0);
    for (int l = 0; l < scale_count; ++l)
        for (int x = 0; x < B; ++x) col_sum[x] += hist[static_cast<std::size_t>(l) * B + x];

    for (int x = 0; x < B; ++x) {
        int src = x;
        if (col_sum[x] == 0) {
            // nearest supported column, preferring the lower bin on ties
            int best = -1, best_dist = B + 1;
            for (int x2 = 0; x2 < B; ++x2) {
                if (col_sum[x2] == 0) continue;
                const int d = std::abs(x2 - x);
                if (d < best_dist) {
                    best_dist = d;
                    best = x2;
                }
            }
            src = best;
        }
        for (int l = 0; l < scale_count; ++l)
            sp.posterior[static_cast<std::size_t>(l) * B + x] =
                static_cast<double>(hist[static_cast<std::size_t>(l) * B + src]) /
                static_cast<double>(col_sum[src]);
    }
    return sp;
}

} // namespace texfx
