#include "texfx/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace texfx {

void SynthesisParams::validate() const {
    if (patch_size < 3 || patch_size % 2 == 0)
        throw InvalidArgumentError("patch size must be odd and >= 3");
    if (scales < 1 || scales > 32)
        throw InvalidArgumentError("scale count must be in [1, 32]");
    if (scale_factor <= 1.0) throw InvalidArgumentError("scale factor must be > 1");
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
        throw InvalidArgumentError("term weights must be >= 0");
    if (omega <= 0) throw InvalidArgumentError("omega must be > 0");
    if (pyramid_depth < 1) throw InvalidArgumentError("pyramid depth must be >= 1");
    if (scales > pyramid_depth)
        throw InvalidArgumentError("scale count must not exceed the pyramid depth");
    if (coarsest < patch_size)
        throw InvalidArgumentError("coarsest pyramid size must fit one patch");
    if (iterations < 1) throw InvalidArgumentError("iteration count must be >= 1");
    if (binarize_threshold <= 0 || binarize_threshold >= 1)
        throw InvalidArgumentError("binarize threshold must be in (0,1)");
    if (outlier_fraction < 0 || outlier_fraction >= 1)
        throw InvalidArgumentError("outlier fraction must be in [0,1)");
}

int TransferContext::scale_window(int level) const {
    int k = std::min(params.scales, level + 1);
    if (posterior.scale_count > 0) k = std::min(k, posterior.scale_count);
    return std::max(1, k);
}

double distribution_cost(double dist_p, double dist_q) {
    const double d = dist_p - dist_q;
    return d * d / std::max(1.0, dist_p * dist_p);
}

double psycho_cost(int usage_count) { return static_cast<double>(usage_count); }

namespace {

inline std::size_t pix_index(const RasterImage& img, Pixel p) {
    return static_cast<std::size_t>(p.y) * img.width() + p.x;
}

// Map a pixel between two levels of the same pyramid by the width/height ratio.
inline Pixel map_level(Pixel p, const RasterImage& from, const RasterImage& to, int m) {
    const int x = static_cast<int>(
        std::lround(p.x * static_cast<double>(to.width()) / from.width()));
    const int y = static_cast<int>(
        std::lround(p.y * static_cast<double>(to.height()) / from.height()));
    return clamp_center({x, y}, to.width(), to.height(), m);
}

} // namespace

double appearance_cost(const TransferContext& ctx, int level, Pixel p, Pixel q) {
    const LevelData& cur = ctx.levels[level];
    const int m = ctx.params.patch_size;
    const double l3 = ctx.params.lambda3;

    if (ctx.params.mode == SynthesisParams::Mode::Baseline || ctx.posterior.scale_count == 0) {
        return l3 * patch_ssd(cur.tgt_text, {p.x, p.y}, cur.src_text, {q.x, q.y}, m) +
               patch_ssd(cur.tgt_style, {p.x, p.y}, cur.src_style, {q.x, q.y}, m);
    }

    const int window = ctx.scale_window(level);
    const int bin = cur.tgt_bin[pix_index(cur.tgt_text, p)];

    double weights[32]; // scale count is validated to fit
    double wsum = 0.0;
    for (int k = 0; k < window; ++k) {
        weights[k] = ctx.posterior.posterior_at(k + 1, bin);
        wsum += weights[k];
    }
    if (wsum > 0.0)
        for (int k = 0; k < window; ++k) weights[k] /= wsum;
    else
        for (int k = 0; k < window; ++k) weights[k] = 1.0 / window;

    double cost = 0.0;
    for (int k = 0; k < window; ++k) {
        if (weights[k] == 0.0) continue;
        const LevelData& lvl = ctx.levels[level - k];
        const Pixel pk = map_level(p, cur.tgt_text, lvl.tgt_text, m);
        const Pixel qk = map_level(q, cur.src_text, lvl.src_text, m);
        cost += weights[k] *
                (l3 * patch_ssd(lvl.tgt_text, {pk.x, pk.y}, lvl.src_text, {qk.x, qk.y}, m) +
                 patch_ssd(lvl.tgt_style, {pk.x, pk.y}, lvl.src_style, {qk.x, qk.y}, m));
    }
    return cost;
}

namespace {

// Appearance plus distribution: the part of the patch cost that does not
// depend on the usage counts.
double match_cost(const TransferContext& ctx, int level, Pixel p, Pixel q) {
    const LevelData& cur = ctx.levels[level];
    double cost = appearance_cost(ctx, level, p, q);
    if (ctx.params.lambda1 > 0.0)
        cost += ctx.params.lambda1 *
                distribution_cost(cur.tgt_dist[pix_index(cur.tgt_text, p)],
                                  cur.src_dist[pix_index(cur.src_text, q)]);
    return cost;
}

} // namespace

double total_cost(const TransferContext& ctx, int level, Pixel p, Pixel q,
                  int usage_count) {
    return match_cost(ctx, level, p, q) + ctx.params.lambda2 * psycho_cost(usage_count);
}

NNField make_field(const TransferContext& ctx, int level) {
    const LevelData& lvl = ctx.levels[level];
    const int m = ctx.params.patch_size;
    NNField field;
    field.patch_size = m;
    field.width = lvl.tgt_text.width() - (m - 1);
    field.height = lvl.tgt_text.height() - (m - 1);
    field.src_width = lvl.src_text.width() - (m - 1);
    field.src_height = lvl.src_text.height() - (m - 1);
    if (field.width < 1 || field.height < 1 || field.src_width < 1 || field.src_height < 1)
        throw InvalidArgumentError("pyramid level is smaller than one patch");
    const Pixel center = clamp_center({0, 0}, lvl.src_text.width(), lvl.src_text.height(), m);
    field.nnf.assign(static_cast<std::size_t>(field.width) * field.height, center);
    field.cost.assign(field.nnf.size(), 0.0);
    field.usage.assign(static_cast<std::size_t>(field.src_width) * field.src_height, 0);
    return field;
}

void rebuild_usage(NNField& field) {
    std::fill(field.usage.begin(), field.usage.end(), 0);
    for (const Pixel& q : field.nnf) field.usage[field.usage_index(q)] += 1;
}

void recompute_costs(const TransferContext& ctx, int level, NNField& field) {
    for (int j = 0; j < field.height; ++j)
        for (int i = 0; i < field.width; ++i) {
            const std::size_t n = static_cast<std::size_t>(j) * field.width + i;
            field.cost[n] = match_cost(ctx, level, field.target_pixel(i, j), field.nnf[n]);
        }
}

double field_objective(const TransferContext& ctx, int level, const NNField& field) {
    // sum_p psycho(nnf(p)) equals sum_q usage(q)^2.
    double sum = 0.0;
    for (int j = 0; j < field.height; ++j)
        for (int i = 0; i < field.width; ++i)
            sum += match_cost(ctx, level, field.target_pixel(i, j),
                              field.nnf[static_cast<std::size_t>(j) * field.width + i]);
    for (int u : field.usage)
        sum += ctx.params.lambda2 * static_cast<double>(u) * u;
    return sum;
}

NNField init_by_distribution(const TransferContext& ctx, int level, Rng& rng,
                             bool exhaustive) {
    const LevelData& lvl = ctx.levels[level];
    NNField field = make_field(ctx, level);
    const int h = field.half();
    constexpr int kCandidates = 20;

    // Source centers bucketed by their distance bin.
    std::vector<std::vector<Pixel>> buckets(DistanceField::kBins);
    for (int y = h; y < h + field.src_height; ++y)
        for (int x = h; x < h + field.src_width; ++x)
            buckets[lvl.src_bin[static_cast<std::size_t>(y) * lvl.src_text.width() + x]]
                .push_back({x, y});

    // Redirect empty bins to the nearest populated one (lower bin on ties).
    std::array<int, DistanceField::kBins> redirect{};
    for (int b = 0; b < DistanceField::kBins; ++b) {
        int best = -1, best_dist = DistanceField::kBins + 1;
        for (int b2 = 0; b2 < DistanceField::kBins; ++b2) {
            if (buckets[b2].empty()) continue;
            const int d = std::abs(b2 - b);
            if (d < best_dist) {
                best_dist = d;
                best = b2;
            }
        }
        redirect[b] = best;
    }

    for (int j = 0; j < field.height; ++j)
        for (int i = 0; i < field.width; ++i) {
            const Pixel p = field.target_pixel(i, j);
            const double dist_p = lvl.tgt_dist[pix_index(lvl.tgt_text, p)];
            const std::size_t n = static_cast<std::size_t>(j) * field.width + i;
            Pixel best{};
            double best_cost = 0.0;
            bool have = false;
            if (exhaustive) {
                for (int y = h; y < h + field.src_height; ++y)
                    for (int x = h; x < h + field.src_width; ++x) {
                        const double c = distribution_cost(
                            dist_p,
                            lvl.src_dist[static_cast<std::size_t>(y) * lvl.src_text.width() + x]);
                        if (!have || c < best_cost) {
                            have = true;
                            best = {x, y};
                            best_cost = c;
                        }
                    }
            } else {
                const auto& bucket =
                    buckets[redirect[lvl.tgt_bin[pix_index(lvl.tgt_text, p)]]];
                for (int k = 0; k < kCandidates; ++k) {
                    const Pixel cand = bucket[rng.below(static_cast<int>(bucket.size()))];
                    const double c = distribution_cost(
                        dist_p, lvl.src_dist[pix_index(lvl.src_text, cand)]);
                    if (!have || c < best_cost) {
                        have = true;
                        best = cand;
                        best_cost = c;
                    }
                }
            }
            field.nnf[n] = best;
        }

    rebuild_usage(field);
    recompute_costs(ctx, level, field);
    return field;
}

double patchmatch_step(const TransferContext& ctx, int level, NNField& field,
                       int iteration, Rng& rng) {
    const LevelData& lvl = ctx.levels[level];
    const int src_w = lvl.src_text.width(), src_h = lvl.src_text.height();
    const double l2 = ctx.params.lambda2;

    // Costs go stale between sweeps (tgt_style was revoted).
    recompute_costs(ctx, level, field);
    double start_objective = 0.0;
    for (double c : field.cost) start_objective += c;
    for (int u : field.usage) start_objective += l2 * static_cast<double>(u) * u;

    const bool forward = (iteration % 2 == 0);
    const int step = forward ? 1 : -1;
    const int i0 = forward ? 0 : field.width - 1;
    const int j0 = forward ? 0 : field.height - 1;
    const int max_radius = std::max(src_w, src_h);

    // Usage counts are maintained live; a swap p: q0 -> q1 changes
    // sum |Phi|^2 by exactly 2*(|Phi(q1)| - |Phi(q0)| + 1), and is accepted
    // only when the full objective strictly decreases under that exact delta.
    auto try_swap = [&](int i, int j, Pixel cand) {
        cand = clamp_center(cand, src_w, src_h, field.patch_size);
        const std::size_t n = static_cast<std::size_t>(j) * field.width + i;
        const Pixel incumbent = field.nnf[n];
        if (cand == incumbent) return;
        const double base = match_cost(ctx, level, field.target_pixel(i, j), cand);
        const double psy_delta =
            2.0 * l2 * (field.usage_at(cand) - field.usage_at(incumbent) + 1);
        if (base - field.cost[n] + psy_delta < 0.0) {
            field.usage[field.usage_index(incumbent)] -= 1;
            field.usage[field.usage_index(cand)] += 1;
            field.nnf[n] = cand;
            field.cost[n] = base;
        }
    };

    for (int j = j0; j >= 0 && j < field.height; j += step) {
        for (int i = i0; i >= 0 && i < field.width; i += step) {
            // propagation: neighbor correspondences shifted by one
            const int pi = i - step;
            if (pi >= 0 && pi < field.width) {
                Pixel cand = field.nnf[static_cast<std::size_t>(j) * field.width + pi];
                cand.x += step;
                try_swap(i, j, cand);
            }
            const int pj = j - step;
            if (pj >= 0 && pj < field.height) {
                Pixel cand = field.nnf[static_cast<std::size_t>(pj) * field.width + i];
                cand.y += step;
                try_swap(i, j, cand);
            }
            // exponential random search around the incumbent
            for (int radius = max_radius; radius >= 1; radius /= 2) {
                const Pixel base = field.nnf[static_cast<std::size_t>(j) * field.width + i];
                const Pixel cand{base.x + rng.range(-radius, radius),
                                 base.y + rng.range(-radius, radius)};
                try_swap(i, j, cand);
            }
        }
    }

    rebuild_usage(field);
    return start_objective;
}

RasterImage vote(const NNField& field, const RasterImage& source_style, int patch_size) {
    const int h = patch_size / 2;
    const int out_w = field.width + patch_size - 1;
    const int out_h = field.height + patch_size - 1;
    const int channels = source_style.channels();

    std::vector<double> acc(static_cast<std::size_t>(out_w) * out_h * channels, 0.0);
    std::vector<int> count(static_cast<std::size_t>(out_w) * out_h, 0);

    for (int j = 0; j < field.height; ++j)
        for (int i = 0; i < field.width; ++i) {
            const Pixel q = field.nnf[static_cast<std::size_t>(j) * field.width + i];
            for (int dy = -h; dy <= h; ++dy)
                for (int dx = -h; dx <= h; ++dx) {
                    const int tx = i + h + dx, ty = j + h + dy;
                    const std::size_t t = static_cast<std::size_t>(ty) * out_w + tx;
                    for (int c = 0; c < channels; ++c)
                        acc[t * channels + c] += source_style.at(q.x + dx, q.y + dy, c);
                    count[t] += 1;
                }
        }

    RasterImage out(out_w, out_h, channels);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const std::size_t t = static_cast<std::size_t>(y) * out_w + x;
            for (int c = 0; c < channels; ++c)
                out.at(x, y, c) = std::clamp(
                    static_cast<float>(acc[t * channels + c] / count[t]), 0.0f, 1.0f);
        }
    return out;
}

NNField upsample_field(const TransferContext& ctx, int coarse_level, int fine_level,
                       const NNField& coarse, Rng& rng) {
    const LevelData& clvl = ctx.levels[coarse_level];
    const LevelData& flvl = ctx.levels[fine_level];
    NNField fine = make_field(ctx, fine_level);
    const int m = fine.patch_size;

    for (int j = 0; j < fine.height; ++j)
        for (int i = 0; i < fine.width; ++i) {
            const Pixel pf = fine.target_pixel(i, j);
            const Pixel pc = map_level(pf, flvl.tgt_text, clvl.tgt_text, m);
            const Pixel qc =
                coarse.nnf[static_cast<std::size_t>(pc.y - coarse.half()) * coarse.width +
                           (pc.x - coarse.half())];
            Pixel qf = map_level(qc, clvl.src_text, flvl.src_text, m);
            qf.x += rng.range(-1, 1);
            qf.y += rng.range(-1, 1);
            fine.nnf[static_cast<std::size_t>(j) * fine.width + i] =
                clamp_center(qf, flvl.src_text.width(), flvl.src_text.height(), m);
        }

    rebuild_usage(fine);
    recompute_costs(ctx, fine_level, fine);
    return fine;
}

namespace {

// Per-level downsampled copies of a full-resolution normalized distance
// field, binned against the source field's edges.
void field_levels(const DistanceField& field, const DistanceField& edges,
                  const Pyramid& pyr, std::vector<std::vector<double>>& dist_out,
                  std::vector<std::vector<int>>& bin_out) {
    std::vector<double> full(field.dist);
    dist_out.clear();
    bin_out.clear();
    for (const RasterImage& lvl : pyr.levels) {
        std::vector<double> d =
            (lvl.width() == field.width && lvl.height() == field.height)
                ? full
                : resample_area(full, field.width, field.height, 1, lvl.width(),
                                lvl.height());
        std::vector<int> b(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) b[i] = edges.bin_of(d[i]);
        dist_out.push_back(std::move(d));
        bin_out.push_back(std::move(b));
    }
}

} // namespace

SourceContext prepare_source(const RasterImage& S, const RasterImage& S_style,
                             const SynthesisParams& params) {
    params.validate();
    if (S.width() != S_style.width() || S.height() != S_style.height())
        throw DimensionMismatchError("source text and style images must share dimensions");

    SourceContext src;
    src.params = params;
    src.text = S;
    src.style = S_style;

    const TextMask mask = binarize(S, params.binarize_threshold);
    src.field = compute_distance_field(mask, params.outlier_fraction);

    const ScaleStack stack =
        build_scale_stack(S, S_style, params.scales, params.scale_factor, params.patch_size);
    // Fixed internal seed: source preprocessing must not depend on the
    // per-target seed, or batch runs could not share it.
    src.scale_map = detect_optimal_scales(stack, params.omega, 0, MatchStrategy::Auto);
    src.posterior =
        estimate_posterior(scale_distance_histogram(src.scale_map, src.field),
                           stack.scale_count);

    src.text_pyr = build_pyramid(S, params.pyramid_depth, params.coarsest);
    src.style_pyr = build_pyramid(S_style, params.pyramid_depth, params.coarsest);
    field_levels(src.field, src.field, src.text_pyr, src.dist_levels, src.bin_levels);
    return src;
}

TransferContext prepare_transfer(const SourceContext& src, const RasterImage& T) {
    const SynthesisParams& params = src.params;

    RasterImage target = T;
    RasterImage source_text = src.text;
    if (target.channels() != source_text.channels()) {
        // Promote the grayscale side so text matching sees equal channels.
        auto promote = [](const RasterImage& g) {
            RasterImage rgb(g.width(), g.height(), 3);
            for (int y = 0; y < g.height(); ++y)
                for (int x = 0; x < g.width(); ++x)
                    for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = g.at(x, y, 0);
            return rgb;
        };
        if (target.channels() == 1) target = promote(target);
        if (source_text.channels() == 1) source_text = promote(source_text);
    }

    const TextMask tmask = binarize(target, params.binarize_threshold);
    const DistanceField tgt_field = compute_distance_field(tmask, params.outlier_fraction);

    Pyramid tgt_pyr = build_pyramid(target, params.pyramid_depth, params.coarsest);
    Pyramid src_text_pyr =
        (source_text.channels() == src.text.channels())
            ? src.text_pyr
            : build_pyramid(source_text, params.pyramid_depth, params.coarsest);

    std::vector<std::vector<double>> tgt_dist_levels;
    std::vector<std::vector<int>> tgt_bin_levels;
    field_levels(tgt_field, src.field, tgt_pyr, tgt_dist_levels, tgt_bin_levels);

    // Drop coarse levels that cannot hold a single patch, then pair the two
    // pyramids from the fine end.
    auto usable = [&](const Pyramid& pyr) {
        int first = 0;
        for (int i = 0; i < pyr.depth(); ++i)
            if (std::min(pyr.levels[i].width(), pyr.levels[i].height()) < params.patch_size)
                first = i + 1;
        return pyr.depth() - first;
    };
    const int depth = std::min(usable(src_text_pyr), usable(tgt_pyr));
    if (depth < 1)
        throw InvalidArgumentError("images are too small for the configured patch size");

    TransferContext ctx;
    ctx.params = params;
    ctx.posterior = src.posterior;
    for (int k = depth; k >= 1; --k) {
        const int si = src_text_pyr.depth() - k;
        const int ti = tgt_pyr.depth() - k;
        LevelData lvl;
        lvl.src_text = src_text_pyr.levels[si];
        lvl.src_style = src.style_pyr.levels[si];
        lvl.tgt_text = tgt_pyr.levels[ti];
        lvl.tgt_style = RasterImage(lvl.tgt_text.width(), lvl.tgt_text.height(),
                                    lvl.src_style.channels());
        lvl.src_dist = src.dist_levels[si];
        lvl.src_bin = src.bin_levels[si];
        lvl.tgt_dist = tgt_dist_levels[ti];
        lvl.tgt_bin = tgt_bin_levels[ti];
        ctx.levels.push_back(std::move(lvl));
    }
    return ctx;
}

TransferResult run_transfer(TransferContext& ctx, std::uint64_t seed) {
    Rng rng(seed);
    TransferResult result;
    NNField field;

    for (int level = 0; level < ctx.level_count(); ++level) {
        LevelData& lvl = ctx.levels[level];
        if (level == 0)
            field = init_by_distribution(ctx, level, rng);
        else
            field = upsample_field(ctx, level - 1, level, field, rng);
        lvl.tgt_style = vote(field, lvl.src_style, ctx.params.patch_size);

        LevelTrace trace;
        trace.width = lvl.tgt_text.width();
        trace.height = lvl.tgt_text.height();
        for (int it = 0; it < ctx.params.iterations; ++it) {
            trace.objective.push_back(patchmatch_step(ctx, level, field, it, rng));
            lvl.tgt_style = vote(field, lvl.src_style, ctx.params.patch_size);
        }
        trace.objective.push_back(field_objective(ctx, level, field));
        result.trace.push_back(std::move(trace));
    }

    result.output = ctx.levels.back().tgt_style;
    result.final_field = std::move(field);
    return result;
}

TransferResult transfer(const RasterImage& S, const RasterImage& S_style,
                        const RasterImage& T, const SynthesisParams& params) {
    const SourceContext src = prepare_source(S, S_style, params);
    TransferContext ctx = prepare_transfer(src, T);
    return run_transfer(ctx, params.seed);
}

} // namespace texfx
