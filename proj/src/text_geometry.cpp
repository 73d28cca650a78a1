#include "texfx/text_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace texfx {

int DistanceField::bin_of(double value) const {
    if (max_dist <= 0.0) return 0;
    if (value <= 0.0) return 0;
    const int b = static_cast<int>(std::floor(value * kBins / max_dist));
    return std::min(b, kBins - 1);
}

TextMask binarize(const RasterImage& text_img, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw InvalidArgumentError("binarize threshold must be in (0,1)");
    TextMask mask;
    mask.width = text_img.width();
    mask.height = text_img.height();
    mask.inside.assign(static_cast<std::size_t>(mask.width) * mask.height, 0);
    std::size_t count = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            const bool in = text_img.luma(x, y) >= static_cast<float>(threshold);
            mask.inside[static_cast<std::size_t>(y) * mask.width + x] = in ? 1 : 0;
            count += in ? 1 : 0;
        }
    if (count == 0 || count == mask.inside.size())
        throw DegenerateMaskError("binarization produced an empty or full text region");
    return mask;
}

namespace {

// Zhang-Suen neighborhood, p2..p9 clockwise from north.
inline void neighborhood(const std::vector<std::uint8_t>& img, int w, int h,
                         int x, int y, int n[8]) {
    auto get = [&](int xx, int yy) -> int {
        return (xx >= 0 && xx < w && yy >= 0 && yy < h)
            ? img[static_cast<std::size_t>(yy) * w + xx] : 0;
    };
    n[0] = get(x, y - 1);     // p2
    n[1] = get(x + 1, y - 1); // p3
    n[2] = get(x + 1, y);     // p4
    n[3] = get(x + 1, y + 1); // p5
    n[4] = get(x, y + 1);     // p6
    n[5] = get(x - 1, y + 1); // p7
    n[6] = get(x - 1, y);     // p8
    n[7] = get(x - 1, y - 1); // p9
}

} // namespace

SkeletonContour skeletonize(const TextMask& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<std::uint8_t> img = mask.inside;
    std::vector<std::size_t> to_delete;

    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            to_delete.clear();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t idx = static_cast<std::size_t>(y) * w + x;
                    if (!img[idx]) continue;
                    int n[8];
                    neighborhood(img, w, h, x, y, n);
                    int b = 0;
                    for (int v : n) b += v;
                    if (b < 2 || b > 6) continue;
                    int a = 0;
                    for (int k = 0; k < 8; ++k)
                        if (n[k] == 0 && n[(k + 1) % 8] == 1) ++a;
                    if (a != 1) continue;
                    if (pass == 0) {
                        if (n[0] * n[2] * n[4] != 0) continue; // p2*p4*p6
                        if (n[2] * n[4] * n[6] != 0) continue; // p4*p6*p8
                    } else {
                        if (n[0] * n[2] * n[6] != 0) continue; // p2*p4*p8
                        if (n[0] * n[4] * n[6] != 0) continue; // p2*p6*p8
                    }
                    to_delete.push_back(idx);
                }
            }
            if (!to_delete.empty()) changed = true;
            for (std::size_t idx : to_delete) img[idx] = 0;
        }
    }

    SkeletonContour sc;
    sc.width = w;
    sc.height = h;
    sc.skeleton = std::move(img);

    // Thinning can annihilate small blobs outright (a 2x2 residue satisfies
    // the deletion conditions in one pass). Components that lost every pixel
    // get their most interior pixel back as a one-point skeleton.
    {
        std::vector<int> component(static_cast<std::size_t>(w) * h, -1);
        std::vector<std::size_t> stack;
        int count = 0;
        for (std::size_t start = 0; start < component.size(); ++start) {
            if (!mask.inside[start] || component[start] >= 0) continue;
            const int id = count++;
            component[start] = id;
            stack.assign(1, start);
            while (!stack.empty()) {
                const std::size_t cur = stack.back();
                stack.pop_back();
                const int cx = static_cast<int>(cur % w), cy = static_cast<int>(cur / w);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (mask.inside[ni] && component[ni] < 0) {
                            component[ni] = id;
                            stack.push_back(ni);
                        }
                    }
            }
        }
        std::vector<std::uint8_t> covered(count, 0);
        for (std::size_t i = 0; i < sc.skeleton.size(); ++i)
            if (sc.skeleton[i]) covered[component[i]] = 1;
        bool all_covered = true;
        for (std::uint8_t c : covered) all_covered &= (c != 0);
        if (!all_covered) {
            std::vector<Pixel> background;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (!mask.is_inside(x, y)) background.push_back({x, y});
            const DistanceTransform interior = distance_to_set(w, h, background);
            std::vector<std::size_t> best(count, 0);
            std::vector<double> best_d(count, -1.0);
            for (std::size_t i = 0; i < component.size(); ++i) {
                if (component[i] < 0 || covered[component[i]]) continue;
                if (interior.dist[i] > best_d[component[i]]) {
                    best_d[component[i]] = interior.dist[i];
                    best[component[i]] = i;
                }
            }
            for (int id = 0; id < count; ++id)
                if (!covered[id] && best_d[id] >= 0.0) sc.skeleton[best[id]] = 1;
        }
    }

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (sc.skeleton[static_cast<std::size_t>(y) * w + x])
                sc.skeleton_pixels.push_back({x, y});

    // 4-adjacency boundary; out-of-image counts as background.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.is_inside(x, y)) continue;
            if (!mask.is_inside(x - 1, y) || !mask.is_inside(x + 1, y) ||
                !mask.is_inside(x, y - 1) || !mask.is_inside(x, y + 1))
                sc.contour.push_back({x, y});
        }
    return sc;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance lower envelope (Felzenszwalb-Huttenlocher) that also
// reports the winning site per output cell. Sites with f = inf are skipped.
void envelope_1d(const std::vector<double>& f, int n, std::vector<double>& d,
                 std::vector<int>& arg) {
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    auto intersect = [&](int q, int p) {
        return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
               (2.0 * (q - p));
    };
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s = intersect(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) { // no finite site in this scanline
        std::fill(d.begin(), d.begin() + n, kInf);
        std::fill(arg.begin(), arg.begin() + n, -1);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
        arg[q] = v[j];
    }
}

} // namespace

DistanceTransform distance_to_set(int width, int height, const std::vector<Pixel>& points) {
    if (points.empty())
        throw InvalidArgumentError("distance_to_set requires a nonempty point set");

    DistanceTransform result;
    result.width = width;
    result.height = height;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    result.dist.resize(n);
    result.dist2.resize(n);
    result.nearest.resize(n);

    // Column pass: squared distance to the nearest set row within each column,
    // remembering that row.
    std::vector<double> col_d2(n, kInf);
    std::vector<std::int32_t> col_row(n, -1);
    {
        std::vector<std::uint8_t> member(n, 0);
        for (const Pixel& p : points)
            member[static_cast<std::size_t>(p.y) * width + p.x] = 1;
        std::vector<double> f(height), d(height);
        std::vector<int> arg(height);
        for (int x = 0; x < width; ++x) {
            for (int y = 0; y < height; ++y)
                f[y] = member[static_cast<std::size_t>(y) * width + x] ? 0.0 : kInf;
            envelope_1d(f, height, d, arg);
            for (int y = 0; y < height; ++y) {
                col_d2[static_cast<std::size_t>(y) * width + x] = d[y];
                col_row[static_cast<std::size_t>(y) * width + x] = arg[y];
            }
        }
    }

    // Row pass over the column results.
    std::vector<double> f(width), d(width);
    std::vector<int> arg(width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x)
            f[x] = col_d2[static_cast<std::size_t>(y) * width + x];
        envelope_1d(f, width, d, arg);
        for (int x = 0; x < width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * width + x;
            result.dist2[idx] = d[x];
            result.dist[idx] = std::sqrt(d[x]);
            const int sx = arg[x];
            const int sy = col_row[static_cast<std::size_t>(y) * width + sx];
            result.nearest[idx] = static_cast<std::int32_t>(sy) * width + sx;
        }
    }
    return result;
}

WidthRegression fit_width_regression(const SkeletonContour& sc,
                                     const DistanceTransform& dist_to_skel) {
    const int n = sc.contour_count();
    if (n < 2)
        throw InvalidArgumentError("width regression needs at least 2 contour pixels");

    std::vector<double> radii;
    radii.reserve(n);
    for (const Pixel& q : sc.contour)
        radii.push_back(dist_to_skel.dist[static_cast<std::size_t>(q.y) * sc.width + q.x]);
    std::sort(radii.begin(), radii.end());

    // OLS of radius against rank 1..n.
    double sum_x = 0.0, sum_y = 0.0, sum_xx = 0.0, sum_xy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = i + 1;
        sum_x += x;
        sum_y += radii[i];
        sum_xx += x * x;
        sum_xy += x * radii[i];
    }
    const double denom = n * sum_xx - sum_x * sum_x;
    WidthRegression reg;
    reg.contour_count = n;
    reg.slope = (n * sum_xy - sum_x * sum_y) / denom;
    reg.intercept = (sum_y - reg.slope * sum_x) / n;
    return reg;
}

double corrected_radius(Pixel q_on_contour, const WidthRegression& reg,
                        const DistanceTransform& dist_to_skel, double outlier_fraction) {
    const double raw =
        dist_to_skel.dist[static_cast<std::size_t>(q_on_contour.y) * dist_to_skel.width +
                          q_on_contour.x];
    return std::max(raw, reg.outlier_floor(outlier_fraction));
}

DistanceField normalized_distance_field(const TextMask& mask, const SkeletonContour& sc,
                                        const WidthRegression& reg,
                                        const DistanceTransform& dist_to_skel,
                                        const DistanceTransform& dist_to_contour,
                                        double outlier_fraction) {
    if (sc.width != mask.width || sc.height != mask.height ||
        dist_to_skel.width != mask.width || dist_to_contour.width != mask.width)
        throw DimensionMismatchError("distance field inputs come from different masks");
    DistanceField df;
    df.width = mask.width;
    df.height = mask.height;
    df.regression = reg;
    const std::size_t n = static_cast<std::size_t>(mask.width) * mask.height;
    df.dist.resize(n);

    const double mean_radius = reg.mean_radius();
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
            const double dc = dist_to_contour.dist[idx];
            if (!mask.is_inside(x, y)) {
                df.dist[idx] = 1.0 + dc / mean_radius;
            } else {
                const std::int32_t ni = dist_to_contour.nearest[idx];
                const Pixel q_perp{ni % mask.width, ni / mask.width};
                const double r = corrected_radius(q_perp, reg, dist_to_skel, outlier_fraction);
                df.dist[idx] = std::max(0.0, 1.0 - dc / r);
            }
        }

    df.max_dist = *std::max_element(df.dist.begin(), df.dist.end());
    df.bin_edges.resize(DistanceField::kBins + 1);
    for (int i = 0; i <= DistanceField::kBins; ++i)
        df.bin_edges[i] = df.max_dist * i / DistanceField::kBins;
    df.bin.resize(n);
    for (std::size_t i = 0; i < n; ++i) df.bin[i] = df.bin_of(df.dist[i]);
    return df;
}

DistanceField compute_distance_field(const TextMask& mask, double outlier_fraction) {
    const SkeletonContour sc = skeletonize(mask);
    const DistanceTransform to_skel = distance_to_set(mask.width, mask.height, sc.skeleton_pixels);
    const DistanceTransform to_contour = distance_to_set(mask.width, mask.height, sc.contour);
    const WidthRegression reg = fit_width_regression(sc, to_skel);
    return normalized_distance_field(mask, sc, reg, to_skel, to_contour, outlier_fraction);
}

} // namespace texfx
