#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "texfx/text_geometry.hpp"

#include "oracles.hpp"
#include "testutil.hpp"

using namespace texfx;

namespace {

TextMask mask_of(const RasterImage& img, double threshold = 0.5) {
    return binarize(img, threshold);
}

std::size_t idx(const TextMask& m, int x, int y) {
    return static_cast<std::size_t>(y) * m.width + x;
}

} // namespace

TEST_CASE("binarize separates a white glyph from a black background") {
    RasterImage img = testutil::make_bar(20, 20, 2, 10);
    const TextMask mask = mask_of(img);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            CHECK(mask.is_inside(x, y) == (img.at(x, y) >= 0.5f));
}

TEST_CASE("binarize rejects degenerate masks") {
    const RasterImage black(8, 8, 1, 0.0f);
    CHECK_THROWS_AS(binarize(black, 0.5), DegenerateMaskError);
    const RasterImage white(8, 8, 1, 1.0f);
    CHECK_THROWS_AS(binarize(white, 0.5), DegenerateMaskError);
}

TEST_CASE("binarize puts exact-threshold pixels inside") {
    RasterImage img(4, 1, 1, 0.0f);
    img.at(2, 0) = 0.5f;
    const TextMask mask = binarize(img, 0.5);
    CHECK(mask.is_inside(2, 0));
    CHECK_FALSE(mask.is_inside(1, 0));
}

TEST_CASE("binarize validates the threshold range") {
    RasterImage img(4, 4, 1, 0.4f);
    img.at(0, 0) = 0.9f;
    CHECK_THROWS_AS(binarize(img, 0.0), InvalidArgumentError);
    CHECK_THROWS_AS(binarize(img, 1.0), InvalidArgumentError);
}

TEST_CASE("a one-pixel line is its own skeleton") {
    RasterImage img(20, 9, 1);
    for (int x = 3; x <= 16; ++x) img.at(x, 4) = 1.0f;
    const SkeletonContour sc = skeletonize(mask_of(img));
    REQUIRE(sc.skeleton_pixels.size() == 14);
    for (const Pixel& p : sc.skeleton_pixels) CHECK(p.y == 4);
}

TEST_CASE("an odd-width bar thins to its center column") {
    const int w = 3; // half width
    RasterImage img = testutil::make_bar(20, 40, w, 28);
    const int center = 10;
    const SkeletonContour sc = skeletonize(mask_of(img));
    REQUIRE(!sc.skeleton_pixels.empty());
    int off_center = 0;
    for (const Pixel& p : sc.skeleton_pixels)
        if (p.x != center) ++off_center;
    // end effects may bend the line near the two bar ends only
    CHECK(off_center <= 4);
}

TEST_CASE("a disk thins to its center") {
    RasterImage img = testutil::make_disk(50, 20);
    const TextMask mask = mask_of(img);
    const SkeletonContour sc = skeletonize(mask);

    REQUIRE(!sc.skeleton_pixels.empty());
    const double c = (50 - 1) / 2.0;
    for (const Pixel& p : sc.skeleton_pixels) {
        CHECK(std::abs(p.x - c) <= 1.5);
        CHECK(std::abs(p.y - c) <= 1.5);
    }
}

TEST_CASE("thinning matches the reference transcription on surviving shapes") {
    RasterImage img = testutil::make_stroke_glyph(64);
    const TextMask mask = mask_of(img);
    const SkeletonContour sc = skeletonize(mask);
    const auto ref = oracles::reference_thinning(mask.inside, mask.width, mask.height);
    // every glyph component keeps thinning residue here, so no pixels are
    // restored and the outputs must agree exactly
    int ref_count = 0;
    for (auto v : ref) ref_count += v;
    REQUIRE(ref_count > 0);
    CHECK(sc.skeleton == ref);
}

TEST_CASE("blobs that thin away keep a one-pixel skeleton") {
    // a 2x2 block satisfies the deletion conditions in a single pass
    RasterImage img(8, 8, 1);
    img.at(3, 3) = img.at(4, 3) = img.at(3, 4) = img.at(4, 4) = 1.0f;
    const SkeletonContour sc = skeletonize(mask_of(img));
    REQUIRE(sc.skeleton_pixels.size() == 1);
    CHECK(sc.skeleton_pixels[0].x >= 3);
    CHECK(sc.skeleton_pixels[0].x <= 4);
    CHECK(sc.skeleton_pixels[0].y >= 3);
    CHECK(sc.skeleton_pixels[0].y <= 4);

    // and the full pipeline stays well-defined on such shapes
    RasterImage disk = testutil::make_disk(96, 24);
    const DistanceField df = compute_distance_field(mask_of(disk));
    CHECK(df.max_dist > 1.0);
}

TEST_CASE("skeletons are thin and contours touch the background") {
    Rng rng(77);
    RasterImage img = testutil::make_stroke_glyph(64);
    const TextMask mask = mask_of(img);
    const SkeletonContour sc = skeletonize(mask);

    REQUIRE(!sc.skeleton_pixels.empty());
    for (const Pixel& p : sc.skeleton_pixels) {
        CHECK(mask.is_inside(p.x, p.y));
        int full = 0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int x = p.x + dx, y = p.y + dy;
                if (x >= 0 && x < sc.width && y >= 0 && y < sc.height &&
                    sc.skeleton[static_cast<std::size_t>(y) * sc.width + x])
                    ++full;
            }
        CHECK(full < 9); // no skeleton pixel has a full 3x3 skeleton neighborhood
    }
    for (const Pixel& p : sc.contour) {
        CHECK(mask.is_inside(p.x, p.y));
        const bool touches = !mask.is_inside(p.x - 1, p.y) || !mask.is_inside(p.x + 1, p.y) ||
                             !mask.is_inside(p.x, p.y - 1) || !mask.is_inside(p.x, p.y + 1);
        CHECK(touches);
    }
}

TEST_CASE("distance transform: members and the 3-4-5 triangle") {
    const DistanceTransform dt = distance_to_set(8, 8, {{0, 0}});
    CHECK(dt.dist[0] == 0.0);
    CHECK(dt.dist[3 + 4 * 8] == 5.0);
    CHECK(dt.nearest[3 + 4 * 8] == 0);
}

TEST_CASE("distance transform equals brute force on random point sets") {
    Rng rng(101);
    for (int trial = 0; trial < 12; ++trial) {
        const int w = rng.range(4, 32), h = rng.range(4, 32);
        const int count = rng.range(1, 10);
        std::set<std::pair<int, int>> unique;
        while (static_cast<int>(unique.size()) < count)
            unique.insert({rng.below(w), rng.below(h)});
        std::vector<Pixel> points;
        for (auto [x, y] : unique) points.push_back({x, y});

        const DistanceTransform dt = distance_to_set(w, h, points);
        const auto ref = oracles::brute_force_edt(w, h, points);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(dt.dist2[i] == static_cast<double>(ref[i]));
            // the reported nearest member must realize the distance
            const int nx = dt.nearest[i] % w, ny = dt.nearest[i] / w;
            const int x = static_cast<int>(i) % w, y = static_cast<int>(i) / w;
            const double d2 = static_cast<double>(nx - x) * (nx - x) +
                              static_cast<double>(ny - y) * (ny - y);
            CHECK(d2 == dt.dist2[i]);
        }
    }
}

TEST_CASE("distance transform rejects an empty set") {
    CHECK_THROWS_AS(distance_to_set(4, 4, {}), InvalidArgumentError);
}

namespace {

// Hand-built inputs for the regression unit tests.
DistanceTransform fake_transform(int width, int height, const std::vector<Pixel>& at,
                                 const std::vector<double>& values) {
    DistanceTransform dt;
    dt.width = width;
    dt.height = height;
    dt.dist.assign(static_cast<std::size_t>(width) * height, 0.0);
    for (std::size_t i = 0; i < at.size(); ++i)
        dt.dist[static_cast<std::size_t>(at[i].y) * width + at[i].x] = values[i];
    return dt;
}

SkeletonContour fake_contour(int width, int height, const std::vector<Pixel>& contour) {
    SkeletonContour sc;
    sc.width = width;
    sc.height = height;
    sc.skeleton.assign(static_cast<std::size_t>(width) * height, 0);
    sc.contour = contour;
    return sc;
}

} // namespace

TEST_CASE("width regression on constant radii") {
    std::vector<Pixel> contour;
    for (int i = 0; i < 10; ++i) contour.push_back({i, 0});
    const auto sc = fake_contour(10, 2, contour);
    const auto dt = fake_transform(10, 2, contour, std::vector<double>(10, 4.0));
    const WidthRegression reg = fit_width_regression(sc, dt);
    CHECK(reg.slope == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(reg.intercept == doctest::Approx(4.0));
    CHECK(reg.mean_radius() == doctest::Approx(4.0));
}

TEST_CASE("width regression on the identity line") {
    std::vector<Pixel> contour;
    std::vector<double> radii;
    for (int i = 0; i < 12; ++i) {
        contour.push_back({i, 0});
        radii.push_back(i + 1.0);
    }
    const auto sc = fake_contour(12, 2, contour);
    const auto dt = fake_transform(12, 2, contour, radii);
    const WidthRegression reg = fit_width_regression(sc, dt);
    CHECK(reg.slope == doctest::Approx(1.0));
    CHECK(reg.intercept == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("width regression recovers a noisy line and matches the closed form") {
    Rng rng(55);
    const int n = 200;
    std::vector<Pixel> contour;
    std::vector<double> radii, xs, ys;
    for (int i = 0; i < n; ++i) {
        contour.push_back({i % 20, i / 20});
        radii.push_back(2.0 * (i + 1) + 3.0 + (rng.unit() - 0.5) * 0.2);
    }
    const auto sc = fake_contour(20, 10, contour);
    const auto dt = fake_transform(20, 10, contour, radii);
    const WidthRegression reg = fit_width_regression(sc, dt);
    CHECK(reg.slope == doctest::Approx(2.0).epsilon(0.025));
    CHECK(std::abs(reg.intercept - 3.0) < 0.05);

    std::sort(radii.begin(), radii.end());
    for (int i = 0; i < n; ++i) {
        xs.push_back(i + 1.0);
        ys.push_back(radii[i]);
    }
    double k = 0, b = 0;
    oracles::ols_fit(xs, ys, k, b);
    CHECK(reg.slope == doctest::Approx(k).epsilon(1e-12));
    CHECK(reg.intercept == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("corrected radius clamps to the regression floor") {
    WidthRegression reg;
    reg.slope = 0.1;
    reg.contour_count = 100;
    reg.intercept = 2.0; // floor = 0.2*0.1*100 + 2 = 4
    DistanceTransform dt = fake_transform(2, 1, {{0, 0}, {1, 0}}, {10.0, 2.0});
    CHECK(corrected_radius({0, 0}, reg, dt) == doctest::Approx(10.0));
    CHECK(corrected_radius({1, 0}, reg, dt) == doctest::Approx(4.0));
}

TEST_CASE("a nicked bar lifts only the nicked contour pixel to the floor") {
    // bar with one boundary pixel pushed in by one
    RasterImage img = testutil::make_bar(30, 60, 5, 44);
    const int nick_x = 30 / 2 - 5, nick_y = 30;
    img.at(nick_x, nick_y) = 0.0f;

    const TextMask mask = mask_of(img);
    const SkeletonContour sc = skeletonize(mask);
    const DistanceTransform to_skel = distance_to_set(mask.width, mask.height, sc.skeleton_pixels);
    const WidthRegression reg = fit_width_regression(sc, to_skel);
    const double floor = reg.outlier_floor();

    int lifted = 0, clean_checked = 0;
    for (const Pixel& q : sc.contour) {
        const double raw = to_skel.dist[static_cast<std::size_t>(q.y) * mask.width + q.x];
        const double corrected = corrected_radius(q, reg, to_skel);
        if (raw < floor) {
            CHECK(corrected == doctest::Approx(floor));
            if (q.x == nick_x + 1 && q.y == nick_y) ++lifted; // the nick itself
        } else {
            CHECK(corrected == doctest::Approx(raw));
            ++clean_checked;
        }
    }
    CHECK(lifted == 1);
    CHECK(clean_checked > 50);
}

TEST_CASE("normalized distance: contour at 1, skeleton near 0, background grows") {
    RasterImage img = testutil::make_bar(40, 80, 6, 60);
    const TextMask mask = mask_of(img);
    const SkeletonContour sc = skeletonize(mask);
    const DistanceField df = compute_distance_field(mask);

    for (const Pixel& q : sc.contour)
        CHECK(df.dist[idx(mask, q.x, q.y)] == doctest::Approx(1.0));

    for (const Pixel& p : sc.skeleton_pixels)
        CHECK(df.dist[idx(mask, p.x, p.y)] <= 0.1);

    // background: direct substitution 1 + d/mean_radius
    const DistanceTransform to_contour = distance_to_set(mask.width, mask.height, sc.contour);
    const double rbar = df.regression.mean_radius();
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (mask.is_inside(x, y)) continue;
            const double expect = 1.0 + to_contour.dist[idx(mask, x, y)] / rbar;
            CHECK(df.dist[idx(mask, x, y)] == doctest::Approx(expect));
        }
}

TEST_CASE("bar contour and skeleton statistics hold for half-widths 3, 6, 12") {
    for (int w : {3, 6, 12}) {
        RasterImage img = testutil::make_bar(8 * w + 10, 16 * w, w, 12 * w);
        const TextMask mask = mask_of(img);
        const SkeletonContour sc = skeletonize(mask);
        const DistanceField df = compute_distance_field(mask);

        double contour_sum = 0.0;
        for (const Pixel& q : sc.contour) contour_sum += df.dist[idx(mask, q.x, q.y)];
        const double contour_mean = contour_sum / sc.contour.size();
        CHECK(contour_mean >= 0.95);
        CHECK(contour_mean <= 1.05);

        for (const Pixel& p : sc.skeleton_pixels)
            CHECK(df.dist[idx(mask, p.x, p.y)] <= 0.1);
    }
}

namespace {

// The same continuous rectangle rasterized at `scale` pixels per unit.
RasterImage rasterize_rect(int canvas_w, int canvas_h, double x0, double x1, double y0,
                           double y1, int scale) {
    RasterImage img(canvas_w * scale, canvas_h * scale, 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double cx = (x + 0.5) / scale, cy = (y + 0.5) / scale;
            if (cx >= x0 && cx < x1 && cy >= y0 && cy < y1) img.at(x, y) = 1.0f;
        }
    return img;
}

} // namespace

TEST_CASE("normalized distance is stable under resolution doubling") {
    // Skeleton placement quantizes to half a pixel, so the relative radius
    // error is ~0.25/half_width; a wide glyph keeps that inside the budget.
    const int W = 172, H = 260;
    const RasterImage coarse = rasterize_rect(W, H, 55.5, 116.5, 50.0, 210.0, 1);
    const RasterImage fine = rasterize_rect(W, H, 55.5, 116.5, 50.0, 210.0, 2);
    const DistanceField df_c = compute_distance_field(mask_of(coarse));
    const DistanceField df_f = compute_distance_field(mask_of(fine));

    // A coarse pixel's center coincides with the mean position of the 2x2
    // fine block covering it.
    double worst = 0.0;
    for (int y = 4; y < H - 4; ++y)
        for (int x = 4; x < W - 4; ++x) {
            const double a = df_c.dist[static_cast<std::size_t>(y) * W + x];
            double b = 0.0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    b += df_f.dist[static_cast<std::size_t>(2 * y + dy) * (2 * W) + (2 * x + dx)];
            b /= 4.0;
            worst = std::max(worst, std::abs(a - b));
        }
    CHECK(worst < 0.05);
}

TEST_CASE("bin quantization endpoints and clamping") {
    RasterImage img = testutil::make_bar(32, 32, 3, 20);
    const DistanceField df = compute_distance_field(mask_of(img));
    CHECK(df.bin_of(0.0) == 0);
    CHECK(df.bin_of(df.max_dist) == 99);
    CHECK(df.bin_of(1.3 * df.max_dist) == 99);
    CHECK(df.bin_edges.size() == 101);
    CHECK(df.bin_edges.front() == 0.0);
    CHECK(df.bin_edges.back() == doctest::Approx(df.max_dist));

    // a value exactly on an interior edge lands in the higher bin
    DistanceField flat;
    flat.max_dist = 100.0;
    CHECK(flat.bin_of(1.0) == 1);
    CHECK(flat.bin_of(57.0) == 57);
    CHECK(flat.bin_of(56.999) == 56);

    // monotone in the distance argument
    Rng rng(13);
    for (int t = 0; t < 200; ++t) {
        const double a = rng.unit() * df.max_dist * 1.5;
        const double b = rng.unit() * df.max_dist * 1.5;
        if (a <= b)
            CHECK(df.bin_of(a) <= df.bin_of(b));
        else
            CHECK(df.bin_of(b) <= df.bin_of(a));
    }
}
