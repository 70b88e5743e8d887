#include "doctest.h"

#include <cmath>

#include "bootleg/image.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace bootleg;
using namespace bootleg::image;
using testsupport::Rng;

namespace {

RgbImage rgbPixel(double r, double g, double b) { return {1, 1, {r, g, b}}; }

GrayImage randomGray(Rng& rng, int h, int w) {
    GrayImage img(h, w);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

BinaryImage randomBinary(Rng& rng, int h, int w, double p) {
    BinaryImage img(h, w);
    for (auto& v : img.data) v = rng.chance(p) ? 1 : 0;
    return img;
}

void fillDisc(GrayImage& img, double cy, double cx, double r, double v) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) img.at(y, x) = v;
}

}  // namespace

TEST_CASE("toGrayscale uses Rec. 601 luma weights") {
    CHECK(toGrayscale(rgbPixel(255, 255, 255)).data[0] == doctest::Approx(1.0));
    CHECK(toGrayscale(rgbPixel(0, 0, 0)).data[0] == 0.0);
    CHECK(toGrayscale(rgbPixel(255, 0, 0)).data[0] == doctest::Approx(0.299));
    CHECK_THROWS_AS(toGrayscale(RgbImage{}), Error);
}

TEST_CASE("resizeMaxDim scales down only") {
    GrayImage big(2000, 1500, 0.5);
    GrayImage small = resizeMaxDim(big, 1000);
    CHECK(small.height == 1000);
    CHECK(small.width == 750);
    for (double v : small.data) REQUIRE(std::abs(v - 0.5) <= 1e-6);

    GrayImage keep(800, 600, 0.25);
    CHECK(resizeMaxDim(keep, 1000) == keep);

    GrayImage wide(30, 3001, 0.7);
    GrayImage w2 = resizeMaxDim(wide, 1000);
    CHECK(w2.width == 1000);
    CHECK(w2.height == 10);
}

TEST_CASE("backgroundSubtract flips polarity and removes lighting") {
    GrayImage flat(40, 50, 0.8);
    for (double v : backgroundSubtract(flat, 5).data) REQUIRE(v == 0.0);

    GrayImage dot(31, 31, 1.0);
    dot.at(15, 15) = 0.0;
    GrayImage out = backgroundSubtract(dot, 5);
    CHECK(out.at(15, 15) == doctest::Approx(1.0));
    CHECK(out.at(0, 0) == 0.0);

    // Shaded page with glyphs: glyph pixels own the top 1% of the output.
    Rng rng(3);
    GrayImage page(200, 300);
    BinaryImage glyph(200, 300, 0);
    for (int r = 0; r < 200; ++r)
        for (int c = 0; c < 300; ++c) page.at(r, c) = 0.95 - 0.4 * c / 300.0 - 0.1 * r / 200.0;
    for (int k = 0; k < 30; ++k) {
        const int cy = rng.range(10, 189), cx = rng.range(10, 289);
        for (int r = cy - 3; r <= cy + 3; ++r)
            for (int c = cx - 3; c <= cx + 3; ++c) {
                page.at(r, c) *= 0.15;
                glyph.at(r, c) = 1;
            }
    }
    GrayImage sub = backgroundSubtract(page, 20);
    std::vector<double> sorted = sub.data;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double cutoff = sorted[sorted.size() / 100];
    int top = 0, topGlyph = 0;
    for (std::size_t i = 0; i < sub.size(); ++i)
        if (sub.data[i] >= cutoff) {
            ++top;
            topGlyph += glyph.data[i];
        }
    CHECK(topGlyph == top);
}

TEST_CASE("erode and dilate basics") {
    GrayImage flat(9, 9, 0.3);
    CHECK(erode(flat, StructuringElement::disc(2)) == flat);

    GrayImage one(11, 11, 0.0);
    one.at(5, 5) = 1.0;
    GrayImage d = dilate(one, StructuringElement::disc(2));
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c) {
            const bool inDisc = (r - 5) * (r - 5) + (c - 5) * (c - 5) <= 4;
            REQUIRE(d.at(r, c) == (inDisc ? 1.0 : 0.0));
        }
}

TEST_CASE("opening removes thin lines and keeps a disc") {
    GrayImage img(60, 60, 0.0);
    for (int c = 0; c < 60; ++c) img.at(10, c) = 1.0;
    fillDisc(img, 35, 30, 5, 1.0);
    GrayImage opened = open(img, StructuringElement::disc(3));
    for (int c = 0; c < 60; ++c) CHECK(opened.at(10, c) == 0.0);
    // Disc preserved to within one pixel of its boundary.
    for (int r = 0; r < 60; ++r)
        for (int c = 0; c < 60; ++c) {
            const double d = std::hypot(r - 35.0, c - 30.0);
            if (d <= 4.0) REQUIRE(opened.at(r, c) == 1.0);
            if (d >= 6.0) REQUIRE(opened.at(r, c) == 0.0);
        }
}

TEST_CASE("morphology matches the naive definition") {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        GrayImage img = randomGray(rng, rng.range(1, 25), rng.range(1, 25));
        const int radius = rng.range(1, 4);
        const auto disc = testsupport::discOffsets(radius);
        CHECK(erode(img, StructuringElement::disc(radius)) == testsupport::naiveMorph(img, disc, false));
        CHECK(dilate(img, StructuringElement::disc(radius)) == testsupport::naiveMorph(img, disc, true));
        for (int n : {1, 2, 5, 6}) {
            std::vector<std::pair<int, int>> h, v;
            for (int d = -(n - 1) / 2; d < n - (n - 1) / 2; ++d) {
                h.emplace_back(0, d);
                v.emplace_back(d, 0);
            }
            CHECK(erode(img, StructuringElement::horizontal(n)) == testsupport::naiveMorph(img, h, false));
            CHECK(dilate(img, StructuringElement::horizontal(n)) == testsupport::naiveMorph(img, h, true));
            CHECK(erode(img, StructuringElement::vertical(n)) == testsupport::naiveMorph(img, v, false));
            CHECK(dilate(img, StructuringElement::vertical(n)) == testsupport::naiveMorph(img, v, true));
        }
    }
}

TEST_CASE("morphology properties: idempotent opening, duality") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        GrayImage img = randomGray(rng, rng.range(5, 30), rng.range(5, 30));
        for (const auto& se : {StructuringElement::disc(rng.range(1, 4)), StructuringElement::horizontal(rng.range(1, 8)),
                               StructuringElement::vertical(rng.range(1, 8))}) {
            GrayImage once = open(img, se);
            REQUIRE(open(once, se) == once);
        }
        const auto se = StructuringElement::disc(rng.range(1, 4));
        GrayImage inv = img;
        for (double& v : inv.data) v = 1.0 - v;
        GrayImage lhs = dilate(inv, se), rhs = erode(img, se);
        for (std::size_t i = 0; i < lhs.size(); ++i) REQUIRE(std::abs(lhs.data[i] - (1.0 - rhs.data[i])) <= 1e-9);
    }
}

TEST_CASE("otsuThreshold") {
    std::vector<std::uint64_t> h(256, 0);
    h[0] = 3;
    h[255] = 3;
    CHECK(otsuThreshold(h) == 1);
    CHECK(otsuThreshold(h) == testsupport::exhaustiveOtsu(h));

    std::vector<std::uint64_t> heights(100, 0);
    for (int v : {20, 22, 21, 80, 82}) ++heights[std::size_t(v)];
    const int t = otsuThreshold(heights);
    CHECK(t > 22);
    CHECK(t <= 80);

    std::vector<std::uint64_t> same(256, 0);
    same[100] = 50;
    CHECK_THROWS_WITH_AS(otsuThreshold(same), "degenerate histogram", Error);
    CHECK_THROWS_AS(otsuThreshold(std::vector<std::uint64_t>(256, 0)), Error);

    Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        std::vector<std::uint64_t> r(256, 0);
        for (int i = 0; i < rng.range(2, 40); ++i) r[std::size_t(rng.range(0, 255))] += std::uint64_t(rng.range(1, 1000));
        if (std::count_if(r.begin(), r.end(), [](auto v) { return v > 0; }) < 2) continue;
        REQUIRE(otsuThreshold(r) == testsupport::exhaustiveOtsu(r));
    }
}

TEST_CASE("otsuBinarize") {
    GrayImage img(4, 4, 0.1);
    img.at(1, 1) = img.at(2, 2) = 0.9;
    BinaryImage b = otsuBinarize(img);
    CHECK(int(b.at(1, 1)) == 1);
    CHECK(int(b.at(0, 0)) == 0);
    CHECK(std::count(b.data.begin(), b.data.end(), 1) == 2);
    BinaryImage flat = otsuBinarize(GrayImage(3, 3, 0.5));
    CHECK(std::count(flat.data.begin(), flat.data.end(), 1) == 0);
}

TEST_CASE("connectedComponents") {
    CHECK(connectedComponents(BinaryImage(5, 5, 0)).empty());

    BinaryImage two(6, 8, 0);
    for (int r : {1, 2})
        for (int c : {1, 2, 5, 6}) two.at(r, c) = 1;
    auto regs = connectedComponents(two);
    REQUIRE(regs.size() == 2);
    CHECK(regs[0].pixelCount == 4);
    CHECK(regs[1].pixelCount == 4);
    CHECK(regs[0].bbox == BBox{1, 1, 2, 2});
    CHECK(regs[0].centroidRow == doctest::Approx(1.5));

    BinaryImage diag(3, 3, 0);
    diag.at(0, 0) = diag.at(1, 1) = diag.at(2, 2) = 1;
    CHECK(connectedComponents(diag, 8).size() == 1);
    CHECK(connectedComponents(diag, 4).size() == 3);

    Rng rng(21);
    for (int t = 0; t < 50; ++t) {
        BinaryImage img = randomBinary(rng, 20, 20, rng.uniform(0.2, 0.7));
        for (int conn : {4, 8}) {
            auto got = connectedComponents(img, conn);
            auto want = testsupport::floodFillComponents(img, conn);
            REQUIRE(got.size() == want.size());
            int total = 0;
            for (std::size_t i = 0; i < got.size(); ++i) {
                testsupport::PixelSet s(got[i].pixels.begin(), got[i].pixels.end());
                REQUIRE(s == want[i]);
                REQUIRE(got[i].pixelCount == int(s.size()));
                total += got[i].pixelCount;
            }
            CHECK(total == std::count(img.data.begin(), img.data.end(), 1));
        }
    }
}

TEST_CASE("convolve2D") {
    Rng rng(31);
    GrayImage img = randomGray(rng, 16, 16);
    CHECK(convolve2D(img, Kernel::centered(1, 1, {1.0})) == img);

    GrayImage flat(7, 9, 0.4);
    for (double v : convolve2D(flat, Kernel::centered(3, 3, std::vector<double>(9, 1.0))).data)
        REQUIRE(v == doctest::Approx(3.6));

    std::vector<double> w(25);
    for (double& x : w) x = rng.uniform(-1, 1);
    Kernel k = Kernel::centered(5, 5, w);
    ResponseMap got = convolve2D(img, k), want = testsupport::denseConvolve(img, k);
    for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(std::abs(got.data[i] - want.data[i]) <= 1e-9);

    // Anchored (non-centered) kernel.
    Kernel a{4, 1, 3, 0, {0.5, 0.0, 0.25, 1.0}};
    got = convolve2D(img, a);
    want = testsupport::denseConvolve(img, a);
    for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(std::abs(got.data[i] - want.data[i]) <= 1e-12);

    // Linearity.
    GrayImage y = randomGray(rng, 16, 16), mix(16, 16);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data[i] = 0.3 * img.data[i] - 1.7 * y.data[i];
    ResponseMap cx = convolve2D(img, k), cy = convolve2D(y, k), cm = convolve2D(mix, k);
    for (std::size_t i = 0; i < cm.size(); ++i) REQUIRE(std::abs(cm.data[i] - (0.3 * cx.data[i] - 1.7 * cy.data[i])) <= 1e-7);

    CHECK_THROWS_WITH_AS(convolve2D(GrayImage(3, 3, 0.0), k), "kernel larger than image", Error);
    CHECK_THROWS_AS(Kernel::centered(2, 3, std::vector<double>(6, 1.0)), Error);
}

TEST_CASE("simpleBlobDetect") {
    CHECK(simpleBlobDetect(GrayImage(50, 50, 0.0), 10, 500, 10, 5).empty());

    GrayImage img(60, 110, 0.0);
    fillDisc(img, 30, 30, 4, 1.0);
    fillDisc(img, 30, 80, 4, 1.0);
    auto kps = simpleBlobDetect(img, 10, 500, 10, 5);
    REQUIRE(kps.size() == 2);
    CHECK(std::hypot(kps[0].x - 30, kps[0].y - 30) <= 1.0);
    CHECK(std::hypot(kps[1].x - 80, kps[1].y - 30) <= 1.0);

    GrayImage bigDisc(80, 80, 0.0);
    fillDisc(bigDisc, 40, 40, 20, 1.0);
    CHECK(simpleBlobDetect(bigDisc, 10, 500, 10, 5).empty());
}

TEST_CASE("kmeans2D") {
    std::vector<Point2> pts = {{0, 0}, {2, 0}, {1, 3}, {5, 5}};
    auto one = kmeans2D(pts, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].x == doctest::Approx(2.0));
    CHECK(one[0].y == doctest::Approx(2.0));

    auto all = kmeans2D(pts, 4);
    std::vector<Point2> sorted = pts;
    std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    CHECK(all == sorted);

    CHECK_THROWS_AS(kmeans2D(pts, 5), Error);

    Rng rng(41);
    for (int t = 0; t < 20; ++t) {
        std::vector<Point2> cl;
        const double ax = rng.uniform(0, 50), ay = rng.uniform(0, 50);
        const double bx = ax + rng.uniform(30, 60), by = ay + rng.uniform(-40, 40);
        for (int i = 0; i < 5; ++i) cl.push_back({ax + rng.uniform(-2, 2), ay + rng.uniform(-2, 2)});
        for (int i = 0; i < 5; ++i) cl.push_back({bx + rng.uniform(-2, 2), by + rng.uniform(-2, 2)});
        auto got = kmeans2D(cl, 2);
        auto [p, q] = testsupport::bestTwoMeans(cl);
        // Either labeling of the oracle's pair.
        const double d1 = std::max(std::hypot(got[0].x - p.x, got[0].y - p.y), std::hypot(got[1].x - q.x, got[1].y - q.y));
        const double d2 = std::max(std::hypot(got[0].x - q.x, got[0].y - q.y), std::hypot(got[1].x - p.x, got[1].y - p.y));
        CHECK(std::min(d1, d2) <= 0.5);
        CHECK(kmeans2D(cl, 2) == got);
    }
}
