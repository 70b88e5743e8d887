#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace testsupport {

using bootleg::image::BinaryImage;
using bootleg::image::GrayImage;
using bootleg::image::Point2;

std::vector<PixelSet> floodFillComponents(const BinaryImage& img, int connectivity) {
    std::vector<std::vector<bool>> seen(std::size_t(img.height), std::vector<bool>(std::size_t(img.width), false));
    std::vector<PixelSet> out;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            if (!img.at(r, c) || seen[std::size_t(r)][std::size_t(c)]) continue;
            PixelSet comp;
            std::deque<std::pair<int, int>> todo{{r, c}};
            seen[std::size_t(r)][std::size_t(c)] = true;
            while (!todo.empty()) {
                auto [y, x] = todo.front();
                todo.pop_front();
                comp.insert({y, x});
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dy == 0 && dx == 0) || (connectivity == 4 && dy != 0 && dx != 0)) continue;
                        const int ny = y + dy, nx = x + dx;
                        if (ny < 0 || nx < 0 || ny >= img.height || nx >= img.width) continue;
                        if (!img.at(ny, nx) || seen[std::size_t(ny)][std::size_t(nx)]) continue;
                        seen[std::size_t(ny)][std::size_t(nx)] = true;
                        todo.push_back({ny, nx});
                    }
            }
            out.push_back(std::move(comp));
        }
    auto key = [](const PixelSet& s) {
        int rmin = std::numeric_limits<int>::max(), cmin = rmin;
        for (auto [y, x] : s) {
            rmin = std::min(rmin, y);
            cmin = std::min(cmin, x);
        }
        return std::pair{rmin, cmin};
    };
    std::stable_sort(out.begin(), out.end(), [&](const PixelSet& a, const PixelSet& b) { return key(a) < key(b); });
    return out;
}

double bruteForceDtwCost(const bootleg::align::CostMatrix& costs, const bootleg::align::StepPattern& pattern) {
    const int Q = costs.queryLen, R = costs.refLen;
    double best = std::numeric_limits<double>::infinity();
    // Walk forward from every start column, trying every step sequence.
    std::function<void(int, int, double)> walk = [&](int q, int r, double acc) {
        if (q == Q - 1) best = std::min(best, acc);
        for (const auto& st : pattern.steps) {
            const int nq = q + st.dq, nr = r + st.dr;
            if (nq < Q && nr < R) walk(nq, nr, acc + st.weight * costs.at(nq, nr));
        }
    };
    for (int r = 0; r < R; ++r) walk(0, r, costs.at(0, r));
    return best;
}

int exhaustiveOtsu(std::span<const std::uint64_t> histogram) {
    using boost::multiprecision::cpp_int;
    int best = -1;
    cpp_int bestNum = 0, bestDen = 1;
    for (std::size_t t = 1; t < histogram.size(); ++t) {
        cpp_int n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (std::size_t b = 0; b < histogram.size(); ++b) {
            (b < t ? n0 : n1) += histogram[b];
            (b < t ? s0 : s1) += cpp_int(histogram[b]) * b;
        }
        if (n0 == 0 || n1 == 0) continue;
        const cpp_int d = s0 * n1 - s1 * n0;
        const cpp_int num = d * d, den = n0 * n1;
        if (best < 0 || num * bestDen > bestNum * den) {
            best = int(t);
            bestNum = num;
            bestDen = den;
        }
    }
    return best;
}

bootleg::image::ResponseMap denseConvolve(const GrayImage& img, const bootleg::image::Kernel& k) {
    bootleg::image::ResponseMap out(img.height, img.width, 0.0);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            double acc = 0;
            for (int i = 0; i < k.rows; ++i)
                for (int j = 0; j < k.cols; ++j) {
                    const int y = std::clamp(r - i + k.anchorRow, 0, img.height - 1);
                    const int x = std::clamp(c - j + k.anchorCol, 0, img.width - 1);
                    acc += k.weights[std::size_t(i * k.cols + j)] * img.at(y, x);
                }
            out.at(r, c) = acc;
        }
    return out;
}

GrayImage naiveMorph(const GrayImage& img, const std::vector<std::pair<int, int>>& offsets, bool dilate) {
    GrayImage out(img.height, img.width, 0.0);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            double v = dilate ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            for (auto [dr, dc] : offsets) {
                const int sign = dilate ? -1 : 1;
                const double x = img.at(std::clamp(r + sign * dr, 0, img.height - 1),
                                        std::clamp(c + sign * dc, 0, img.width - 1));
                v = dilate ? std::max(v, x) : std::min(v, x);
            }
            out.at(r, c) = v;
        }
    return out;
}

std::vector<std::pair<int, int>> discOffsets(int radius) {
    std::vector<std::pair<int, int>> out;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) out.emplace_back(dy, dx);
    return out;
}

std::pair<Point2, Point2> bestTwoMeans(std::span<const Point2> pts) {
    const std::size_t n = pts.size();
    double bestSse = std::numeric_limits<double>::infinity();
    std::pair<Point2, Point2> best;
    // Point 0 stays in cluster A so each partition is visited once.
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
        Point2 a{0, 0}, b{0, 0};
        int na = 0, nb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool inB = i > 0 && ((mask >> (i - 1)) & 1);
            Point2& m = inB ? b : a;
            m.x += pts[i].x;
            m.y += pts[i].y;
            ++(inB ? nb : na);
        }
        if (nb == 0) continue;
        a = {a.x / na, a.y / na};
        b = {b.x / nb, b.y / nb};
        double sse = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool inB = i > 0 && ((mask >> (i - 1)) & 1);
            const Point2& m = inB ? b : a;
            sse += (pts[i].x - m.x) * (pts[i].x - m.x) + (pts[i].y - m.y) * (pts[i].y - m.y);
        }
        if (sse < bestSse) {
            bestSse = sse;
            best = {a, b};
        }
    }
    return best;
}

double chiSquarePValue(double statistic, int degreesOfFreedom) {
    boost::math::chi_squared dist(degreesOfFreedom);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

}  // namespace testsupport
