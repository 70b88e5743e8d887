#include "bootleg/image.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace bootleg::image {

namespace {

// Sliding min/max over [i - left, i + right] clamped to the line, O(n).
void slidingExtreme(const double* in, double* out, int n, int left, int right, bool takeMax) {
    std::vector<int> dq(std::size_t(n) + 1);
    int head = 0, tail = 0;
    auto better = [takeMax](double a, double b) { return takeMax ? a >= b : a <= b; };
    int next = 0;  // next index to push
    for (int i = 0; i < n; ++i) {
        int hi = std::min(n - 1, i + right);
        while (next <= hi) {
            while (tail > head && better(in[next], in[dq[tail - 1]])) --tail;
            dq[tail++] = next++;
        }
        int lo = std::max(0, i - left);
        while (dq[head] < lo) ++head;
        out[i] = in[dq[head]];
    }
}

GrayImage filterRows(const GrayImage& img, int left, int right, bool takeMax) {
    GrayImage out(img.height, img.width);
    for (int r = 0; r < img.height; ++r)
        slidingExtreme(img.row(r).data(), out.row(r).data(), img.width, left, right, takeMax);
    return out;
}

GrayImage transpose(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    constexpr int kBlock = 32;
    for (int r0 = 0; r0 < img.height; r0 += kBlock)
        for (int c0 = 0; c0 < img.width; c0 += kBlock)
            for (int r = r0; r < std::min(img.height, r0 + kBlock); ++r)
                for (int c = c0; c < std::min(img.width, c0 + kBlock); ++c)
                    out.at(c, r) = img.at(r, c);
    return out;
}

int discHalfWidth(int radius, int dy) {
    int hw = 0;
    while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
    return hw;
}

// Disc = union of horizontal spans, one per row offset. Filter each distinct
// span width once, then take the extreme across row offsets.
GrayImage discExtreme(const GrayImage& img, int radius, bool takeMax) {
    std::map<int, GrayImage> spans;
    std::vector<int> hw(static_cast<std::size_t>(2 * radius + 1));
    for (int dy = -radius; dy <= radius; ++dy) {
        int w = discHalfWidth(radius, dy);
        hw[std::size_t(dy + radius)] = w;
        if (!spans.count(w)) spans.emplace(w, filterRows(img, w, w, takeMax));
    }
    GrayImage out(img.height, img.width, takeMax ? -std::numeric_limits<double>::infinity()
                                                  : std::numeric_limits<double>::infinity());
    for (int r = 0; r < img.height; ++r) {
        auto dst = out.row(r);
        for (int dy = -radius; dy <= radius; ++dy) {
            int sr = std::clamp(r + dy, 0, img.height - 1);
            auto src = spans.at(hw[std::size_t(dy + radius)]).row(sr);
            if (takeMax)
                for (int c = 0; c < img.width; ++c) dst[c] = std::max(dst[c], src[c]);
            else
                for (int c = 0; c < img.width; ++c) dst[c] = std::min(dst[c], src[c]);
        }
    }
    return out;
}

GrayImage morph(const GrayImage& img, const StructuringElement& se, bool takeMax) {
    if (img.empty()) return img;
    int n = se.size();
    // The dilation uses the reflected element so erode/dilate stay adjoint
    // for even-length lines.
    int left = (n - 1) / 2, right = n - 1 - left;
    if (takeMax) std::swap(left, right);
    switch (se.shape()) {
    case StructuringElement::Shape::Disc:
        return discExtreme(img, n, takeMax);
    case StructuringElement::Shape::Horizontal:
        return filterRows(img, left, right, takeMax);
    case StructuringElement::Shape::Vertical:
        return transpose(filterRows(transpose(img), left, right, takeMax));
    }
    return img;
}

struct UnionFind {
    std::vector<int> parent;
    int find(int x) {
        while (parent[std::size_t(x)] != x) {
            parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
            x = parent[std::size_t(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[std::size_t(b)] = a;
        else parent[std::size_t(a)] = b;
    }
};

}  // namespace

StructuringElement StructuringElement::disc(int radius) {
    if (radius < 1) throw Error("disc radius must be >= 1");
    return {Shape::Disc, radius};
}

StructuringElement StructuringElement::horizontal(int width) {
    if (width < 1) throw Error("line element width must be >= 1");
    return {Shape::Horizontal, width};
}

StructuringElement StructuringElement::vertical(int height) {
    if (height < 1) throw Error("line element height must be >= 1");
    return {Shape::Vertical, height};
}

std::vector<std::pair<int, int>> StructuringElement::offsets() const {
    std::vector<std::pair<int, int>> out;
    int left = (size_ - 1) / 2;
    switch (shape_) {
    case Shape::Disc:
        for (int dy = -size_; dy <= size_; ++dy) {
            int hw = discHalfWidth(size_, dy);
            for (int dx = -hw; dx <= hw; ++dx) out.emplace_back(dy, dx);
        }
        break;
    case Shape::Horizontal:
        for (int d = -left; d < size_ - left; ++d) out.emplace_back(0, d);
        break;
    case Shape::Vertical:
        for (int d = -left; d < size_ - left; ++d) out.emplace_back(d, 0);
        break;
    }
    return out;
}

Kernel Kernel::centered(int rows, int cols, std::vector<double> weights) {
    if (rows < 1 || cols < 1 || rows % 2 == 0 || cols % 2 == 0)
        throw Error("centered kernel dimensions must be odd");
    if (weights.size() != std::size_t(rows) * std::size_t(cols)) throw Error("kernel weight count mismatch");
    return {rows, cols, rows / 2, cols / 2, std::move(weights)};
}

void validate(const GrayImage& img) {
    if (img.data.size() != std::size_t(img.height) * std::size_t(img.width))
        throw Error("image data length does not match dimensions");
    for (double v : img.data)
        if (!(v >= 0.0 && v <= 1.0)) throw Error("image intensity outside [0,1]");
}

GrayImage toGrayscale(const RgbImage& rgb) {
    if (rgb.height <= 0 || rgb.width <= 0 || rgb.data.empty()) throw Error("empty image");
    if (rgb.data.size() != std::size_t(rgb.height) * std::size_t(rgb.width) * 3)
        throw Error("rgb data length does not match dimensions");
    double peak = *std::max_element(rgb.data.begin(), rgb.data.end());
    double scale = peak > 1.0 ? 1.0 / 255.0 : 1.0;
    GrayImage out(rgb.height, rgb.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double* p = &rgb.data[3 * i];
        double luma = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) * scale;
        out.data[i] = std::clamp(luma, 0.0, 1.0);
    }
    return out;
}

GrayImage resizeMaxDim(const GrayImage& img, int maxDim) {
    if (maxDim < 1) throw Error("maxDim must be >= 1");
    int longest = std::max(img.height, img.width);
    if (longest <= maxDim) return img;
    double scale = double(maxDim) / longest;
    int newH = img.height >= img.width ? maxDim : std::max(1, int(std::lround(img.height * scale)));
    int newW = img.width > img.height ? maxDim : std::max(1, int(std::lround(img.width * scale)));

    // Pixel-center mapping; a 2x reduction averages each 2x2 block.
    auto sampleAxis = [](int dst, int srcLen, int dstLen, int& i0, int& i1, double& f) {
        double s = (dst + 0.5) * double(srcLen) / dstLen - 0.5;
        s = std::clamp(s, 0.0, double(srcLen - 1));
        i0 = int(std::floor(s));
        i1 = std::min(i0 + 1, srcLen - 1);
        f = s - i0;
    };
    GrayImage out(newH, newW);
    std::vector<int> c0(static_cast<std::size_t>(newW)), c1(static_cast<std::size_t>(newW));
    std::vector<double> cf(static_cast<std::size_t>(newW));
    for (int c = 0; c < newW; ++c) sampleAxis(c, img.width, newW, c0[c], c1[c], cf[c]);
    for (int r = 0; r < newH; ++r) {
        int r0, r1;
        double rf;
        sampleAxis(r, img.height, newH, r0, r1, rf);
        auto top = img.row(r0), bot = img.row(r1);
        for (int c = 0; c < newW; ++c) {
            double a = top[c0[c]] + cf[c] * (top[c1[c]] - top[c0[c]]);
            double b = bot[c0[c]] + cf[c] * (bot[c1[c]] - bot[c0[c]]);
            out.at(r, c) = std::clamp(a + rf * (b - a), 0.0, 1.0);
        }
    }
    return out;
}

GrayImage backgroundSubtract(const GrayImage& img, int blurHalfWidth) {
    if (blurHalfWidth < 1) throw Error("blurHalfWidth must be >= 1");
    if (img.empty()) return img;
    const int h = img.height, w = img.width, k = blurHalfWidth;

    // Separable box sum with edge replication via prefix sums.
    auto boxLine = [k](const double* in, double* out, int n, int stride) {
        std::vector<double> prefix(std::size_t(n) + 1, 0.0);
        for (int i = 0; i < n; ++i) prefix[std::size_t(i) + 1] = prefix[std::size_t(i)] + in[std::size_t(i) * stride];
        double first = in[0], last = in[std::size_t(n - 1) * stride];
        for (int i = 0; i < n; ++i) {
            int lo = i - k, hi = i + k;
            double s = prefix[std::size_t(std::min(hi, n - 1)) + 1] - prefix[std::size_t(std::max(lo, 0))];
            if (lo < 0) s += double(-lo) * first;
            if (hi > n - 1) s += double(hi - (n - 1)) * last;
            out[std::size_t(i) * stride] = s;
        }
    };
    GrayImage rows(h, w), blur(h, w);
    for (int r = 0; r < h; ++r) boxLine(img.row(r).data(), rows.row(r).data(), w, 1);
    for (int c = 0; c < w; ++c) boxLine(rows.data.data() + c, blur.data.data() + c, h, w);

    const double norm = double(2 * k + 1) * double(2 * k + 1);
    GrayImage out(h, w);
    double peak = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double d = blur.data[i] / norm - img.data[i];
        // Rounding residue of the box sum on flat regions is not signal.
        if (d < 1e-9) d = 0.0;
        out.data[i] = std::min(d, 1.0);
        peak = std::max(peak, out.data[i]);
    }
    if (peak > 0.0)
        for (double& v : out.data) v /= peak;
    return out;
}

GrayImage erode(const GrayImage& img, const StructuringElement& se) { return morph(img, se, false); }

GrayImage dilate(const GrayImage& img, const StructuringElement& se) { return morph(img, se, true); }

GrayImage open(const GrayImage& img, const StructuringElement& se) { return dilate(erode(img, se), se); }

int otsuThreshold(std::span<const std::uint64_t> histogram) {
    using boost::multiprecision::uint256_t;
    using boost::multiprecision::uint512_t;
    const int n = int(histogram.size());
    int nonEmpty = 0;
    unsigned __int128 total = 0, sum = 0;
    for (int b = 0; b < n; ++b) {
        if (histogram[b]) ++nonEmpty;
        total += histogram[b];
        sum += (unsigned __int128)histogram[b] * unsigned(b);
    }
    if (nonEmpty < 2) throw Error("degenerate histogram");

    // Between-class variance times N^2 is (s0*N - S*n0)^2 / (n0*n1); compare
    // the fractions exactly so ties resolve to the smallest threshold.
    int best = -1;
    uint256_t bestNum = 0, bestDen = 1;
    unsigned __int128 n0 = 0, s0 = 0;
    for (int t = 1; t < n; ++t) {
        n0 += histogram[t - 1];
        s0 += (unsigned __int128)histogram[t - 1] * unsigned(t - 1);
        unsigned __int128 n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        unsigned __int128 a = s0 * total, b = sum * n0;
        unsigned __int128 diff = a > b ? a - b : b - a;
        uint256_t num = uint256_t(diff) * uint256_t(diff);
        uint256_t den = uint256_t(n0) * uint256_t(n1);
        if (best < 0 || uint512_t(num) * bestDen > uint512_t(bestNum) * den) {
            best = t;
            bestNum = num;
            bestDen = den;
        }
    }
    return best;
}

int intensityBin(double v, int bins) { return std::clamp(int(v * bins), 0, bins - 1); }

BinaryImage otsuBinarize(const GrayImage& img) {
    std::vector<std::uint64_t> hist(256, 0);
    for (double v : img.data) ++hist[std::size_t(intensityBin(v))];
    BinaryImage out(img.height, img.width, 0);
    if (std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; }) < 2) return out;
    int t = otsuThreshold(hist);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = intensityBin(img.data[i]) >= t;
    return out;
}

std::vector<Region> connectedComponents(const BinaryImage& img, int connectivity) {
    if (connectivity != 4 && connectivity != 8) throw Error("connectivity must be 4 or 8");
    const int h = img.height, w = img.width;
    std::vector<int> label(img.size(), -1);
    UnionFind uf;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!img.at(r, c)) continue;
            int me = -1;
            auto link = [&](int rr, int cc) {
                if (rr < 0 || cc < 0 || cc >= w) return;
                int l = label[std::size_t(rr) * w + cc];
                if (l < 0) return;
                if (me < 0) me = l;
                else uf.unite(me, l);
            };
            link(r, c - 1);
            link(r - 1, c);
            if (connectivity == 8) {
                link(r - 1, c - 1);
                link(r - 1, c + 1);
            }
            if (me < 0) {
                me = int(uf.parent.size());
                uf.parent.push_back(me);
            }
            label[std::size_t(r) * w + c] = me;
        }
    }

    // Roots numbered in order of first appearance in raster order.
    std::vector<int> slot(uf.parent.size(), -1);
    std::vector<Region> regions;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int l = label[std::size_t(r) * w + c];
            if (l < 0) continue;
            int root = uf.find(l);
            if (slot[std::size_t(root)] < 0) {
                slot[std::size_t(root)] = int(regions.size());
                Region reg;
                reg.bbox = {r, c, r, c};
                regions.push_back(std::move(reg));
            }
            Region& reg = regions[std::size_t(slot[std::size_t(root)])];
            ++reg.pixelCount;
            reg.bbox.rowMin = std::min(reg.bbox.rowMin, r);
            reg.bbox.rowMax = std::max(reg.bbox.rowMax, r);
            reg.bbox.colMin = std::min(reg.bbox.colMin, c);
            reg.bbox.colMax = std::max(reg.bbox.colMax, c);
            reg.centroidRow += r;
            reg.centroidCol += c;
            reg.pixels.emplace_back(r, c);
        }
    }
    for (Region& reg : regions) {
        reg.centroidRow /= reg.pixelCount;
        reg.centroidCol /= reg.pixelCount;
    }
    std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
        if (a.bbox.rowMin != b.bbox.rowMin) return a.bbox.rowMin < b.bbox.rowMin;
        return a.bbox.colMin < b.bbox.colMin;
    });
    return regions;
}

ResponseMap convolve2D(const GrayImage& img, const Kernel& kernel) {
    if (kernel.rows > img.height || kernel.cols > img.width)
        throw Error("kernel larger than image");
    const int h = img.height, w = img.width;
    ResponseMap out(h, w, 0.0);
    for (int i = 0; i < kernel.rows; ++i) {
        for (int j = 0; j < kernel.cols; ++j) {
            const double wt = kernel.at(i, j);
            if (wt == 0.0) continue;
            const int dr = kernel.anchorRow - i, dc = kernel.anchorCol - j;
            const int cLo = std::clamp(-dc, 0, w), cHi = std::clamp(w - dc, 0, w);
            for (int r = 0; r < h; ++r) {
                const double* src = img.row(std::clamp(r + dr, 0, h - 1)).data();
                double* dst = out.row(r).data();
                for (int c = 0; c < cLo; ++c) dst[c] += wt * src[0];
                for (int c = cLo; c < cHi; ++c) dst[c] += wt * src[c + dc];
                for (int c = std::max(cHi, cLo); c < w; ++c) dst[c] += wt * src[w - 1];
            }
        }
    }
    return out;
}

std::vector<Keypoint> simpleBlobDetect(const GrayImage& img, double minArea, double maxArea,
                                       int numThresholds, double minDistBetweenBlobs) {
    if (!(minArea < maxArea)) throw Error("blob minArea must be below maxArea");
    if (numThresholds < 1) throw Error("numThresholds must be >= 1");
    if (img.empty()) return {};
    auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
    const double vmin = *lo, vmax = *hi;
    if (!(vmax > vmin)) return {};

    struct Group {
        double sx = 0, sy = 0, sd = 0;
        int n = 0;
        double cx() const { return sx / n; }
        double cy() const { return sy / n; }
    };
    std::vector<Group> groups;
    BinaryImage bin(img.height, img.width, 0);
    for (int t = 0; t < numThresholds; ++t) {
        const double thresh = vmin + (t + 1) * (vmax - vmin) / (numThresholds + 1);
        for (std::size_t i = 0; i < img.data.size(); ++i) bin.data[i] = img.data[i] > thresh;
        for (const Region& reg : connectedComponents(bin)) {
            if (reg.pixelCount < minArea || reg.pixelCount > maxArea) continue;
            const double x = reg.centroidCol, y = reg.centroidRow;
            const double d = 2.0 * std::sqrt(reg.pixelCount / M_PI);
            Group* match = nullptr;
            double bestDist = minDistBetweenBlobs;
            for (Group& g : groups) {
                double dist = std::hypot(g.cx() - x, g.cy() - y);
                if (dist < bestDist) {
                    bestDist = dist;
                    match = &g;
                }
            }
            if (!match) {
                groups.emplace_back();
                match = &groups.back();
            }
            match->sx += x;
            match->sy += y;
            match->sd += d;
            ++match->n;
        }
    }
    std::vector<Keypoint> out;
    for (const Group& g : groups)
        if (g.n >= 2) out.push_back({g.cx(), g.cy(), g.sd / g.n});
    std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    return out;
}

std::vector<Point2> kmeans2D(std::span<const Point2> points, int k) {
    const int n = int(points.size());
    if (k < 1) throw Error("k must be >= 1");
    if (k > n) throw Error("k exceeds number of points");

    double mx = 0, my = 0;
    for (const Point2& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const Point2& p : points) {
        sxx += (p.x - mx) * (p.x - mx);
        sxy += (p.x - mx) * (p.y - my);
        syy += (p.y - my) * (p.y - my);
    }
    // Principal eigenvector of the 2x2 scatter matrix.
    double ax = 1.0, ay = 0.0;
    if (sxy != 0.0 || syy > sxx) {
        double lambda = 0.5 * (sxx + syy + std::sqrt((sxx - syy) * (sxx - syy) + 4 * sxy * sxy));
        if (sxy != 0.0) {
            ax = sxy;
            ay = lambda - sxx;
        } else {
            ax = 0.0;
            ay = 1.0;
        }
        double len = std::hypot(ax, ay);
        ax /= len;
        ay /= len;
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return points[a].x * ax + points[a].y * ay < points[b].x * ax + points[b].y * ay;
    });
    std::vector<Point2> centers(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) centers[i] = points[order[std::size_t((2 * i + 1) * n / (2 * k))]];

    std::vector<int> assign(std::size_t(n), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bestD = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                double d = (points[i].x - centers[j].x) * (points[i].x - centers[j].x) +
                           (points[i].y - centers[j].y) * (points[i].y - centers[j].y);
                if (d < bestD) {
                    bestD = d;
                    best = j;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<Point2> sums(static_cast<std::size_t>(k));
        std::vector<int> counts(std::size_t(k), 0);
        for (int i = 0; i < n; ++i) {
            sums[assign[i]].x += points[i].x;
            sums[assign[i]].y += points[i].y;
            ++counts[assign[i]];
        }
        for (int j = 0; j < k; ++j)
            if (counts[j]) centers[j] = {sums[j].x / counts[j], sums[j].y / counts[j]};
    }
    std::sort(centers.begin(), centers.end(), [](const Point2& a, const Point2& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    return centers;
}

}  // namespace bootleg::image
