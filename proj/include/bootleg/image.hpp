#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bootleg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace image {

/**
 * Row-major raster. Pixel (r, c) lives at data[r * width + c].
 */
template <typename T>
struct Raster {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Raster() = default;
    Raster(int h, int w, T fill = T{}) : height(h), width(w), data(std::size_t(h) * std::size_t(w), fill) {}

    bool empty() const { return data.empty(); }
    std::size_t size() const { return data.size(); }

    T& at(int r, int c) { return data[std::size_t(r) * width + c]; }
    const T& at(int r, int c) const { return data[std::size_t(r) * width + c]; }

    std::span<T> row(int r) { return {data.data() + std::size_t(r) * width, std::size_t(width)}; }
    std::span<const T> row(int r) const { return {data.data() + std::size_t(r) * width, std::size_t(width)}; }

    bool operator==(const Raster&) const = default;
};

/// Intensities in [0,1]. Photographs use 0 = black ink; everything after
/// background subtraction uses the opposite polarity (ink = high).
using GrayImage = Raster<double>;

/// Foreground = 1.
using BinaryImage = Raster<std::uint8_t>;

/// Unbounded real-valued filter output.
using ResponseMap = Raster<double>;

/// Interleaved 3-channel raster, channel values either in [0,255] or [0,1].
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // r,g,b per pixel
};

class StructuringElement {
public:
    enum class Shape { Disc, Horizontal, Vertical };

    static StructuringElement disc(int radius);
    static StructuringElement horizontal(int width);
    static StructuringElement vertical(int height);

    Shape shape() const { return shape_; }
    int size() const { return size_; }

    /// (dr, dc) offsets covered by the element.
    std::vector<std::pair<int, int>> offsets() const;

private:
    StructuringElement(Shape s, int n) : shape_(s), size_(n) {}
    Shape shape_;
    int size_;
};

struct BBox {
    int rowMin = 0;
    int colMin = 0;
    int rowMax = 0;
    int colMax = 0;

    int height() const { return rowMax - rowMin + 1; }
    int width() const { return colMax - colMin + 1; }
    bool operator==(const BBox&) const = default;
};

struct Region {
    int pixelCount = 0;
    BBox bbox;
    double centroidRow = 0;
    double centroidCol = 0;
    std::vector<std::pair<int, int>> pixels;  // (row, col), raster order
};

struct Keypoint {
    double x = 0;
    double y = 0;
    double diameter = 0;
};

struct Point2 {
    double x = 0;
    double y = 0;
    bool operator==(const Point2&) const = default;
};

/**
 * 2-D filter kernel with an explicit anchor. Kernels built with
 * Kernel::centered() must have odd dimensions; the anchor is the middle tap.
 */
struct Kernel {
    int rows = 0;
    int cols = 0;
    int anchorRow = 0;
    int anchorCol = 0;
    std::vector<double> weights;

    static Kernel centered(int rows, int cols, std::vector<double> weights);
    double at(int i, int j) const { return weights[std::size_t(i) * cols + j]; }
};

void validate(const GrayImage& img);

GrayImage toGrayscale(const RgbImage& rgb);

/// Bilinear downscale so that max(h, w) == maxDim. Never upscales.
GrayImage resizeMaxDim(const GrayImage& img, int maxDim = 1000);

/// clamp(boxblur(img) - img, 0, 1), renormalized by its maximum.
/// Input uses ink = dark, output uses ink = high.
GrayImage backgroundSubtract(const GrayImage& img, int blurHalfWidth);

/// Neighborhood minimum over the element (foreground = high values).
GrayImage erode(const GrayImage& img, const StructuringElement& se);
/// Neighborhood maximum over the element.
GrayImage dilate(const GrayImage& img, const StructuringElement& se);
GrayImage open(const GrayImage& img, const StructuringElement& se);

/// Threshold bin t maximizing inter-class variance between bins [0,t) and
/// [t,n). Ties go to the smallest t. Throws on fewer than two nonempty bins.
int otsuThreshold(std::span<const std::uint64_t> histogram);

/// Otsu over a 256-bin histogram of [0,1] intensities; foreground = bin >= t.
BinaryImage otsuBinarize(const GrayImage& img);
int intensityBin(double v, int bins = 256);

/// Regions ordered by (rowMin, colMin).
std::vector<Region> connectedComponents(const BinaryImage& img, int connectivity = 8);

ResponseMap convolve2D(const GrayImage& img, const Kernel& kernel);

std::vector<Keypoint> simpleBlobDetect(const GrayImage& img, double minArea, double maxArea,
                                       int numThresholds, double minDistBetweenBlobs);

/// Deterministic Lloyd k-means. Centers sorted by y, then x.
std::vector<Point2> kmeans2D(std::span<const Point2> points, int k);

}  // namespace image
}  // namespace bootleg
