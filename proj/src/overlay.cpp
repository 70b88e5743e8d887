#include "bootleg/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>

#include "bootleg/io.hpp"

namespace bootleg::overlay {

namespace {

using Color = std::array<double, 3>;
constexpr Color kRed{230, 30, 30}, kBlue{30, 60, 230}, kGreen{20, 170, 40}, kOrange{240, 140, 0},
    kMagenta{200, 0, 200};

constexpr std::array<std::pair<Layer, std::string_view>, 6> kNames{{
    {Layer::NoteheadBoxes, "noteheads"},
    {Layer::ChordCenters, "chord-centers"},
    {Layer::Beamless, "beamless"},
    {Layer::BarlineBoxes, "barlines"},
    {Layer::LineBands, "lines"},
    {Layer::StaffDots, "staff-dots"},
}};

void put(image::RgbImage& img, int r, int c, const Color& col) {
    if (r < 0 || c < 0 || r >= img.height || c >= img.width) return;
    const std::size_t i = (std::size_t(r) * img.width + c) * 3;
    img.data[i] = col[0];
    img.data[i + 1] = col[1];
    img.data[i + 2] = col[2];
}

void blend(image::RgbImage& img, int r, int c, const Color& col, double alpha) {
    if (r < 0 || c < 0 || r >= img.height || c >= img.width) return;
    const std::size_t i = (std::size_t(r) * img.width + c) * 3;
    for (int k = 0; k < 3; ++k) img.data[i + k] = (1 - alpha) * img.data[i + k] + alpha * col[std::size_t(k)];
}

void rect(image::RgbImage& img, const image::BBox& b, const Color& col) {
    for (int c = b.colMin; c <= b.colMax; ++c) {
        put(img, b.rowMin, c, col);
        put(img, b.rowMax, c, col);
    }
    for (int r = b.rowMin; r <= b.rowMax; ++r) {
        put(img, r, b.colMin, col);
        put(img, r, b.colMax, col);
    }
}

void dot(image::RgbImage& img, double y, double x, int radius, const Color& col) {
    const int cy = int(std::lround(y)), cx = int(std::lround(x));
    for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc)
            if (dr * dr + dc * dc <= radius * radius) put(img, cy + dr, cx + dc, col);
}

}  // namespace

std::string_view layerName(Layer layer) {
    for (const auto& [l, name] : kNames)
        if (l == layer) return name;
    return "unknown";
}

Layer parseLayer(std::string_view name) {
    for (const auto& [l, n] : kNames)
        if (n == name) return l;
    throw Error("unknown overlay layer: " + std::string(name));
}

std::vector<Layer> allLayers() {
    std::vector<Layer> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
}

void OverlaySpec::validate() const {
    if (layers.empty()) throw Error("overlay spec requests no layers");
}

image::RgbImage render(const sheet::SheetAnalysis& a, Layer layer) {
    if (layer == Layer::Beamless) {
        // Ink is high in the pipeline image; show it dark on white.
        image::GrayImage inv = a.beamless.height > 0 ? a.beamless : a.preprocessed;
        for (double& v : inv.data) v = 1.0 - std::clamp(v, 0.0, 1.0);
        return io::grayToRgb(inv);
    }
    image::RgbImage img = io::grayToRgb(a.resized);
    switch (layer) {
        case Layer::NoteheadBoxes:
            for (const auto& nh : a.noteheads.noteheads) rect(img, nh.bbox, nh.fromChordSplit ? kOrange : kGreen);
            break;
        case Layer::ChordCenters:
            for (const auto& nh : a.noteheads.noteheads)
                if (nh.fromChordSplit) dot(img, nh.y, nh.x, 2, kMagenta);
            break;
        case Layer::BarlineBoxes:
            for (const auto& line : a.lines)
                for (const auto& b : line.barlines) rect(img, b, kRed);
            break;
        case Layer::LineBands:
            for (std::size_t i = 0; i < a.lines.size(); ++i) {
                const Color& col = i % 2 ? kBlue : kGreen;
                for (int r = a.lines[i].top; r <= a.lines[i].bottom; ++r)
                    for (int c = 0; c < img.width; ++c) blend(img, r, c, col, 0.25);
            }
            break;
        case Layer::StaffDots:
            // Red: estimated top staff line, blue: estimated bottom staff line.
            for (std::size_t i = 0; i < a.estimates.size(); ++i) {
                const auto& nh = a.noteheads.noteheads[i];
                const auto& est = a.estimates[i];
                dot(img, est.topLineY, nh.x, 2, kRed);
                dot(img, est.topLineY + 4.0 * est.spacing, nh.x, 2, kBlue);
            }
            break;
        case Layer::Beamless:
            break;
    }
    return img;
}

std::vector<std::string> writeOverlays(const sheet::SheetAnalysis& analysis, const OverlaySpec& spec,
                                       const std::string& dir) {
    spec.validate();
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    for (Layer layer : spec.layers) {
        const auto path = std::filesystem::path(dir) / (std::string(layerName(layer)) + ".png");
        io::writePng(path, render(analysis, layer));
        written.push_back(path.string());
    }
    return written;
}

}  // namespace bootleg::overlay
