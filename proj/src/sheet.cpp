#include "bootleg/sheet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace bootleg::sheet {

using image::BBox;
using image::GrayImage;
using image::Region;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

BBox boxAround(double x, double y, int w, int h, int imgW, int imgH) {
    BBox b;
    b.colMin = std::clamp(int(std::lround(x - (w - 1) / 2.0)), 0, imgW - 1);
    b.rowMin = std::clamp(int(std::lround(y - (h - 1) / 2.0)), 0, imgH - 1);
    b.colMax = std::clamp(b.colMin + w - 1, 0, imgW - 1);
    b.rowMax = std::clamp(b.rowMin + h - 1, 0, imgH - 1);
    return b;
}

// Chord blobs pass the area gate too; averaging only blobs near the small end
// of the diameter distribution keeps them out of the template.
std::vector<image::Keypoint> singleHeadKeypoints(const std::vector<image::Keypoint>& keypoints, double tol) {
    std::vector<double> d;
    for (const auto& kp : keypoints) d.push_back(kp.diameter);
    std::sort(d.begin(), d.end());
    const double limit = tol * d[(d.size() - 1) / 4];
    std::vector<image::Keypoint> out;
    for (const auto& kp : keypoints)
        if (kp.diameter <= limit) out.push_back(kp);
    return out;
}

NoteheadTemplate buildTemplate(const GrayImage& opened, const std::vector<image::Keypoint>& keypoints, int cropSize) {
    const int half = cropSize / 2;
    NoteheadTemplate t;
    t.patch = GrayImage(cropSize, cropSize, 0.0);
    for (const image::Keypoint& kp : keypoints) {
        const int cr = int(std::lround(kp.y)), cc = int(std::lround(kp.x));
        for (int r = 0; r < cropSize; ++r)
            for (int c = 0; c < cropSize; ++c)
                t.patch.at(r, c) += opened.at(std::clamp(cr + r - half, 0, opened.height - 1),
                                              std::clamp(cc + c - half, 0, opened.width - 1));
    }
    for (double& v : t.patch.data) v /= double(keypoints.size());

    image::BinaryImage bin = image::otsuBinarize(t.patch);
    std::vector<Region> regions = image::connectedComponents(bin);
    if (regions.empty()) throw Error("template adaptation failed: notehead template has no foreground");
    // The notehead is the component nearest the crop center.
    const Region* best = &regions.front();
    double bestD = 1e300;
    for (const Region& reg : regions) {
        bool holdsCenter = bin.at(half, half) &&
                           std::find(reg.pixels.begin(), reg.pixels.end(), std::pair{half, half}) != reg.pixels.end();
        double d = holdsCenter ? -1.0 : std::hypot(reg.centroidRow - half, reg.centroidCol - half);
        if (d < bestD) {
            bestD = d;
            best = &reg;
        }
    }
    t.height = best->bbox.height();
    t.width = best->bbox.width();
    t.area = best->pixelCount;
    return t;
}

}  // namespace

GrayImage preprocess(const image::RgbImage& raster, const Config& cfg) {
    GrayImage gray = image::resizeMaxDim(image::toGrayscale(raster), cfg.maxDim);
    return image::backgroundSubtract(gray, cfg.blurHalfWidth);
}

NoteheadResult detectNoteheads(const GrayImage& img, const Config& cfg) {
    NoteheadResult res;
    res.opened = image::open(img, image::StructuringElement::disc(cfg.noteheadSeRadius));
    res.keypoints = image::simpleBlobDetect(res.opened, cfg.blobMinArea, cfg.blobMaxArea, cfg.blobNumThresholds,
                                            cfg.blobMinDist);
    if (res.keypoints.empty()) throw Error("template adaptation failed: no notehead-sized blobs found");
    res.tmpl = buildTemplate(res.opened, singleHeadKeypoints(res.keypoints, cfg.templateDiameterTol), cfg.cropSize);
    const NoteheadTemplate& t = res.tmpl;
    const double aspect = double(t.height) / t.width;

    for (const Region& reg : image::connectedComponents(image::otsuBinarize(res.opened))) {
        const int h = reg.bbox.height(), w = reg.bbox.width();
        const double area = reg.pixelCount;
        if (area >= cfg.chordAreaMin * t.area) {
            // Chord block: as many noteheads as template areas it holds.
            const int k = int(std::lround(area / t.area));
            if (w > cfg.chordWidthMax * t.width || h < cfg.noteheadHeightMin * t.height ||
                h > k * cfg.noteheadHeightMax * t.height || k > reg.pixelCount)
                continue;
            std::vector<image::Point2> pts;
            pts.reserve(reg.pixels.size());
            for (auto [r, c] : reg.pixels) pts.push_back({double(c), double(r)});
            for (const image::Point2& p : image::kmeans2D(pts, k))
                res.noteheads.push_back({boxAround(p.x, p.y, t.width, t.height, img.width, img.height), p.x, p.y, true});
            continue;
        }
        const double ratio = double(h) / w;
        const bool fits = h >= cfg.noteheadHeightMin * t.height && h <= cfg.noteheadHeightMax * t.height &&
                          w >= cfg.noteheadWidthMin * t.width && w <= cfg.noteheadWidthMax * t.width &&
                          ratio >= cfg.noteheadAspectMin * aspect && ratio <= cfg.noteheadAspectMax * aspect &&
                          area >= cfg.noteheadAreaMin * t.area && area <= cfg.noteheadAreaMax * t.area &&
                          double(h) * w <= 2.0 * t.area;
        if (fits) res.noteheads.push_back({reg.bbox, reg.centroidCol, reg.centroidRow, false});
    }
    std::sort(res.noteheads.begin(), res.noteheads.end(), [](const auto& a, const auto& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    return res;
}

GrayImage removeBeams(const GrayImage& horiz, int thicknessThresh) {
    GrayImage out = horiz;
    image::BinaryImage fg = image::otsuBinarize(horiz);
    for (int c = 0; c < horiz.width; ++c) {
        int r = 0;
        while (r < horiz.height) {
            if (!fg.at(r, c)) {
                ++r;
                continue;
            }
            int end = r;
            while (end < horiz.height && fg.at(end, c)) ++end;
            if (end - r > thicknessThresh)
                for (int k = r; k < end; ++k) out.at(k, c) = 0.0;
            r = end;
        }
    }
    return out;
}

image::Kernel combFilter(int spacing, int impulseHeight) {
    if (spacing < 2) throw Error("comb spacing must be >= 2");
    if (impulseHeight < 1) throw Error("impulse height must be >= 1");
    image::Kernel k;
    k.rows = 4 * spacing + impulseHeight;
    k.cols = 1;
    k.anchorRow = 2 * spacing;
    k.anchorCol = 0;
    k.weights.assign(std::size_t(k.rows), 0.0);
    const double w = 1.0 / (5.0 * impulseHeight);
    for (int line = 0; line < 5; ++line)
        for (int i = 0; i < impulseHeight; ++i) k.weights[std::size_t(line * spacing + i)] = w;
    return k;
}

StaffFeatureTensor staffFeatureTensor(const GrayImage& img, const Config& cfg, GrayImage* beamless) {
    GrayImage horiz = image::open(img, image::StructuringElement::horizontal(cfg.horizSeWidth));
    GrayImage lines = removeBeams(horiz, cfg.beamThicknessThresh);

    StaffFeatureTensor t;
    t.height = img.height;
    t.width = img.width;
    t.spacings = cfg.combSpacings();
    t.planes.reserve(t.spacings.size());
    for (int s : t.spacings) {
        image::ResponseMap resp = image::convolve2D(lines, combFilter(s, cfg.impulseHeight));
        t.planes.emplace_back(resp.data.begin(), resp.data.end());
    }
    if (beamless) *beamless = std::move(lines);
    return t;
}

std::vector<MusicLine> detectBarlines(const GrayImage& img, const Config& cfg) {
    GrayImage vert = image::open(img, image::StructuringElement::vertical(cfg.vertSeHeight));
    std::vector<BBox> boxes;
    for (const Region& reg : image::connectedComponents(image::otsuBinarize(vert)))
        if (reg.bbox.width() <= cfg.barlineMaxWidth) boxes.push_back(reg.bbox);
    if (boxes.empty()) throw Error("no music lines found");

    // Stems vs bar lines: Otsu split on region heights, unless the heights
    // are all alike (no stems present).
    int hmin = boxes.front().height(), hmax = hmin;
    for (const BBox& b : boxes) {
        hmin = std::min(hmin, b.height());
        hmax = std::max(hmax, b.height());
    }
    if (hmax > 1.1 * hmin) {
        std::vector<std::uint64_t> hist(std::size_t(hmax) + 1, 0);
        for (const BBox& b : boxes) ++hist[std::size_t(b.height())];
        const int t = image::otsuThreshold(hist);
        std::erase_if(boxes, [t](const BBox& b) { return b.height() < t; });
    }

    // Bar lines that overlap vertically belong to one line of music.
    std::sort(boxes.begin(), boxes.end(), [](const BBox& a, const BBox& b) {
        return a.rowMin != b.rowMin ? a.rowMin < b.rowMin : a.colMin < b.colMin;
    });
    std::vector<int> parent(boxes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[std::size_t(x)] != x) x = parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
        return x;
    };
    for (std::size_t i = 0; i < boxes.size(); ++i)
        for (std::size_t j = i + 1; j < boxes.size(); ++j)
            if (boxes[i].rowMin <= boxes[j].rowMax && boxes[j].rowMin <= boxes[i].rowMax) {
                int a = find(int(i)), b = find(int(j));
                parent[std::size_t(std::max(a, b))] = std::min(a, b);
            }

    std::vector<MusicLine> lines;
    std::vector<int> slot(boxes.size(), -1);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        int root = find(int(i));
        if (slot[std::size_t(root)] < 0) {
            slot[std::size_t(root)] = int(lines.size());
            lines.push_back({boxes[i].rowMin, boxes[i].rowMax, {}});
        }
        MusicLine& line = lines[std::size_t(slot[std::size_t(root)])];
        line.top = std::min(line.top, boxes[i].rowMin);
        line.bottom = std::max(line.bottom, boxes[i].rowMax);
        line.barlines.push_back(boxes[i]);
    }
    for (MusicLine& line : lines)
        std::sort(line.barlines.begin(), line.barlines.end(), [](const BBox& a, const BBox& b) { return a.colMin < b.colMin; });
    std::sort(lines.begin(), lines.end(), [](const MusicLine& a, const MusicLine& b) { return a.top < b.top; });
    return lines;
}

ContextWindow contextWindow(const Config& cfg, const NoteheadTemplate& tmpl) {
    return {int(std::lround(cfg.contextHeightFactor * tmpl.height)), cfg.contextHalfWidth};
}

LocalStaffEstimate estimateLocalStaff(const StaffFeatureTensor& tensor, const NoteheadDetection& notehead,
                                      const ContextWindow& window) {
    const int cy = std::clamp(int(std::lround(notehead.y)), 0, tensor.height - 1);
    const int cx = std::clamp(int(std::lround(notehead.x)), 0, tensor.width - 1);
    const int r0 = std::max(0, cy - window.halfHeight), r1 = std::min(tensor.height - 1, cy + window.halfHeight);
    const int c0 = std::max(0, cx - window.halfWidth), c1 = std::min(tensor.width - 1, cx + window.halfWidth);

    LocalStaffEstimate best;
    double bestScore = -1e300;
    int bestRow = r0, bestK = 0;
    for (std::size_t k = 0; k < tensor.combCount(); ++k) {
        const float* plane = tensor.planes[k].data();
        for (int r = r0; r <= r1; ++r) {
            const float* row = plane + std::size_t(r) * tensor.width;
            double sum = 0.0;
            for (int c = c0; c <= c1; ++c) sum += row[c];
            if (sum > bestScore) {
                bestScore = sum;
                bestRow = r;
                bestK = int(k);
            }
        }
    }
    best.combIndex = bestK;
    best.spacing = tensor.spacings[std::size_t(bestK)];
    best.topLineY = bestRow - 2.0 * best.spacing;
    best.score = bestScore;
    return best;
}

std::optional<LabeledNotehead> labelNotehead(const NoteheadDetection& notehead, const LocalStaffEstimate& est,
                                             std::span<const MusicLine> lines) {
    const double mid = est.middleY();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const MusicLine& line = lines[i];
        if (mid < line.top || mid > line.bottom) continue;
        LabeledNotehead out;
        out.detection = notehead;
        out.lineIndex = int(i);
        out.staff = mid < 0.5 * (line.top + line.bottom) ? Staff::Upper : Staff::Lower;
        out.staffPosition = int(std::lround(2.0 * (notehead.y - est.topLineY) / est.spacing));
        out.row = staff::rowFromStaffPosition(out.staff == Staff::Upper, out.staffPosition);
        out.spacing = est.spacing;
        if (out.row < 0 || out.row >= staff::kNumRows) return std::nullopt;
        return out;
    }
    return std::nullopt;
}

std::vector<QueryEvent> groupSimultaneous(std::span<const LabeledNotehead> labeled, double simultaneityTol) {
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& na = labeled[a];
        const auto& nb = labeled[b];
        if (na.lineIndex != nb.lineIndex) return na.lineIndex < nb.lineIndex;
        return na.detection.x < nb.detection.x;
    });

    std::vector<QueryEvent> events;
    std::size_t i = 0;
    while (i < order.size()) {
        const LabeledNotehead& anchor = labeled[order[i]];
        QueryEvent ev{anchor.lineIndex, anchor.detection.x, 0, 0};
        const double limit = anchor.detection.x + simultaneityTol * anchor.spacing;
        while (i < order.size() && labeled[order[i]].lineIndex == anchor.lineIndex &&
               (labeled[order[i]].detection.x < limit || ev.count == 0)) {
            ev.mask |= std::uint64_t{1} << labeled[order[i]].row;
            ++ev.count;
            ++i;
        }
        events.push_back(ev);
    }
    return events;
}

BootlegScore queryBootleg(std::span<const QueryEvent> events) {
    if (events.empty()) throw Error("no notes detected");
    BootlegScore score;
    for (std::size_t e = 0; e < events.size(); ++e)
        score.appendEvent(events[e].mask, std::uint16_t(std::min(events[e].count, 0xFFFF)), std::uint32_t(e));
    return score;
}

std::string analyzeSheetInto(const image::RgbImage& raster, const Config& cfg, SheetAnalysis& a) {
    a = SheetAnalysis{};
    auto stage = [&](const char* name, auto&& body) {
        a.failedStage = name;
        auto t0 = Clock::now();
        body();
        a.timings.emplace_back(name, secondsSince(t0));
    };
    try {
        stage("preprocess", [&] {
            a.resized = image::resizeMaxDim(image::toGrayscale(raster), cfg.maxDim);
            a.preprocessed = image::backgroundSubtract(a.resized, cfg.blurHalfWidth);
        });
        stage("barlines", [&] { a.lines = detectBarlines(a.preprocessed, cfg); });
        stage("noteheads", [&] { a.noteheads = detectNoteheads(a.preprocessed, cfg); });
        stage("staffFeatures", [&] { a.tensor = staffFeatureTensor(a.preprocessed, cfg, &a.beamless); });
        stage("projection", [&] {
            a.window = contextWindow(cfg, a.noteheads.tmpl);
            for (const NoteheadDetection& nh : a.noteheads.noteheads) {
                a.estimates.push_back(estimateLocalStaff(a.tensor, nh, a.window));
                if (auto lab = labelNotehead(nh, a.estimates.back(), a.lines)) a.labeled.push_back(*lab);
                else ++a.discarded;
            }
            a.events = groupSimultaneous(a.labeled, cfg.simultaneityTol);
            a.score = queryBootleg(a.events);
        });
    } catch (const std::exception& e) {
        return e.what();
    }
    a.failedStage.clear();
    return {};
}

SheetAnalysis analyzeSheet(const image::RgbImage& raster, const Config& cfg) {
    SheetAnalysis a;
    if (std::string err = analyzeSheetInto(raster, cfg, a); !err.empty()) throw Error(err);
    return a;
}

}  // namespace bootleg::sheet
