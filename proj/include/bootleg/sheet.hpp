#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bootleg/align.hpp"
#include "bootleg/config.hpp"
#include "bootleg/image.hpp"
#include "bootleg/score.hpp"

namespace bootleg::sheet {

struct NoteheadDetection {
    image::BBox bbox;
    double x = 0;  // column
    double y = 0;  // row
    bool fromChordSplit = false;
};

/// Mean appearance of a filled notehead in the current image.
struct NoteheadTemplate {
    int height = 0;
    int width = 0;
    int area = 0;
    image::GrayImage patch;
};

/// One response plane per comb spacing, each the size of the source image.
struct StaffFeatureTensor {
    int height = 0;
    int width = 0;
    std::vector<int> spacings;                // ascending
    std::vector<std::vector<float>> planes;   // planes[k][r * width + c]

    float at(int r, int c, int k) const { return planes[std::size_t(k)][std::size_t(r) * width + c]; }
    std::size_t combCount() const { return spacings.size(); }
};

struct MusicLine {
    int top = 0;
    int bottom = 0;
    std::vector<image::BBox> barlines;  // left to right
};

struct LocalStaffEstimate {
    double topLineY = 0;
    int spacing = 0;
    int combIndex = 0;
    double score = 0;
    double middleY() const { return topLineY + 2.0 * spacing; }
};

enum class Staff { Upper, Lower };

struct LabeledNotehead {
    NoteheadDetection detection;
    int lineIndex = 0;
    Staff staff = Staff::Upper;
    int staffPosition = 0;  // half spaces below the top staff line
    int row = 0;
    int spacing = 0;
};

struct QueryEvent {
    int lineIndex = 0;
    double x = 0;  // anchor notehead column
    std::uint64_t mask = 0;
    int count = 0;
};

/// Rectangle summed around each notehead during local staff estimation.
struct ContextWindow {
    int halfHeight = 0;
    int halfWidth = 0;
};

struct NoteheadResult {
    image::GrayImage opened;
    std::vector<image::Keypoint> keypoints;
    NoteheadTemplate tmpl;
    std::vector<NoteheadDetection> noteheads;
};

/// Grayscale, downscale to cfg.maxDim, background removal. Output ink = high.
image::GrayImage preprocess(const image::RgbImage& raster, const Config& cfg);

/**
 * Filled-notehead detection with a template estimated from the image:
 * circular opening, blob keypoints -> averaged template, Otsu candidates
 * filtered by template geometry, and chord blocks split with k-means.
 * Throws "template adaptation failed" when no keypoints are found.
 */
NoteheadResult detectNoteheads(const image::GrayImage& img, const Config& cfg);

/// Zeroes every foreground pixel whose vertical run is thicker than the threshold.
image::GrayImage removeBeams(const image::GrayImage& horiz, int thicknessThresh);

/// One column, 4*spacing + impulseHeight tall, five bands of weight
/// 1/(5*impulseHeight). Anchored on the first row of the middle band.
image::Kernel combFilter(int spacing, int impulseHeight = 2);

/// If `beamless` is given it receives the image the combs were run on.
StaffFeatureTensor staffFeatureTensor(const image::GrayImage& img, const Config& cfg,
                                      image::GrayImage* beamless = nullptr);

/// Music lines (systems) top to bottom. Throws "no music lines found".
std::vector<MusicLine> detectBarlines(const image::GrayImage& img, const Config& cfg);

ContextWindow contextWindow(const Config& cfg, const NoteheadTemplate& tmpl);

/// Best (row, comb) after summing responses across the window's columns.
/// Ties go to the smaller comb, then the smaller row.
LocalStaffEstimate estimateLocalStaff(const StaffFeatureTensor& tensor, const NoteheadDetection& notehead,
                                      const ContextWindow& window);

/// Empty when the estimated staff falls outside every music line or the
/// row leaves 0..61.
std::optional<LabeledNotehead> labelNotehead(const NoteheadDetection& notehead, const LocalStaffEstimate& est,
                                             std::span<const MusicLine> lines);

/// Line by line, left to right; a group anchored at x0 takes noteheads with
/// x < x0 + simultaneityTol * spacing.
std::vector<QueryEvent> groupSimultaneous(std::span<const LabeledNotehead> labeled, double simultaneityTol);

BootlegScore queryBootleg(std::span<const QueryEvent> events);

/// Every intermediate of one image, for overlays and diagnostics.
struct SheetAnalysis {
    image::GrayImage resized;       // grayscale after resize, ink = dark
    image::GrayImage preprocessed;  // ink = high
    NoteheadResult noteheads;
    image::GrayImage beamless;
    StaffFeatureTensor tensor;
    std::vector<MusicLine> lines;
    ContextWindow window;
    std::vector<LocalStaffEstimate> estimates;  // parallel to noteheads.noteheads
    std::vector<LabeledNotehead> labeled;
    int discarded = 0;
    std::vector<QueryEvent> events;
    BootlegScore score;
    align::StageTimings timings;
    std::string failedStage;  // empty on success
};

SheetAnalysis analyzeSheet(const image::RgbImage& raster, const Config& cfg);

/// As analyzeSheet, but stages completed before a failure stay in `out`.
/// Returns the failing stage's message, or an empty string on success.
std::string analyzeSheetInto(const image::RgbImage& raster, const Config& cfg, SheetAnalysis& out);

}  // namespace bootleg::sheet
