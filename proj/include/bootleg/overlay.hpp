#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bootleg/sheet.hpp"

namespace bootleg::overlay {

enum class Layer { NoteheadBoxes, ChordCenters, Beamless, BarlineBoxes, LineBands, StaffDots };

/// Layer names as used on the command line and in file names.
std::string_view layerName(Layer layer);
Layer parseLayer(std::string_view name);
std::vector<Layer> allLayers();

struct OverlaySpec {
    std::vector<Layer> layers = allLayers();

    /// Throws when no layer is requested.
    void validate() const;
};

/// Draws one layer over the resized grayscale image (pipeline coordinates).
image::RgbImage render(const sheet::SheetAnalysis& analysis, Layer layer);

/// Writes <dir>/<layerName>.png per requested layer; returns the paths written.
std::vector<std::string> writeOverlays(const sheet::SheetAnalysis& analysis, const OverlaySpec& spec,
                                       const std::string& dir);

}  // namespace bootleg::overlay
