#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bootleg {

/**
 * Every tunable of the system. Defaults assume photos resized to a 1000 px
 * maximum dimension, where the staff gap is roughly 12-25 px.
 */
struct Config {
    // preprocessing
    int maxDim = 1000;
    int blurHalfWidth = 50;

    // notehead detection
    int noteheadSeRadius = 5;
    double blobMinArea = 50;
    double blobMaxArea = 1000;
    int blobNumThresholds = 10;
    double blobMinDist = 10;
    int cropSize = 41;
    double templateDiameterTol = 1.25;  // vs. lower-quartile blob diameter
    double noteheadHeightMin = 0.5, noteheadHeightMax = 1.5;
    double noteheadWidthMin = 0.5, noteheadWidthMax = 1.5;
    double noteheadAspectMin = 0.5, noteheadAspectMax = 2.0;
    double noteheadAreaMin = 0.5, noteheadAreaMax = 2.0;
    double chordAreaMin = 1.8;
    double chordWidthMax = 2.0;

    // staff line features
    int horizSeWidth = 41;
    int beamThicknessThresh = 5;
    int combSpacingMin = 10;
    int combSpacingMax = 30;
    int combSpacingStep = 1;
    int impulseHeight = 2;

    // bar lines
    int vertSeHeight = 41;
    int barlineMaxWidth = 12;

    // projection
    int contextHalfWidth = 60;
    double contextHeightFactor = 3.0;
    double simultaneityTol = 1.0;

    // MIDI
    double onsetClusterTol = 0.05;

    // alignment
    double dtwWeightDiagonal = 1.0;   // step (1,1)
    double dtwWeightSkipRef = 1.0;    // step (1,2)
    double dtwWeightSkipQuery = 2.0;  // step (2,1)
    bool extendToNextOnset = true;

    // evaluation
    int baselineMeasures = 4;
    unsigned long long seed = 0;

    std::vector<int> combSpacings() const;

    /// Throws bootleg::Error naming the offending key.
    void validate() const;

    std::string toJson() const;
    static Config fromJson(std::string_view text);

    /// Applies "key=value" with the value parsed as JSON.
    void set(std::string_view assignment);

    /// FNV-1a 64 of the canonical JSON dump, hex.
    std::string hash() const;
};

}  // namespace bootleg
