#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "bootleg/image.hpp"

namespace bootleg::midi {

class ParseError : public Error {
public:
    using Error::Error;
};

struct NoteOnset {
    double time = 0;  // seconds
    int pitch = 0;
    int track = 0;
};

/// Onsets that sound together; `time` is the earliest member's onset.
struct NoteEvent {
    double time = 0;
    std::set<int> pitches;
    int onsetCount = 0;
};

/**
 * Decode a format 0/1 Standard MIDI File with PPQN division.
 *
 * Only Note-On messages with nonzero velocity are reported. Tempo changes
 * from any track feed one global tempo map (120 BPM until the first
 * Set-Tempo). Results are sorted by time, then pitch.
 */
std::vector<NoteOnset> parseMidi(std::span<const std::uint8_t> bytes);

/// Anchored grouping: an event starting at t0 absorbs every onset with
/// time < t0 + tol. Input must be sorted by time.
std::vector<NoteEvent> clusterOnsets(std::span<const NoteOnset> onsets, double tol = 0.05);

}  // namespace bootleg::midi
