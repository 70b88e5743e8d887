#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bootleg/midi.hpp"

namespace bootleg {

/**
 * Diatonic staff coordinate shared by both modalities.
 *
 * row = 7 * octave + letter (C=0 ... B=6), so rows 0..61 run from C0 to A8
 * and every line or space of the grand staff is one row. Treble lines
 * E4 G4 B4 D5 F5 sit at rows 30..38 (even), bass lines G2 B2 D3 F3 A3 at
 * rows 18..26.
 */
namespace staff {

constexpr int kNumRows = 62;
constexpr int kTrebleTopLineRow = 38;  // F5
constexpr int kBassTopLineRow = 26;    // A3

enum class Letter { C = 0, D, E, F, G, A, B };

constexpr int rowOf(Letter letter, int octave) { return 7 * octave + int(letter); }

struct Spelling {
    Letter letter;
    int octave;
    int accidental;  // -1 flat, 0 natural, +1 sharp
};

/// Spellings without double accidentals, sorted by row.
std::vector<Spelling> spellings(int pitch);

/// Rows for every spelling of `pitch` that lands inside 0..61.
std::vector<int> pitchToRows(int pitch);

/// 0 = top staff line, +1 per half space downward.
inline int rowFromStaffPosition(bool upperStaff, int staffPosition) {
    return (upperStaff ? kTrebleTopLineRow : kBassTopLineRow) - staffPosition;
}

}  // namespace staff

struct BootlegScore {
    static constexpr int kNumRows = staff::kNumRows;
    static constexpr std::uint32_t kFiller = std::numeric_limits<std::uint32_t>::max();

    std::vector<std::uint64_t> columns;      // bit i = row i
    std::vector<std::uint16_t> counts;       // notes behind each column
    std::vector<std::uint32_t> eventIndex;   // kFiller for filler columns

    std::size_t width() const { return columns.size(); }
    bool isFiller(std::size_t c) const { return eventIndex[c] == kFiller; }

    /// Appends [col, col, filler].
    void appendEvent(std::uint64_t mask, std::uint16_t count, std::uint32_t event);

    /// Throws if any structural invariant is broken.
    void validate() const;

    bool operator==(const BootlegScore&) const = default;
};

std::uint64_t rowMask(std::span<const int> rows);
std::vector<int> maskRows(std::uint64_t mask);

/// Projects each event to the union of its pitches' rows, laid out as
/// [col, col, filler] per event (3N columns).
BootlegScore midiBootleg(std::span<const midi::NoteEvent> events);

/**
 * BTLG binary format, all integers little-endian:
 *   "BTLG" | u8 version (1) | u32 columns |
 *   per column: u64 mask (bits 62-63 zero) | u16 count | u32 event index
 */
std::vector<std::uint8_t> serialize(const BootlegScore& score);
BootlegScore deserialize(std::span<const std::uint8_t> bytes);

/// Debug dump: one object per column listing its rows.
std::string toJson(const BootlegScore& score);

}  // namespace bootleg
