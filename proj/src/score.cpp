#include "bootleg/score.hpp"

#include <algorithm>
#include <bit>
#include "json.hpp"

namespace bootleg {

namespace staff {

std::vector<Spelling> spellings(int pitch) {
    const int pc = ((pitch % 12) + 12) % 12;
    const int oct = pitch / 12 - 1;
    using L = Letter;
    std::vector<Spelling> out;
    switch (pc) {
    case 0: out = {{L::B, oct - 1, +1}, {L::C, oct, 0}}; break;
    case 1: out = {{L::C, oct, +1}, {L::D, oct, -1}}; break;
    case 2: out = {{L::D, oct, 0}}; break;
    case 3: out = {{L::D, oct, +1}, {L::E, oct, -1}}; break;
    case 4: out = {{L::E, oct, 0}, {L::F, oct, -1}}; break;
    case 5: out = {{L::E, oct, +1}, {L::F, oct, 0}}; break;
    case 6: out = {{L::F, oct, +1}, {L::G, oct, -1}}; break;
    case 7: out = {{L::G, oct, 0}}; break;
    case 8: out = {{L::G, oct, +1}, {L::A, oct, -1}}; break;
    case 9: out = {{L::A, oct, 0}}; break;
    case 10: out = {{L::A, oct, +1}, {L::B, oct, -1}}; break;
    case 11: out = {{L::B, oct, 0}, {L::C, oct + 1, -1}}; break;
    }
    return out;
}

std::vector<int> pitchToRows(int pitch) {
    std::vector<int> rows;
    for (const Spelling& s : spellings(pitch)) {
        int row = rowOf(s.letter, s.octave);
        if (row >= 0 && row < kNumRows) rows.push_back(row);
    }
    return rows;
}

}  // namespace staff

std::uint64_t rowMask(std::span<const int> rows) {
    std::uint64_t m = 0;
    for (int r : rows) {
        if (r < 0 || r >= BootlegScore::kNumRows) throw Error("row outside 0..61: " + std::to_string(r));
        m |= std::uint64_t{1} << r;
    }
    return m;
}

std::vector<int> maskRows(std::uint64_t mask) {
    std::vector<int> rows;
    while (mask) {
        rows.push_back(std::countr_zero(mask));
        mask &= mask - 1;
    }
    return rows;
}

void BootlegScore::appendEvent(std::uint64_t mask, std::uint16_t count, std::uint32_t event) {
    for (int i = 0; i < 2; ++i) {
        columns.push_back(mask);
        counts.push_back(count);
        eventIndex.push_back(event);
    }
    columns.push_back(0);
    counts.push_back(0);
    eventIndex.push_back(kFiller);
}

void BootlegScore::validate() const {
    if (columns.size() != counts.size() || columns.size() != eventIndex.size())
        throw Error("bootleg score column arrays differ in length");
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >> kNumRows) throw Error("bootleg column " + std::to_string(c) + " uses rows above 61");
        if (isFiller(c)) {
            if (columns[c] != 0 || counts[c] != 0)
                throw Error("filler column " + std::to_string(c) + " is not empty");
        } else if (columns[c] == 0 || counts[c] == 0) {
            throw Error("event column " + std::to_string(c) + " is empty");
        }
    }
}

BootlegScore midiBootleg(std::span<const midi::NoteEvent> events) {
    if (events.empty()) throw Error("cannot build a bootleg score from zero events");
    BootlegScore score;
    score.columns.reserve(3 * events.size());
    score.counts.reserve(3 * events.size());
    score.eventIndex.reserve(3 * events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        std::uint64_t mask = 0;
        for (int p : events[e].pitches) mask |= rowMask(staff::pitchToRows(p));
        auto count = std::uint16_t(std::min(events[e].onsetCount, 0xFFFF));
        score.appendEvent(mask, count, std::uint32_t(e));
    }
    return score;
}

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kColumnBytes = 8 + 2 + 4;

template <typename T>
void putLE(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(std::uint8_t(std::uint64_t(v) >> (8 * i)));
}

template <typename T>
T getLE(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(in[at + i]) << (8 * i);
    return T(v);
}

}  // namespace

std::vector<std::uint8_t> serialize(const BootlegScore& score) {
    // Structural checks only: the format can carry any column content.
    if (score.columns.size() != score.counts.size() || score.columns.size() != score.eventIndex.size())
        throw Error("bootleg score column arrays differ in length");
    for (std::size_t c = 0; c < score.width(); ++c)
        if (score.columns[c] >> BootlegScore::kNumRows)
            throw Error("bootleg column " + std::to_string(c) + " uses rows above 61");
    std::vector<std::uint8_t> out = {'B', 'T', 'L', 'G', kVersion};
    out.reserve(9 + kColumnBytes * score.width());
    putLE<std::uint32_t>(out, std::uint32_t(score.width()));
    for (std::size_t c = 0; c < score.width(); ++c) {
        putLE<std::uint64_t>(out, score.columns[c]);
        putLE<std::uint16_t>(out, score.counts[c]);
        putLE<std::uint32_t>(out, score.eventIndex[c]);
    }
    return out;
}

BootlegScore deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "BTLG"))
        throw Error("BTLG magic missing");
    if (bytes.size() < 9) throw Error("BTLG header truncated");
    if (bytes[4] != kVersion) throw Error("unsupported BTLG version " + std::to_string(bytes[4]));
    const std::uint32_t n = getLE<std::uint32_t>(bytes, 5);
    if (bytes.size() != 9 + kColumnBytes * n)
        throw Error("BTLG truncated: header declares " + std::to_string(n) + " columns, payload is " +
                    std::to_string(bytes.size()) + " bytes");
    BootlegScore score;
    score.columns.resize(n);
    score.counts.resize(n);
    score.eventIndex.resize(n);
    for (std::uint32_t c = 0; c < n; ++c) {
        std::size_t at = 9 + kColumnBytes * c;
        score.columns[c] = getLE<std::uint64_t>(bytes, at);
        score.counts[c] = getLE<std::uint16_t>(bytes, at + 8);
        score.eventIndex[c] = getLE<std::uint32_t>(bytes, at + 10);
        if (score.columns[c] >> BootlegScore::kNumRows)
            throw Error("BTLG column " + std::to_string(c) + " sets reserved mask bits 62-63");
    }
    return score;
}

std::string toJson(const BootlegScore& score) {
    nlohmann::json cols = nlohmann::json::array();
    for (std::size_t c = 0; c < score.width(); ++c) {
        nlohmann::json col;
        col["rows"] = maskRows(score.columns[c]);
        col["count"] = score.counts[c];
        col["event"] = score.isFiller(c) ? nlohmann::json(nullptr) : nlohmann::json(score.eventIndex[c]);
        cols.push_back(std::move(col));
    }
    nlohmann::json j;
    j["numRows"] = BootlegScore::kNumRows;
    j["columns"] = std::move(cols);
    return j.dump(1);
}

}  // namespace bootleg
