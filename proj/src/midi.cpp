#include "bootleg/midi.hpp"

#include <algorithm>
#include <string>

namespace bootleg::midi {

namespace {

constexpr double kDefaultUsPerQuarter = 500000.0;

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

    bool done() const { return pos_ >= bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint8_t peek() {
        need(1);
        return bytes_[pos_];
    }
    std::uint32_t be(int n) {
        need(std::size_t(n));
        std::uint32_t v = 0;
        for (int i = 0; i < n; ++i) v = (v << 8) | bytes_[pos_++];
        return v;
    }
    std::uint32_t vlq() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            std::uint8_t b = u8();
            v = (v << 7) | (b & 0x7F);
            if (!(b & 0x80)) return v;
        }
        throw ParseError(what_ + ": variable-length quantity longer than 4 bytes");
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ParseError(what_ + ": truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::string what_;
};

struct TickOnset {
    std::uint64_t tick;
    int pitch;
    int track;
};

struct TempoChange {
    std::uint64_t tick;
    double usPerQuarter;
};

void readTrack(std::span<const std::uint8_t> body, int track, std::vector<TickOnset>& onsets,
               std::vector<TempoChange>& tempos) {
    Reader in(body, "track " + std::to_string(track));
    std::uint64_t tick = 0;
    std::uint8_t running = 0;
    while (!in.done()) {
        tick += in.vlq();
        std::uint8_t status = in.peek();
        if (status & 0x80) {
            in.u8();
        } else {
            if (!running) throw ParseError("track " + std::to_string(track) + ": data byte without running status");
            status = running;
        }

        if (status == 0xFF) {
            std::uint8_t type = in.u8();
            auto data = in.take(in.vlq());
            if (type == 0x51) {
                if (data.size() != 3) throw ParseError("set-tempo meta event must carry 3 bytes");
                std::uint32_t us = (std::uint32_t(data[0]) << 16) | (std::uint32_t(data[1]) << 8) | data[2];
                if (us == 0) throw ParseError("set-tempo of zero microseconds per quarter");
                tempos.push_back({tick, double(us)});
            } else if (type == 0x2F) {
                break;
            }
            running = 0;
            continue;
        }
        if (status == 0xF0 || status == 0xF7) {
            in.take(in.vlq());
            running = 0;
            continue;
        }
        if (status >= 0xF0) throw ParseError("unexpected system message in track data");

        running = status;
        std::uint8_t kind = status & 0xF0;
        std::uint8_t d1 = in.u8();
        if (kind == 0xC0 || kind == 0xD0) continue;
        std::uint8_t d2 = in.u8();
        if (kind == 0x90 && d2 > 0) onsets.push_back({tick, d1 & 0x7F, track});
    }
}

}  // namespace

std::vector<NoteOnset> parseMidi(std::span<const std::uint8_t> bytes) {
    Reader in(bytes, "SMF");
    if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "MThd"))
        throw ParseError("MThd missing: not a Standard MIDI File");
    in.take(4);
    std::uint32_t headerLen = in.be(4);
    if (headerLen < 6) throw ParseError("MThd chunk shorter than 6 bytes");
    auto header = in.take(headerLen);
    int format = (header[0] << 8) | header[1];
    int ntracks = (header[2] << 8) | header[3];
    int division = (header[4] << 8) | header[5];
    if (format > 1) throw ParseError("unsupported SMF format " + std::to_string(format));
    if (division & 0x8000) throw ParseError("SMPTE time division is unsupported");
    if (division == 0) throw ParseError("zero ticks per quarter note");

    std::vector<TickOnset> ticks;
    std::vector<TempoChange> tempos;
    int track = 0;
    while (track < ntracks) {
        if (in.remaining() < 8) throw ParseError("truncated chunk: expected " + std::to_string(ntracks) + " tracks, found " + std::to_string(track));
        auto id = in.take(4);
        std::uint32_t len = in.be(4);
        if (in.remaining() < len) throw ParseError("truncated chunk: track " + std::to_string(track) + " declares " + std::to_string(len) + " bytes");
        auto body = in.take(len);
        if (!std::equal(id.begin(), id.end(), "MTrk")) continue;  // unknown chunk types are skipped
        readTrack(body, track, ticks, tempos);
        ++track;
    }

    std::stable_sort(tempos.begin(), tempos.end(), [](auto& a, auto& b) { return a.tick < b.tick; });
    // Seconds at each tempo boundary.
    std::vector<double> boundarySec(tempos.size());
    double sec = 0.0, us = kDefaultUsPerQuarter;
    std::uint64_t lastTick = 0;
    for (std::size_t i = 0; i < tempos.size(); ++i) {
        sec += double(tempos[i].tick - lastTick) * us / (1e6 * division);
        boundarySec[i] = sec;
        lastTick = tempos[i].tick;
        us = tempos[i].usPerQuarter;
    }
    auto toSeconds = [&](std::uint64_t t) {
        auto it = std::upper_bound(tempos.begin(), tempos.end(), t, [](std::uint64_t v, const TempoChange& c) { return v < c.tick; });
        if (it == tempos.begin()) return double(t) * kDefaultUsPerQuarter / (1e6 * division);
        std::size_t i = std::size_t(it - tempos.begin()) - 1;
        return boundarySec[i] + double(t - tempos[i].tick) * tempos[i].usPerQuarter / (1e6 * division);
    };

    std::vector<NoteOnset> out;
    out.reserve(ticks.size());
    for (const TickOnset& t : ticks) out.push_back({toSeconds(t.tick), t.pitch, t.track});
    std::stable_sort(out.begin(), out.end(), [](const NoteOnset& a, const NoteOnset& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.pitch != b.pitch) return a.pitch < b.pitch;
        return a.track < b.track;
    });
    return out;
}

std::vector<NoteEvent> clusterOnsets(std::span<const NoteOnset> onsets, double tol) {
    std::vector<NoteEvent> events;
    std::size_t i = 0;
    while (i < onsets.size()) {
        NoteEvent ev;
        ev.time = onsets[i].time;
        do {
            ev.pitches.insert(onsets[i].pitch);
            ++ev.onsetCount;
            ++i;
        } while (i < onsets.size() && onsets[i].time < ev.time + tol);
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace bootleg::midi
