#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bootleg/config.hpp"
#include "bootleg/midi.hpp"
#include "bootleg/score.hpp"

namespace bootleg::align {

/// Q x R, row-major; every entry is in [-62, 0].
struct CostMatrix {
    int queryLen = 0;
    int refLen = 0;
    std::vector<double> values;

    double at(int q, int r) const { return values[std::size_t(q) * refLen + r]; }
};

struct Step {
    int dq;
    int dr;
    double weight;
};

/// Backtrace preference order: diagonal, then query skip, then reference skip.
struct StepPattern {
    std::vector<Step> steps;

    static StepPattern standard(double diagonal = 1.0, double skipRef = 1.0, double skipQuery = 2.0);
    static StepPattern fromConfig(const Config& cfg);
};

struct Interval {
    double start = 0;
    double end = 0;
    double length() const { return end - start; }
};

/// Wall-clock seconds per named stage, in insertion order.
using StageTimings = std::vector<std::pair<std::string, double>>;

struct AlignmentResult {
    int refStart = 0;
    int refEnd = 0;
    std::vector<std::pair<int, int>> path;  // (q, r)
    double totalCost = 0;
    Interval interval;
    StageTimings timings;
};

/// -|qMask & rMask| / max(qCount, rCount), or 0 when both counts are 0.
double columnCost(std::uint64_t qMask, std::uint64_t rMask, int qCount, int rCount);

CostMatrix costMatrix(const BootlegScore& query, const BootlegScore& reference);

/**
 * Subsequence DTW with free start and end in the reference.
 *
 * D(0, r) = C(0, r); D(q, r) = min over steps of D(q-dq, r-dr) + w * C(q, r).
 * The end column is the smallest r minimizing D(Q-1, r). Fills path,
 * refStart/refEnd and totalCost; the interval is left untouched.
 */
AlignmentResult subsequenceDTW(const CostMatrix& costs, const StepPattern& pattern = StepPattern::standard());

/// Maps matched reference columns to seconds. With extendToNextOnset the
/// interval runs to the onset after the last matched event (if any).
Interval mapToTime(const AlignmentResult& result, std::span<const std::uint32_t> eventIndex,
                   std::span<const midi::NoteEvent> events, bool extendToNextOnset = true);

AlignmentResult align(const BootlegScore& query, const BootlegScore& reference,
                      std::span<const midi::NoteEvent> events, const Config& cfg = {});

}  // namespace bootleg::align
