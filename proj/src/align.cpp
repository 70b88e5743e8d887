#include "bootleg/align.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <limits>

namespace bootleg::align {

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

StepPattern StepPattern::standard(double diagonal, double skipRef, double skipQuery) {
    return {{{1, 1, diagonal}, {2, 1, skipQuery}, {1, 2, skipRef}}};
}

StepPattern StepPattern::fromConfig(const Config& cfg) {
    return standard(cfg.dtwWeightDiagonal, cfg.dtwWeightSkipRef, cfg.dtwWeightSkipQuery);
}

double columnCost(std::uint64_t qMask, std::uint64_t rMask, int qCount, int rCount) {
    const int norm = std::max(qCount, rCount);
    if (norm == 0) return 0.0;
    return -double(std::popcount(qMask & rMask)) / norm;
}

CostMatrix costMatrix(const BootlegScore& query, const BootlegScore& reference) {
    CostMatrix m{int(query.width()), int(reference.width()), {}};
    m.values.resize(query.width() * reference.width());
    for (int q = 0; q < m.queryLen; ++q) {
        double* row = m.values.data() + std::size_t(q) * m.refLen;
        const std::uint64_t qm = query.columns[q];
        const int qc = query.counts[q];
        for (int r = 0; r < m.refLen; ++r) row[r] = columnCost(qm, reference.columns[r], qc, reference.counts[r]);
    }
    return m;
}

AlignmentResult subsequenceDTW(const CostMatrix& costs, const StepPattern& pattern) {
    const int Q = costs.queryLen, R = costs.refLen;
    if (Q < 1 || R < 1) throw Error("alignment needs a nonempty query and reference");
    if (Q > R) throw Error("query longer than reference");
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> D(std::size_t(Q) * R, kInf);
    std::vector<std::int8_t> from(std::size_t(Q) * R, -1);
    for (int r = 0; r < R; ++r) D[std::size_t(r)] = costs.at(0, r);
    for (int q = 1; q < Q; ++q) {
        for (int r = 0; r < R; ++r) {
            double best = kInf;
            int arg = -1;
            for (std::size_t s = 0; s < pattern.steps.size(); ++s) {
                const Step& st = pattern.steps[s];
                const int pq = q - st.dq, pr = r - st.dr;
                if (pq < 0 || pr < 0) continue;
                const double prev = D[std::size_t(pq) * R + pr];
                if (prev == kInf) continue;
                // Strict comparison keeps the earlier (preferred) step on ties.
                const double cand = prev + st.weight * costs.at(q, r);
                if (cand < best) {
                    best = cand;
                    arg = int(s);
                }
            }
            D[std::size_t(q) * R + r] = best;
            from[std::size_t(q) * R + r] = std::int8_t(arg);
        }
    }

    int end = -1;
    double bestEnd = kInf;
    for (int r = 0; r < R; ++r) {
        const double v = D[std::size_t(Q - 1) * R + r];
        if (v < bestEnd) {
            bestEnd = v;
            end = r;
        }
    }
    if (end < 0) throw Error("no admissible warping path");

    AlignmentResult res;
    int q = Q - 1, r = end;
    res.path.emplace_back(q, r);
    while (q > 0) {
        const Step& st = pattern.steps[std::size_t(from[std::size_t(q) * R + r])];
        q -= st.dq;
        r -= st.dr;
        res.path.emplace_back(q, r);
    }
    std::reverse(res.path.begin(), res.path.end());
    res.refStart = res.path.front().second;
    res.refEnd = res.path.back().second;
    res.totalCost = bestEnd;
    return res;
}

Interval mapToTime(const AlignmentResult& result, std::span<const std::uint32_t> eventIndex,
                   std::span<const midi::NoteEvent> events, bool extendToNextOnset) {
    if (result.refStart < 0 || result.refEnd < result.refStart || std::size_t(result.refEnd) >= eventIndex.size())
        throw Error("alignment indices outside the reference");
    std::int64_t first = -1, last = -1;
    for (int c = result.refStart; c <= result.refEnd; ++c) {
        if (eventIndex[std::size_t(c)] == BootlegScore::kFiller) continue;
        if (first < 0) first = eventIndex[std::size_t(c)];
        last = eventIndex[std::size_t(c)];
    }
    if (first < 0) throw Error("degenerate match: matched range contains only filler columns");
    if (std::size_t(last) >= events.size()) throw Error("reference event index outside the event list");
    Interval iv{events[std::size_t(first)].time, events[std::size_t(last)].time};
    if (extendToNextOnset && std::size_t(last) + 1 < events.size()) iv.end = events[std::size_t(last) + 1].time;
    return iv;
}

AlignmentResult align(const BootlegScore& query, const BootlegScore& reference,
                      std::span<const midi::NoteEvent> events, const Config& cfg) {
    auto t0 = Clock::now();
    CostMatrix costs = costMatrix(query, reference);
    const double tCost = secondsSince(t0);

    t0 = Clock::now();
    AlignmentResult res = subsequenceDTW(costs, StepPattern::fromConfig(cfg));
    const double tDtw = secondsSince(t0);

    t0 = Clock::now();
    res.interval = mapToTime(res, reference.eventIndex, events, cfg.extendToNextOnset);
    res.timings = {{"costMatrix", tCost}, {"subsequenceDTW", tDtw}, {"mapToTime", secondsSince(t0)}};
    return res;
}

}  // namespace bootleg::align
