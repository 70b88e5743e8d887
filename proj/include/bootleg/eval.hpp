#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bootleg/align.hpp"
#include "bootleg/config.hpp"

namespace bootleg::eval {

using align::Interval;

/// Downbeat of measure m is downbeats[m - 1]; `end` closes the last measure.
struct MeasureMap {
    std::vector<double> downbeats;
    double end = 0;

    int measureCount() const { return int(downbeats.size()); }
    /// Valid for 1 <= m <= measureCount() + 1 (the latter is `end`).
    double downbeat(int m) const;
    void validate() const;

    /// {"downbeats": [...], "end": t}
    static MeasureMap fromJson(std::string_view text);
    std::string toJson() const;
};

struct QueryAnnotation {
    std::string imageId;
    std::string scoreId;
    int firstMeasure = 0;
    int lastMeasure = 0;
    std::vector<std::pair<int, int>> alternateRanges;  // duplicate passages
    std::string split = "test";
    std::string image;  // optional explicit file name
    std::vector<Interval> acceptableIntervals;
};

struct Metrics {
    double precision = 0;
    double recall = 0;
    double fMeasure = 0;
};

/// Raw durations behind one query's metrics.
struct QueryOutcome {
    double hypDuration = 0;
    double truthDuration = 0;
    double overlap = 0;
};

double overlap(const Interval& a, const Interval& b);

Metrics fromPR(double precision, double recall);

/// Scores against the truth interval with the largest overlap.
Metrics intervalMetrics(const Interval& hyp, std::span<const Interval> truthSet, QueryOutcome* outcome = nullptr);

struct Aggregate {
    Metrics micro;  // pooled durations
    Metrics macro;  // mean of per-query P, R and F
    std::size_t queries = 0;
};

Aggregate aggregate(std::span<const QueryOutcome> perQuery);

/// Interval spanning nMeasures whole measures, start measure uniform over
/// the admissible range.
Interval randomBaseline(const MeasureMap& map, int nMeasures, std::uint64_t seed);

/// Uniform integer in [lo, hi] without modulo bias; platform independent.
std::uint64_t uniformIndex(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi);

/// Fills acceptableIntervals from the measure ranges.
void resolveIntervals(QueryAnnotation& a, const MeasureMap& map);

/// JSON array of {imageId, scoreId, measures: [first, last], alternates?, split?, image?}.
std::vector<QueryAnnotation> parseAnnotations(std::string_view text);

struct QueryReport {
    QueryAnnotation annotation;
    Interval hypothesis;
    QueryOutcome outcome;
    Metrics metrics;
    std::optional<Interval> baseline;
    QueryOutcome baselineOutcome;
    Metrics baselineMetrics;
    std::string error;
    align::StageTimings timings;
};

struct DatasetReport {
    std::string configHash;
    std::vector<QueryReport> queries;  // sorted by imageId
    std::vector<std::pair<std::string, Aggregate>> pipeline;  // "all", "test", "train"
    std::vector<std::pair<std::string, Aggregate>> baseline;
    int baselineMeasures = 0;
    std::vector<std::string> failures;  // imageIds with zero overlap
    std::vector<std::pair<std::string, double>> meanStageSeconds;
};

struct DatasetOptions {
    std::filesystem::path annotations;
    std::filesystem::path midiDir;
    std::filesystem::path imageDir;
    bool randomBaseline = false;
    int workers = 1;
    /// Use the ground truth as the hypothesis (harness self-check).
    bool oracleHypotheses = false;
};

/// Runs the whole system per annotated image. Per-query failures become
/// zero-duration hypotheses rather than aborting the run.
DatasetReport evaluateDataset(const DatasetOptions& opts, const Config& cfg);

/// Per-split aggregate of reports.
std::vector<std::pair<std::string, Aggregate>> aggregateBySplit(std::span<const QueryReport> reports, bool useBaseline);

std::string reportJson(const DatasetReport& report, bool includeTimings = true);

/// Human-readable P / R / F table.
std::string reportTable(const DatasetReport& report);

}  // namespace bootleg::eval
