#include "bootleg/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "bootleg/io.hpp"
#include "bootleg/midi.hpp"
#include "bootleg/score.hpp"
#include "bootleg/sheet.hpp"

namespace bootleg::eval {

using nlohmann::ordered_json;

double MeasureMap::downbeat(int m) const {
    if (m < 1 || m > measureCount() + 1) throw Error("measure " + std::to_string(m) + " out of range");
    return m == measureCount() + 1 ? end : downbeats[std::size_t(m - 1)];
}

void MeasureMap::validate() const {
    if (downbeats.empty()) throw Error("measure map has no measures");
    for (std::size_t i = 1; i < downbeats.size(); ++i)
        if (!(downbeats[i] > downbeats[i - 1])) throw Error("measure map downbeats must be strictly increasing");
    if (!(end > downbeats.back())) throw Error("measure map end must follow the last downbeat");
}

MeasureMap MeasureMap::fromJson(std::string_view text) {
    MeasureMap map;
    try {
        const auto j = nlohmann::json::parse(text);
        map.downbeats = j.at("downbeats").get<std::vector<double>>();
        map.end = j.at("end").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad measure map: ") + e.what());
    }
    map.validate();
    return map;
}

std::string MeasureMap::toJson() const {
    ordered_json j;
    j["downbeats"] = downbeats;
    j["end"] = end;
    return j.dump() + "\n";
}

double overlap(const Interval& a, const Interval& b) {
    return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

Metrics fromPR(double precision, double recall) {
    Metrics m{precision, recall, 0.0};
    if (precision + recall > 0) m.fMeasure = 2 * precision * recall / (precision + recall);
    return m;
}

Metrics intervalMetrics(const Interval& hyp, std::span<const Interval> truthSet, QueryOutcome* outcome) {
    if (truthSet.empty()) throw Error("empty ground-truth interval set");
    if (hyp.end < hyp.start) throw Error("hypothesis interval ends before it starts");
    std::size_t best = 0;
    double bestOv = -1;
    for (std::size_t i = 0; i < truthSet.size(); ++i) {
        if (!(truthSet[i].end > truthSet[i].start)) throw Error("ground-truth interval must have positive length");
        const double ov = overlap(hyp, truthSet[i]);
        if (ov > bestOv) {
            bestOv = ov;
            best = i;
        }
    }
    QueryOutcome o{hyp.length(), truthSet[best].length(), bestOv};
    if (outcome) *outcome = o;
    return fromPR(o.hypDuration > 0 ? o.overlap / o.hypDuration : 0.0, o.overlap / o.truthDuration);
}

namespace {

Metrics outcomeMetrics(const QueryOutcome& o) {
    return fromPR(o.hypDuration > 0 ? o.overlap / o.hypDuration : 0.0,
                  o.truthDuration > 0 ? o.overlap / o.truthDuration : 0.0);
}

}  // namespace

Aggregate aggregate(std::span<const QueryOutcome> perQuery) {
    if (perQuery.empty()) throw Error("cannot aggregate zero queries");
    Aggregate a;
    a.queries = perQuery.size();
    double ov = 0, hyp = 0, truth = 0, sp = 0, sr = 0, sf = 0;
    for (const QueryOutcome& o : perQuery) {
        ov += o.overlap;
        hyp += o.hypDuration;
        truth += o.truthDuration;
        const Metrics m = outcomeMetrics(o);
        sp += m.precision;
        sr += m.recall;
        sf += m.fMeasure;
    }
    a.micro = fromPR(hyp > 0 ? ov / hyp : 0.0, truth > 0 ? ov / truth : 0.0);
    const double n = double(perQuery.size());
    a.macro = {sp / n, sr / n, sf / n};
    return a;
}

std::uint64_t uniformIndex(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) throw Error("uniformIndex: empty range");
    const std::uint64_t range = hi - lo + 1;  // 0 means the full 64-bit range
    if (range == 0) return rng();
    // Reject the low 2^64 mod range draws so every residue is equally likely.
    const std::uint64_t reject = (0 - range) % range;
    std::uint64_t x;
    do x = rng();
    while (x < reject);
    return lo + x % range;
}

Interval randomBaseline(const MeasureMap& map, int nMeasures, std::uint64_t seed) {
    if (nMeasures < 1) throw Error("baseline needs at least one measure");
    const int total = map.measureCount();
    if (total <= nMeasures)
        throw Error("piece too short for a " + std::to_string(nMeasures) + "-measure baseline (" +
                    std::to_string(total) + " measures)");
    std::mt19937_64 rng(seed);
    const int m = int(uniformIndex(rng, 1, std::uint64_t(total - nMeasures)));
    return {map.downbeat(m), map.downbeat(m + nMeasures)};
}

void resolveIntervals(QueryAnnotation& a, const MeasureMap& map) {
    a.acceptableIntervals.clear();
    auto add = [&](int first, int last) {
        if (first < 1 || last < first || last > map.measureCount())
            throw Error(a.imageId + ": measure range " + std::to_string(first) + "-" + std::to_string(last) +
                        " outside 1-" + std::to_string(map.measureCount()));
        a.acceptableIntervals.push_back({map.downbeat(first), map.downbeat(last + 1)});
    };
    add(a.firstMeasure, a.lastMeasure);
    for (auto [f, l] : a.alternateRanges) add(f, l);
}

std::vector<QueryAnnotation> parseAnnotations(std::string_view text) {
    std::vector<QueryAnnotation> out;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_array()) throw Error("annotations must be a JSON array");
        for (const auto& e : j) {
            QueryAnnotation a;
            a.imageId = e.at("imageId").get<std::string>();
            a.scoreId = e.at("scoreId").get<std::string>();
            const auto range = e.at("measures").get<std::vector<int>>();
            if (range.size() != 2) throw Error(a.imageId + ": measures must be [first, last]");
            a.firstMeasure = range[0];
            a.lastMeasure = range[1];
            if (a.firstMeasure < 1 || a.lastMeasure < a.firstMeasure)
                throw Error(a.imageId + ": measure range must satisfy 1 <= first <= last");
            if (e.contains("alternates"))
                for (const auto& alt : e.at("alternates")) {
                    const auto r = alt.get<std::vector<int>>();
                    if (r.size() != 2 || r[0] < 1 || r[1] < r[0]) throw Error(a.imageId + ": bad alternate range");
                    a.alternateRanges.emplace_back(r[0], r[1]);
                }
            if (e.contains("split")) a.split = e.at("split").get<std::string>();
            if (a.split != "train" && a.split != "test") throw Error(a.imageId + ": split must be train or test");
            if (e.contains("image")) a.image = e.at("image").get<std::string>();
            out.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad annotations: ") + e.what());
    }
    return out;
}

namespace {

struct ScoreData {
    std::vector<midi::NoteEvent> events;
    BootlegScore reference;
    MeasureMap measures;
    std::string error;
};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ScoreData loadScore(const std::filesystem::path& midiDir, const std::string& scoreId, const Config& cfg) {
    ScoreData d;
    try {
        d.measures = MeasureMap::fromJson(io::readText(midiDir / (scoreId + ".measures.json")));
        d.events = midi::clusterOnsets(midi::parseMidi(io::readFile(midiDir / (scoreId + ".mid"))), cfg.onsetClusterTol);
        d.reference = midiBootleg(d.events);
    } catch (const std::exception& e) {
        d.error = scoreId + ": " + e.what();
    }
    return d;
}

std::filesystem::path imagePath(const std::filesystem::path& dir, const QueryAnnotation& a) {
    if (!a.image.empty()) return dir / a.image;
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
        auto p = dir / (a.imageId + ext);
        if (std::filesystem::exists(p)) return p;
    }
    throw Error("image not found for " + a.imageId);
}

QueryReport evaluateOne(const QueryAnnotation& ann, const ScoreData* score, const DatasetOptions& opts,
                        const Config& cfg, int baselineMeasures) {
    QueryReport rep;
    rep.annotation = ann;
    if (!score->error.empty()) {
        rep.error = score->error;
        return rep;
    }
    try {
        resolveIntervals(rep.annotation, score->measures);
    } catch (const std::exception& e) {
        rep.error = e.what();
        return rep;
    }
    const auto& truth = rep.annotation.acceptableIntervals;

    if (opts.oracleHypotheses) {
        rep.hypothesis = truth.front();
    } else {
        try {
            using Clock = std::chrono::steady_clock;
            auto t0 = Clock::now();
            image::RgbImage raster = io::readImage(imagePath(opts.imageDir, ann));
            rep.timings.emplace_back("decode", std::chrono::duration<double>(Clock::now() - t0).count());
            sheet::SheetAnalysis sa = sheet::analyzeSheet(raster, cfg);
            rep.timings.insert(rep.timings.end(), sa.timings.begin(), sa.timings.end());
            align::AlignmentResult ar = align::align(sa.score, score->reference, score->events, cfg);
            rep.timings.insert(rep.timings.end(), ar.timings.begin(), ar.timings.end());
            rep.hypothesis = ar.interval;
        } catch (const std::exception& e) {
            rep.error = e.what();
            rep.hypothesis = {0, 0};
        }
    }
    rep.metrics = intervalMetrics(rep.hypothesis, truth, &rep.outcome);

    if (opts.randomBaseline) {
        try {
            rep.baseline = randomBaseline(score->measures, baselineMeasures, cfg.seed ^ fnv1a(ann.imageId));
        } catch (const std::exception&) {
            rep.baseline = Interval{0, 0};
        }
        rep.baselineMetrics = intervalMetrics(*rep.baseline, truth, &rep.baselineOutcome);
    }
    return rep;
}

}  // namespace

DatasetReport evaluateDataset(const DatasetOptions& opts, const Config& cfg) {
    cfg.validate();
    std::vector<QueryAnnotation> anns = parseAnnotations(io::readText(opts.annotations));
    if (anns.empty()) throw Error("annotation file lists no queries");

    DatasetReport report;
    report.configHash = cfg.hash();

    // The baseline guesses as many measures as a training query typically spans.
    double trainMeasures = 0;
    int trainCount = 0;
    for (const auto& a : anns)
        if (a.split == "train") {
            trainMeasures += a.lastMeasure - a.firstMeasure + 1;
            ++trainCount;
        }
    report.baselineMeasures =
        trainCount > 0 ? std::max(1, int(std::lround(trainMeasures / trainCount))) : cfg.baselineMeasures;

    std::map<std::string, ScoreData> scores;
    for (const auto& a : anns)
        if (!scores.count(a.scoreId)) scores.emplace(a.scoreId, loadScore(opts.midiDir, a.scoreId, cfg));

    std::sort(anns.begin(), anns.end(), [](const auto& a, const auto& b) { return a.imageId < b.imageId; });
    report.queries.resize(anns.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < anns.size(); i = next++)
            report.queries[i] = evaluateOne(anns[i], &scores.at(anns[i].scoreId), opts, cfg, report.baselineMeasures);
    };
    const int nThreads = std::clamp(opts.workers, 1, int(std::max<std::size_t>(1, anns.size())));
    if (nThreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nThreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    report.pipeline = aggregateBySplit(report.queries, false);
    if (opts.randomBaseline) report.baseline = aggregateBySplit(report.queries, true);

    std::vector<std::pair<std::string, std::pair<double, int>>> stageSums;
    for (const QueryReport& q : report.queries) {
        if (q.outcome.overlap <= 0) report.failures.push_back(q.annotation.imageId);
        for (const auto& [name, secs] : q.timings) {
            auto it = std::find_if(stageSums.begin(), stageSums.end(), [&](const auto& s) { return s.first == name; });
            if (it == stageSums.end()) it = stageSums.insert(stageSums.end(), {name, {0.0, 0}});
            it->second.first += secs;
            ++it->second.second;
        }
    }
    for (const auto& [name, acc] : stageSums) report.meanStageSeconds.emplace_back(name, acc.first / acc.second);
    return report;
}

std::vector<std::pair<std::string, Aggregate>> aggregateBySplit(std::span<const QueryReport> reports, bool useBaseline) {
    std::vector<std::pair<std::string, Aggregate>> out;
    for (const char* split : {"all", "test", "train"}) {
        std::vector<QueryOutcome> outcomes;
        for (const QueryReport& r : reports)
            if (std::string_view(split) == "all" || r.annotation.split == split)
                outcomes.push_back(useBaseline ? r.baselineOutcome : r.outcome);
        if (!outcomes.empty()) out.emplace_back(split, aggregate(outcomes));
    }
    return out;
}

namespace {

ordered_json metricsJson(const Metrics& m) {
    return ordered_json{{"precision", m.precision}, {"recall", m.recall}, {"f", m.fMeasure}};
}

ordered_json intervalJson(const Interval& iv) { return ordered_json::array({iv.start, iv.end}); }

ordered_json aggregatesJson(const std::vector<std::pair<std::string, Aggregate>>& aggs) {
    ordered_json j = ordered_json::object();
    for (const auto& [split, a] : aggs)
        j[split] = {{"queries", a.queries}, {"micro", metricsJson(a.micro)}, {"macro", metricsJson(a.macro)}};
    return j;
}

}  // namespace

std::string reportJson(const DatasetReport& report, bool includeTimings) {
    ordered_json j;
    j["configHash"] = report.configHash;
    j["baselineMeasures"] = report.baselineMeasures;
    j["pipeline"] = aggregatesJson(report.pipeline);
    if (!report.baseline.empty()) j["baseline"] = aggregatesJson(report.baseline);
    j["failures"] = report.failures;
    ordered_json qs = ordered_json::array();
    for (const QueryReport& q : report.queries) {
        ordered_json e;
        e["imageId"] = q.annotation.imageId;
        e["scoreId"] = q.annotation.scoreId;
        e["split"] = q.annotation.split;
        e["measures"] = {q.annotation.firstMeasure, q.annotation.lastMeasure};
        ordered_json truth = ordered_json::array();
        for (const Interval& iv : q.annotation.acceptableIntervals) truth.push_back(intervalJson(iv));
        e["truth"] = truth;
        e["hypothesis"] = intervalJson(q.hypothesis);
        e["overlap"] = q.outcome.overlap;
        e["metrics"] = metricsJson(q.metrics);
        if (q.baseline) {
            e["baseline"] = intervalJson(*q.baseline);
            e["baselineMetrics"] = metricsJson(q.baselineMetrics);
        }
        if (!q.error.empty()) e["error"] = q.error;
        if (includeTimings) {
            ordered_json t = ordered_json::object();
            for (const auto& [name, secs] : q.timings) t[name] = secs;
            e["timings"] = t;
        }
        qs.push_back(std::move(e));
    }
    j["queries"] = qs;
    if (includeTimings) {
        ordered_json t = ordered_json::object();
        for (const auto& [name, secs] : report.meanStageSeconds) t[name] = secs;
        j["meanStageSeconds"] = t;
    }
    return j.dump(2) + "\n";
}

std::string reportTable(const DatasetReport& report) {
    std::ostringstream os;
    char buf[160];
    os << "config " << report.configHash << "\n";
    std::snprintf(buf, sizeof buf, "%-10s %-6s %7s | %6s %6s %6s | %6s %6s %6s\n", "system", "split", "queries", "P",
                  "R", "F", "macroP", "macroR", "macroF");
    os << buf;
    auto rows = [&](const char* name, const std::vector<std::pair<std::string, Aggregate>>& aggs) {
        for (const auto& [split, a] : aggs) {
            std::snprintf(buf, sizeof buf, "%-10s %-6s %7zu | %6.3f %6.3f %6.3f | %6.3f %6.3f %6.3f\n", name,
                          split.c_str(), a.queries, a.micro.precision, a.micro.recall, a.micro.fMeasure,
                          a.macro.precision, a.macro.recall, a.macro.fMeasure);
            os << buf;
        }
    };
    rows("bootleg", report.pipeline);
    if (!report.baseline.empty()) rows("random", report.baseline);
    os << "failures (no overlap): " << report.failures.size() << "\n";
    for (const auto& id : report.failures) os << "  " << id << "\n";
    return os.str();
}

}  // namespace bootleg::eval
