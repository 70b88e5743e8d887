// Command-line front end. Each subcommand composes library calls; exit code
// 0 means the primary artifact was written, 2 flags unreadable input files.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bootleg/align.hpp"
#include "bootleg/config.hpp"
#include "bootleg/eval.hpp"
#include "bootleg/io.hpp"
#include "bootleg/midi.hpp"
#include "bootleg/overlay.hpp"
#include "bootleg/score.hpp"
#include "bootleg/sheet.hpp"

namespace {

using namespace bootleg;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct GlobalOptions {
    std::string configPath;
    std::vector<std::string> overrides;
};

Config loadConfig(const GlobalOptions& g) {
    Config cfg = g.configPath.empty() ? Config{} : Config::fromJson(io::readText(g.configPath));
    for (const auto& kv : g.overrides) cfg.set(kv);
    cfg.validate();
    return cfg;
}

ordered_json timingsJson(const align::StageTimings& t) {
    ordered_json j = ordered_json::object();
    for (const auto& [name, secs] : t) j[name] = secs;
    return j;
}

int midiBootlegCmd(const Config& cfg, const std::string& midiPath, const std::string& outPath) {
    auto events = midi::clusterOnsets(midi::parseMidi(io::readFile(midiPath)), cfg.onsetClusterTol);
    BootlegScore score = midiBootleg(events);
    io::writeFile(outPath, serialize(score));
    ordered_json j;
    j["configHash"] = cfg.hash();
    j["input"] = midiPath;
    j["output"] = outPath;
    j["events"] = events.size();
    j["columns"] = score.width();
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

ordered_json sheetSummary(const sheet::SheetAnalysis& a) {
    ordered_json j;
    j["noteheads"] = a.noteheads.noteheads.size();
    j["template"] = {{"height", a.noteheads.tmpl.height}, {"width", a.noteheads.tmpl.width},
                     {"area", a.noteheads.tmpl.area}};
    j["musicLines"] = a.lines.size();
    j["labeled"] = a.labeled.size();
    j["discarded"] = a.discarded;
    j["events"] = a.events.size();
    j["columns"] = a.score.width();
    j["timings"] = timingsJson(a.timings);
    return j;
}

int imageBootlegCmd(const Config& cfg, const std::string& imagePath, const std::string& outPath,
                    const std::string& overlayDir, const std::vector<std::string>& layers) {
    image::RgbImage raster = io::readImage(imagePath);
    sheet::SheetAnalysis a;
    const std::string err = sheet::analyzeSheetInto(raster, cfg, a);

    ordered_json j;
    j["configHash"] = cfg.hash();
    j["input"] = imagePath;
    j.update(sheetSummary(a));
    if (!overlayDir.empty() && a.resized.height > 0) {
        overlay::OverlaySpec spec;
        if (!layers.empty()) {
            spec.layers.clear();
            for (const auto& name : layers) spec.layers.push_back(overlay::parseLayer(name));
        }
        j["overlays"] = overlay::writeOverlays(a, spec, overlayDir);
    }
    if (!err.empty()) {
        j["error"] = err;
        j["failedStage"] = a.failedStage;
        std::cerr << "error: " << err << "\n";
        std::cout << j.dump(2) << "\n";
        return kExitFailure;
    }
    io::writeFile(outPath, serialize(a.score));
    j["output"] = outPath;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int alignCmd(const Config& cfg, const std::string& queryPath, const std::string& refPath, const std::string& midiPath,
             bool withTimings) {
    const auto wall0 = Clock::now();
    align::StageTimings timings;

    auto t0 = Clock::now();
    BootlegScore query = deserialize(io::readFile(queryPath));
    BootlegScore ref = deserialize(io::readFile(refPath));
    timings.emplace_back("readInputs", since(t0));

    t0 = Clock::now();
    auto events = midi::clusterOnsets(midi::parseMidi(io::readFile(midiPath)), cfg.onsetClusterTol);
    timings.emplace_back("parseMidi", since(t0));

    align::AlignmentResult res = align::align(query, ref, events, cfg);
    timings.insert(timings.end(), res.timings.begin(), res.timings.end());
    const double wall = since(wall0);

    ordered_json j;
    j["configHash"] = cfg.hash();
    j["queryColumns"] = query.width();
    j["referenceColumns"] = ref.width();
    j["refStart"] = res.refStart;
    j["refEnd"] = res.refEnd;
    j["interval"] = {res.interval.start, res.interval.end};
    j["cost"] = res.totalCost;
    if (withTimings) {
        double sum = 0;
        for (const auto& t : timings) sum += t.second;
        j["timings"] = timingsJson(timings);
        j["wallSeconds"] = wall;
        j["timingCoverage"] = wall > 0 ? sum / wall : 1.0;
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int evaluateCmd(const Config& cfg, eval::DatasetOptions opts, const std::string& outPath, bool withTimings) {
    if (opts.workers <= 0) {
        const char* env = std::getenv("BOOTLEG_WORKERS");
        opts.workers = env ? std::max(1, std::atoi(env)) : 1;
    }
    eval::DatasetReport report = eval::evaluateDataset(opts, cfg);
    if (!outPath.empty()) io::writeText(outPath, eval::reportJson(report, withTimings));
    std::cout << eval::reportTable(report);
    for (const auto& q : report.queries)
        if (!q.error.empty()) std::cerr << "warning: " << q.annotation.imageId << ": " << q.error << "\n";
    return kExitOk;
}

int overlayCmd(const Config& cfg, const std::string& imagePath, const std::string& outDir,
               const std::vector<std::string>& layers) {
    image::RgbImage raster = io::readImage(imagePath);
    sheet::SheetAnalysis a;
    const std::string err = sheet::analyzeSheetInto(raster, cfg, a);
    if (!err.empty()) std::cerr << "warning: pipeline stopped at " << a.failedStage << ": " << err << "\n";
    if (a.resized.height == 0) throw Error("nothing to draw: " + err);
    overlay::OverlaySpec spec;
    if (!layers.empty()) {
        spec.layers.clear();
        for (const auto& name : layers) spec.layers.push_back(overlay::parseLayer(name));
    }
    ordered_json j;
    j["configHash"] = cfg.hash();
    j["overlays"] = overlay::writeOverlays(a, spec, outDir);
    if (!err.empty()) j["error"] = err;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sheet music photo to MIDI passage retrieval via bootleg scores"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.configPath, "JSON config file (flat, documented keys only)");
    app.add_option("--set", g.overrides, "Override one config key, e.g. --set seed=7")->take_all();

    std::string in, out, overlayDir, query, ref, midiPath;
    std::vector<std::string> layers;
    bool noTimings = false;

    auto* midiCmd = app.add_subcommand("midi-bootleg", "Write the BTLG bootleg score of a MIDI file");
    midiCmd->add_option("midi", in, "Standard MIDI File")->required();
    midiCmd->add_option("-o,--out", out, "Output BTLG path")->required();

    auto* imageCmd = app.add_subcommand("image-bootleg", "Write the BTLG bootleg score of a sheet music image");
    imageCmd->add_option("image", in, "PNG or JPEG")->required();
    imageCmd->add_option("-o,--out", out, "Output BTLG path")->required();
    imageCmd->add_option("--overlay", overlayDir, "Also write debug overlays into this directory");
    imageCmd->add_option("--layers", layers, "Overlay layers (default: all)")->delimiter(',');

    auto* alignSub = app.add_subcommand("align", "Locate a query bootleg score inside a reference");
    alignSub->add_option("query", query, "Query BTLG")->required();
    alignSub->add_option("reference", ref, "Reference BTLG")->required();
    alignSub->add_option("midi", midiPath, "MIDI file the reference was built from")->required();
    alignSub->add_flag("--no-timings", noTimings, "Omit timing fields");

    eval::DatasetOptions dopts;
    dopts.workers = 0;
    std::string baseline;
    auto* evalCmd = app.add_subcommand("evaluate", "Score the system on an annotated image set");
    evalCmd->add_option("--annotations", dopts.annotations, "Annotation JSON")->required();
    evalCmd->add_option("--midi-dir", dopts.midiDir, "Directory with <scoreId>.mid and .measures.json")->required();
    evalCmd->add_option("--image-dir", dopts.imageDir, "Directory with query images")->required();
    evalCmd->add_option("--baseline", baseline, "Also score a baseline")->check(CLI::IsMember({"random"}));
    evalCmd->add_option("--workers", dopts.workers, "Parallel queries (default: $BOOTLEG_WORKERS or 1)");
    evalCmd->add_option("--out", out, "Report JSON path");
    evalCmd->add_flag("--no-timings", noTimings, "Omit timing fields from the report");

    auto* dumpCmd = app.add_subcommand("dump-config", "Print the effective configuration as JSON");

    auto* overlayCmdSub = app.add_subcommand("overlay", "Render debug overlays for an image");
    overlayCmdSub->add_option("image", in, "PNG or JPEG")->required();
    overlayCmdSub->add_option("-o,--out-dir", overlayDir, "Output directory")->required();
    overlayCmdSub->add_option("--layers", layers, "Layers (default: all)")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        const Config cfg = loadConfig(g);
        if (midiCmd->parsed()) return midiBootlegCmd(cfg, in, out);
        if (imageCmd->parsed()) return imageBootlegCmd(cfg, in, out, overlayDir, layers);
        if (alignSub->parsed()) return alignCmd(cfg, query, ref, midiPath, !noTimings);
        if (evalCmd->parsed()) {
            dopts.randomBaseline = baseline == "random";
            return evaluateCmd(cfg, dopts, out, !noTimings);
        }
        if (dumpCmd->parsed()) {
            std::cout << cfg.toJson();
            return kExitOk;
        }
        if (overlayCmdSub->parsed()) return overlayCmd(cfg, in, overlayDir, layers);
    } catch (const midi::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
