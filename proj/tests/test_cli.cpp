#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "bootleg/config.hpp"
#include "bootleg/io.hpp"
#include "bootleg/midi.hpp"
#include "bootleg/score.hpp"
#include "bootleg/sheet.hpp"
#include "dataset.hpp"
#include "smf_writer.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

fs::path workDir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "bootleg_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run run(const std::string& args) {
    const fs::path errFile = workDir() / "stderr.txt";
    const std::string cmd = quote(BOOTLEG_CLI_PATH) + " " + args + " 2>" + quote(errFile.string());
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.err = bootleg::io::readText(errFile);
    return r;
}

std::string fileBytes(const fs::path& p) { return bootleg::io::readText(p); }

fs::path twoEventMidi() {
    testsupport::SmfTrack t;
    t.notes = {{0, 60, 90, 240, 0}, {0, 64, 90, 240, 0}, {480, 67, 90, 240, 0}};
    const fs::path p = workDir() / "two.mid";
    bootleg::io::writeFile(p, testsupport::writeSmf({t}));
    return p;
}

struct RenderedQuery {
    testsupport::Piece piece;
    testsupport::Rendering rendering;
    fs::path image, midi;
};

const RenderedQuery& renderedQuery() {
    static const RenderedQuery q = [] {
        RenderedQuery r{testsupport::generatePiece(314, 24), {}, workDir() / "page.png", workDir() / "piece.mid"};
        testsupport::RenderOptions ro;
        ro.spacing = 18;
        ro.maxSystems = 2;
        r.rendering = testsupport::renderExcerpt(r.piece, 5, ro);
        bootleg::io::writePng(r.image, r.rendering.image);
        bootleg::io::writeFile(r.midi, r.piece.smf());
        return r;
    }();
    return q;
}

}  // namespace

TEST_CASE("midi-bootleg") {
    const fs::path midi = twoEventMidi();
    const fs::path a = workDir() / "two_a.btlg", b = workDir() / "two_b.btlg";
    Run r = run("midi-bootleg " + quote(midi.string()) + " -o " + quote(a.string()));
    REQUIRE(r.status == 0);
    auto j = json::parse(r.out);
    CHECK(j["events"] == 2);
    CHECK(j["columns"] == 6);
    CHECK(j["configHash"] == bootleg::Config{}.hash());
    auto score = bootleg::deserialize(bootleg::io::readFile(a));
    CHECK(score.width() == 6);

    Run again = run("midi-bootleg " + quote(midi.string()) + " -o " + quote(b.string()));
    REQUIRE(again.status == 0);
    CHECK(fileBytes(a) == fileBytes(b));
}

TEST_CASE("midi-bootleg rejects non-MIDI input") {
    const fs::path junk = workDir() / "junk.mid";
    bootleg::io::writeText(junk, "this is not a MIDI file at all");
    Run r = run("midi-bootleg " + quote(junk.string()) + " -o " + quote((workDir() / "junk.btlg").string()));
    CHECK(r.status == 2);
    CHECK(r.err.find("MThd missing") != std::string::npos);
    CHECK(!fs::exists(workDir() / "junk.btlg"));
}

TEST_CASE("image-bootleg on a blank page") {
    const fs::path blank = workDir() / "blank.png";
    bootleg::io::writePng(blank, bootleg::image::RgbImage{300, 400, std::vector<double>(300 * 400 * 3, 255.0)});
    const fs::path out = workDir() / "blank.btlg";
    Run r = run("image-bootleg " + quote(blank.string()) + " -o " + quote(out.string()));
    CHECK(r.status != 0);
    CHECK(r.err.find("no music lines found") != std::string::npos);
    CHECK(json::parse(r.out)["failedStage"] == "barlines");
    CHECK(!fs::exists(out));
}

TEST_CASE("image-bootleg on a rendered page, with overlays") {
    const auto& q = renderedQuery();
    const fs::path out = workDir() / "page.btlg", ov = workDir() / "overlays";
    Run r = run("image-bootleg " + quote(q.image.string()) + " -o " + quote(out.string()) + " --overlay " +
                quote(ov.string()) + " --layers noteheads,barlines,staff-dots");
    REQUIRE(r.status == 0);
    auto expected = bootleg::sheet::analyzeSheet(bootleg::io::readImage(q.image), bootleg::Config{});
    auto score = bootleg::deserialize(bootleg::io::readFile(out));
    CHECK(score == expected.score);
    CHECK(score.width() == 3 * expected.events.size());

    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(ov)) files.push_back(e.path().filename().string());
    std::sort(files.begin(), files.end());
    CHECK(files == std::vector<std::string>{"barlines.png", "noteheads.png", "staff-dots.png"});

    const fs::path all = workDir() / "overlays_all";
    Run o = run("overlay " + quote(q.image.string()) + " -o " + quote(all.string()));
    REQUIRE(o.status == 0);
    CHECK(std::distance(fs::directory_iterator(all), fs::directory_iterator{}) == 6);

    Run bad = run("overlay " + quote(q.image.string()) + " -o " + quote(all.string()) + " --layers bogus");
    CHECK(bad.status != 0);
}

TEST_CASE("align") {
    const auto& q = renderedQuery();
    const fs::path query = workDir() / "align_q.btlg", ref = workDir() / "align_ref.btlg";
    REQUIRE(run("image-bootleg " + quote(q.image.string()) + " -o " + quote(query.string())).status == 0);
    REQUIRE(run("midi-bootleg " + quote(q.midi.string()) + " -o " + quote(ref.string())).status == 0);

    Run r = run("align " + quote(query.string()) + " " + quote(ref.string()) + " " + quote(q.midi.string()));
    REQUIRE(r.status == 0);
    auto j = json::parse(r.out);
    const auto map = q.piece.measureMap();
    const double t0 = map.downbeat(q.rendering.firstMeasure), t1 = map.downbeat(q.rendering.lastMeasure + 1);
    const double s = j["interval"][0], e = j["interval"][1];
    const double ov = std::max(0.0, std::min(e, t1) - std::max(s, t0));
    CHECK(ov / (t1 - t0) >= 0.9);
    CHECK(ov / (e - s) >= 0.9);
    CHECK(j["timingCoverage"].get<double>() >= 0.95);

    Run a = run("align --no-timings " + quote(query.string()) + " " + quote(ref.string()) + " " + quote(q.midi.string()));
    Run b = run("align --no-timings " + quote(query.string()) + " " + quote(ref.string()) + " " + quote(q.midi.string()));
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("timings") == std::string::npos);
    auto stripped = j;
    stripped.erase("timings");
    stripped.erase("wallSeconds");
    stripped.erase("timingCoverage");
    CHECK(stripped == json::parse(a.out));

    // Swapped operands: the query is longer than the reference.
    Run swapped = run("align " + quote(ref.string()) + " " + quote(query.string()) + " " + quote(q.midi.string()));
    CHECK(swapped.status != 0);
    CHECK(swapped.err.find("query longer than reference") != std::string::npos);
}

TEST_CASE("evaluate") {
    const fs::path root = workDir() / "dataset";
    auto ds = testsupport::writeSyntheticDataset(root, 4, 21);
    const std::string dirs = " --annotations " + quote(ds.annotations.string()) + " --midi-dir " +
                             quote(ds.midiDir.string()) + " --image-dir " + quote(ds.imageDir.string());

    const fs::path r1 = workDir() / "report1.json", r2 = workDir() / "report2.json";
    Run a = run("evaluate" + dirs + " --baseline random --no-timings --out " + quote(r1.string()));
    REQUIRE(a.status == 0);
    CHECK(a.out.find("macroF") != std::string::npos);
    auto rep = json::parse(fileBytes(r1));
    CHECK(rep["pipeline"]["all"]["micro"]["f"].get<double>() >= 0.9);
    CHECK(rep["configHash"] == bootleg::Config{}.hash());
    CHECK(rep.contains("baseline"));

    Run b = run("evaluate" + dirs + " --baseline random --no-timings --workers 2 --out " + quote(r2.string()));
    REQUIRE(b.status == 0);
    CHECK(fileBytes(r1) == fileBytes(r2));

    const fs::path cfgFile = workDir() / "seeded.json", r3 = workDir() / "report3.json";
    bootleg::io::writeText(cfgFile, R"({"seed": 99})");
    Run c = run("--config " + quote(cfgFile.string()) + " evaluate" + dirs +
                " --baseline random --no-timings --out " + quote(r3.string()));
    REQUIRE(c.status == 0);
    auto rep3 = json::parse(fileBytes(r3));
    bootleg::Config seeded;
    seeded.seed = 99;
    CHECK(rep3["configHash"] == seeded.hash());
    CHECK(rep3["configHash"] != rep["configHash"]);
}

TEST_CASE("dump-config round trip") {
    Run d = run("dump-config");
    REQUIRE(d.status == 0);
    const fs::path p = workDir() / "defaults.json";
    bootleg::io::writeText(p, d.out);
    Run again = run("--config " + quote(p.string()) + " dump-config");
    REQUIRE(again.status == 0);
    CHECK(again.out == d.out);

    Run set = run("--set combSpacingMax=20 dump-config");
    REQUIRE(set.status == 0);
    CHECK(json::parse(set.out)["combSpacingMax"] == 20);

    Run bad = run("--set nonsense=1 dump-config");
    CHECK(bad.status != 0);
    CHECK(bad.err.find("nonsense") != std::string::npos);
}
