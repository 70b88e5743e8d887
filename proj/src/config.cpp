#include "bootleg/config.hpp"

#include <cstdio>
#include <functional>
#include <map>

#include "bootleg/image.hpp"
#include "json.hpp"

namespace bootleg {

namespace {

using Json = nlohmann::ordered_json;

struct Field {
    std::function<Json(const Config&)> get;
    std::function<void(Config&, const Json&)> put;
};

template <typename T>
Field field(T Config::*member) {
    return {[member](const Config& c) { return Json(c.*member); },
            [member](Config& c, const Json& j) { c.*member = j.get<T>(); }};
}

// Declaration order here is the canonical dump order.
const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"maxDim", field(&Config::maxDim)},
        {"blurHalfWidth", field(&Config::blurHalfWidth)},
        {"noteheadSeRadius", field(&Config::noteheadSeRadius)},
        {"blobMinArea", field(&Config::blobMinArea)},
        {"blobMaxArea", field(&Config::blobMaxArea)},
        {"blobNumThresholds", field(&Config::blobNumThresholds)},
        {"blobMinDist", field(&Config::blobMinDist)},
        {"cropSize", field(&Config::cropSize)},
        {"templateDiameterTol", field(&Config::templateDiameterTol)},
        {"noteheadHeightMin", field(&Config::noteheadHeightMin)},
        {"noteheadHeightMax", field(&Config::noteheadHeightMax)},
        {"noteheadWidthMin", field(&Config::noteheadWidthMin)},
        {"noteheadWidthMax", field(&Config::noteheadWidthMax)},
        {"noteheadAspectMin", field(&Config::noteheadAspectMin)},
        {"noteheadAspectMax", field(&Config::noteheadAspectMax)},
        {"noteheadAreaMin", field(&Config::noteheadAreaMin)},
        {"noteheadAreaMax", field(&Config::noteheadAreaMax)},
        {"chordAreaMin", field(&Config::chordAreaMin)},
        {"chordWidthMax", field(&Config::chordWidthMax)},
        {"horizSeWidth", field(&Config::horizSeWidth)},
        {"beamThicknessThresh", field(&Config::beamThicknessThresh)},
        {"combSpacingMin", field(&Config::combSpacingMin)},
        {"combSpacingMax", field(&Config::combSpacingMax)},
        {"combSpacingStep", field(&Config::combSpacingStep)},
        {"impulseHeight", field(&Config::impulseHeight)},
        {"vertSeHeight", field(&Config::vertSeHeight)},
        {"barlineMaxWidth", field(&Config::barlineMaxWidth)},
        {"contextHalfWidth", field(&Config::contextHalfWidth)},
        {"contextHeightFactor", field(&Config::contextHeightFactor)},
        {"simultaneityTol", field(&Config::simultaneityTol)},
        {"onsetClusterTol", field(&Config::onsetClusterTol)},
        {"dtwWeightDiagonal", field(&Config::dtwWeightDiagonal)},
        {"dtwWeightSkipRef", field(&Config::dtwWeightSkipRef)},
        {"dtwWeightSkipQuery", field(&Config::dtwWeightSkipQuery)},
        {"extendToNextOnset", field(&Config::extendToNextOnset)},
        {"baselineMeasures", field(&Config::baselineMeasures)},
        {"seed", field(&Config::seed)},
    };
    return table;
}

const Field* lookup(std::string_view key) {
    for (const auto& [name, f] : fields())
        if (name == key) return &f;
    return nullptr;
}

void assignKey(Config& cfg, std::string_view key, const Json& value) {
    const Field* f = lookup(key);
    if (!f) throw Error("unknown config key '" + std::string(key) + "'");
    try {
        f->put(cfg, value);
    } catch (const nlohmann::json::exception&) {
        throw Error("config key '" + std::string(key) + "' has the wrong type");
    }
}

}  // namespace

std::vector<int> Config::combSpacings() const {
    std::vector<int> out;
    for (int s = combSpacingMin; s <= combSpacingMax; s += combSpacingStep) out.push_back(s);
    return out;
}

void Config::validate() const {
    auto require = [](bool ok, const char* key, const char* rule) {
        if (!ok) throw Error(std::string("config '") + key + "' must be " + rule);
    };
    require(maxDim >= 1, "maxDim", ">= 1");
    require(blurHalfWidth >= 1, "blurHalfWidth", ">= 1");
    require(noteheadSeRadius >= 1, "noteheadSeRadius", ">= 1");
    require(blobMinArea >= 0 && blobMinArea < blobMaxArea, "blobMinArea", "in [0, blobMaxArea)");
    require(blobNumThresholds >= 2, "blobNumThresholds", ">= 2");
    require(blobMinDist > 0, "blobMinDist", "> 0");
    require(cropSize >= 3 && cropSize % 2 == 1, "cropSize", "odd and >= 3");
    require(templateDiameterTol >= 1.0, "templateDiameterTol", ">= 1");
    require(0 < noteheadHeightMin && noteheadHeightMin <= 1 && noteheadHeightMax >= 1, "noteheadHeightMin/Max", "bracket 1");
    require(0 < noteheadWidthMin && noteheadWidthMin <= 1 && noteheadWidthMax >= 1, "noteheadWidthMin/Max", "bracket 1");
    require(0 < noteheadAspectMin && noteheadAspectMin <= 1 && noteheadAspectMax >= 1, "noteheadAspectMin/Max", "bracket 1");
    require(0 < noteheadAreaMin && noteheadAreaMin <= 1 && noteheadAreaMax >= 1, "noteheadAreaMin/Max", "bracket 1");
    require(chordAreaMin > 1, "chordAreaMin", "> 1");
    require(chordWidthMax >= 1, "chordWidthMax", ">= 1");
    require(horizSeWidth >= 3, "horizSeWidth", ">= 3");
    require(beamThicknessThresh >= 1, "beamThicknessThresh", ">= 1");
    require(combSpacingMin >= 2, "combSpacingMin", ">= 2");
    require(combSpacingMax >= combSpacingMin, "combSpacingMax", ">= combSpacingMin");
    require(combSpacingStep >= 1, "combSpacingStep", ">= 1");
    require(impulseHeight >= 1, "impulseHeight", ">= 1");
    require(vertSeHeight >= 3, "vertSeHeight", ">= 3");
    require(barlineMaxWidth >= 1, "barlineMaxWidth", ">= 1");
    require(contextHalfWidth >= 0, "contextHalfWidth", ">= 0");
    require(contextHeightFactor > 0, "contextHeightFactor", "> 0");
    require(simultaneityTol > 0, "simultaneityTol", "> 0");
    require(onsetClusterTol > 0, "onsetClusterTol", "> 0");
    require(dtwWeightDiagonal > 0 && dtwWeightSkipRef > 0 && dtwWeightSkipQuery > 0, "dtwWeight*", "> 0");
    require(baselineMeasures >= 1, "baselineMeasures", ">= 1");
}

std::string Config::toJson() const {
    Json j = Json::object();
    for (const auto& [name, f] : fields()) j[name] = f.get(*this);
    return j.dump(2) + "\n";
}

Config Config::fromJson(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("config must be a flat JSON object");
    Config cfg;
    for (const auto& [key, value] : j.items()) assignKey(cfg, key, value);
    cfg.validate();
    return cfg;
}

void Config::set(std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw Error("expected key=value, got '" + std::string(assignment) + "'");
    std::string_view key = assignment.substr(0, eq);
    Json value;
    try {
        value = Json::parse(assignment.substr(eq + 1));
    } catch (const nlohmann::json::parse_error&) {
        throw Error("value for '" + std::string(key) + "' is not valid JSON");
    }
    assignKey(*this, key, value);
    validate();
}

std::string Config::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : toJson()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace bootleg
