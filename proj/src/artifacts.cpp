#include "mvaa/artifacts.h"

#include "mvaa/error.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mvaa::io {

namespace {

[[noreturn]] void schema_error(const std::string& what) {
    throw Error(ErrorCode::SchemaMismatch, what);
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object()) {
        schema_error(std::string("expected an object holding '") + key + "'");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        schema_error(std::string("missing field '") + key + "'");
    }
    return *it;
}

double number(const Json& j, const char* key) {
    const Json& v = field(j, key);
    if (!v.is_number()) {
        schema_error(std::string("field '") + key + "' must be a number");
    }
    return v.get<double>();
}

int integer(const Json& j, const char* key) {
    const Json& v = field(j, key);
    if (!v.is_number_integer()) {
        schema_error(std::string("field '") + key + "' must be an integer");
    }
    return v.get<int>();
}

const Json& array(const Json& j, const char* key) {
    const Json& v = field(j, key);
    if (!v.is_array()) {
        schema_error(std::string("field '") + key + "' must be an array");
    }
    return v;
}

int optional_integer(const Json& j, const char* key, int fallback) {
    const auto it = j.find(key);
    if (it == j.end()) {
        return fallback;
    }
    if (!it->is_number_integer()) {
        schema_error(std::string("field '") + key + "' must be an integer");
    }
    return it->get<int>();
}

void require_increasing(const std::vector<double>& v, const char* what) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) {
            schema_error(std::string(what) + " must be strictly increasing");
        }
    }
}

}  // namespace

Json to_json(const audio::BeatGrid& grid) {
    Json j;
    j["beats"] = grid.beats;
    j["bpm"] = grid.bpm;
    j["duration"] = grid.duration;
    return j;
}

audio::BeatGrid beat_grid_from_json(const Json& j) {
    audio::BeatGrid g;
    for (const Json& b : array(j, "beats")) {
        if (!b.is_number()) {
            schema_error("beats must be numbers");
        }
        g.beats.push_back(b.get<double>());
    }
    require_increasing(g.beats, "beats");
    g.bpm = number(j, "bpm");
    g.duration = number(j, "duration");
    return g;
}

Json to_json(const motion::PeakSet& peaks, const motion::MotionEnergy* energy) {
    Json j;
    j["fps"] = peaks.fps;
    Json list = Json::array();
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        Json p;
        p["frame"] = peaks.peak_frames[i];
        p["time"] = peaks.peak_times[i];
        p["value"] = peaks.peak_values[i];
        list.push_back(std::move(p));
    }
    j["peaks"] = std::move(list);
    if (energy != nullptr) {
        j["energy"] = energy->values;
        j["smoothed"] = energy->smoothed;
    }
    return j;
}

motion::PeakSet peak_set_from_json(const Json& j) {
    motion::PeakSet s;
    s.fps = number(j, "fps");
    if (!(s.fps > 0.0)) {
        schema_error("fps must be positive");
    }
    for (const Json& p : array(j, "peaks")) {
        s.peak_frames.push_back(integer(p, "frame"));
        s.peak_times.push_back(number(p, "time"));
        s.peak_values.push_back(number(p, "value"));
    }
    require_increasing(s.peak_times, "peak times");
    return s;
}

Json to_json(const align::AlignmentPlan& plan) {
    Json j;
    Json pairs = Json::array();
    for (const auto& p : plan.pairs) {
        Json e;
        e["beat"] = p.beat_time;
        e["peak"] = p.peak_time;
        e["peak_frame"] = p.peak_frame;
        e["beat_index"] = p.beat_index;
        e["peak_index"] = p.peak_index;
        pairs.push_back(std::move(e));
    }
    j["pairs"] = std::move(pairs);
    j["cost"] = plan.total_cost;
    j["k"] = plan.k();
    j["fps"] = plan.source_fps;
    j["music_duration"] = plan.music_duration;
    return j;
}

align::AlignmentPlan plan_from_json(const Json& j) {
    align::AlignmentPlan plan;
    for (const Json& e : array(j, "pairs")) {
        align::MatchedPair p;
        p.beat_time = number(e, "beat");
        p.peak_time = number(e, "peak");
        p.peak_frame = integer(e, "peak_frame");
        p.beat_index = optional_integer(e, "beat_index", -1);
        p.peak_index = optional_integer(e, "peak_index", -1);
        plan.pairs.push_back(p);
    }
    for (std::size_t i = 1; i < plan.pairs.size(); ++i) {
        if (!(plan.pairs[i].beat_time > plan.pairs[i - 1].beat_time) ||
            !(plan.pairs[i].peak_time > plan.pairs[i - 1].peak_time)) {
            schema_error("pairs must be strictly increasing in beat and peak time");
        }
    }
    plan.total_cost = number(j, "cost");
    plan.source_fps = number(j, "fps");
    plan.music_duration = number(j, "music_duration");
    if (j.contains("k") && integer(j, "k") != static_cast<int>(plan.k())) {
        schema_error("k disagrees with the number of pairs");
    }
    // Six-digit serialisation bounds the drift between cost and pair sum.
    double sum = 0.0;
    for (const auto& p : plan.pairs) {
        sum += std::abs(p.beat_time - p.peak_time);
    }
    if (std::abs(sum - plan.total_cost) > 1e-5 * static_cast<double>(plan.k() + 1)) {
        schema_error("cost disagrees with the sum of pair differences");
    }
    return plan;
}

Json to_json(const align::RetimingMap& map) {
    Json j;
    j["fps"] = map.fps;
    j["length"] = map.length;
    Json anchors = Json::array();
    for (const auto& a : map.anchors) {
        Json e;
        e["frame"] = a.frame;
        e["source_time"] = a.source_time;
        anchors.push_back(std::move(e));
    }
    j["anchors"] = std::move(anchors);
    return j;
}

align::RetimingMap retiming_from_json(const Json& j) {
    align::RetimingMap map;
    map.fps = number(j, "fps");
    map.length = integer(j, "length");
    for (const Json& e : array(j, "anchors")) {
        map.anchors.push_back({integer(e, "frame"), number(e, "source_time")});
    }
    try {
        align::validate(map, std::numeric_limits<double>::infinity());
    } catch (const Error& e) {
        schema_error(e.what());
    }
    return map;
}

Json to_json(const metrics::EvalReport& r) {
    Json j;
    j["beat_align"] = r.beat_align;
    j["tc"] = r.temporal_consistency;
    if (r.content) {
        j["cp"] = {{"exact_match_rate", r.content->exact_match_rate}, {"psnr_db", r.content->psnr_db}};
    }
    if (r.input_beat_align) {
        j["input_beat_align"] = *r.input_beat_align;
    }
    j["params"] = {{"sigma", r.sigma},
                   {"transposed", r.transposed},
                   {"embedder", r.embedder},
                   {"beats", r.beat_count},
                   {"peaks", r.peak_count}};
    return j;
}

metrics::EvalReport report_from_json(const Json& j) {
    metrics::EvalReport r;
    r.beat_align = number(j, "beat_align");
    r.temporal_consistency = number(j, "tc");
    if (const auto it = j.find("cp"); it != j.end()) {
        r.content = metrics::ContentPreservation{number(*it, "exact_match_rate"), number(*it, "psnr_db")};
    }
    if (j.contains("input_beat_align")) {
        r.input_beat_align = number(j, "input_beat_align");
    }
    const Json& params = field(j, "params");
    r.sigma = number(params, "sigma");
    const Json& transposed = field(params, "transposed");
    if (!transposed.is_boolean()) {
        schema_error("params.transposed must be a boolean");
    }
    r.transposed = transposed.get<bool>();
    const Json& embedder = field(params, "embedder");
    if (!embedder.is_string()) {
        schema_error("params.embedder must be a string");
    }
    r.embedder = embedder.get<std::string>();
    r.beat_count = static_cast<std::size_t>(integer(params, "beats"));
    r.peak_count = static_cast<std::size_t>(integer(params, "peaks"));
    return r;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
    }
}

void write_json(const Json& j, const std::filesystem::path& path) {
    const std::string text = dump_fixed(j) + "\n";
    std::ofstream out(path, std::ios::binary);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
}

align::AlignmentPlan read_plan(const std::filesystem::path& path) {
    return plan_from_json(read_json(path));
}

void write_plan(const align::AlignmentPlan& plan, const std::filesystem::path& path) {
    write_json(to_json(plan), path);
}

align::RetimingMap read_retiming(const std::filesystem::path& path) {
    return retiming_from_json(read_json(path));
}

void write_retiming(const align::RetimingMap& map, const std::filesystem::path& path) {
    write_json(to_json(map), path);
}

}  // namespace mvaa::io
