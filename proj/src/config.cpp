#include "mvaa/config.h"

#include "mvaa/artifacts.h"
#include "mvaa/error.h"

#include <cmath>
#include <functional>
#include <map>

namespace mvaa {

namespace {

void invalid(const std::string& field, const std::string& rule) {
    throw Error(ErrorCode::InvalidArgument, field + " " + rule);
}

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) {
        invalid(field, rule);
    }
}

bool finite(double v) { return std::isfinite(v); }

template <typename T>
T get_as(const Json& v, const std::string& key) {
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
            invalid(key, "must be a boolean");
        }
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {
            invalid(key, "must be a string");
        }
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            invalid(key, "must be an integer");
        }
    } else {
        if (!v.is_number()) {
            invalid(key, "must be a number");
        }
    }
    return v.get<T>();
}

using Setter = std::function<void(PipelineConfig&, const Json&)>;

template <typename T>
Setter field(T PipelineConfig::*member, const char* key) {
    return [member, key](PipelineConfig& c, const Json& v) { c.*member = get_as<T>(v, key); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"n_fft", [](PipelineConfig& c, const Json& v) { c.beats.onset.n_fft = get_as<int>(v, "n_fft"); }},
        {"hop", [](PipelineConfig& c, const Json& v) { c.beats.onset.hop = get_as<int>(v, "hop"); }},
        {"n_mels", [](PipelineConfig& c, const Json& v) { c.beats.onset.n_mels = get_as<int>(v, "n_mels"); }},
        {"bpm_min", [](PipelineConfig& c, const Json& v) { c.beats.tempo.bpm_min = get_as<double>(v, "bpm_min"); }},
        {"bpm_max", [](PipelineConfig& c, const Json& v) { c.beats.tempo.bpm_max = get_as<double>(v, "bpm_max"); }},
        {"prior_bpm",
         [](PipelineConfig& c, const Json& v) { c.beats.tempo.prior_bpm = get_as<double>(v, "prior_bpm"); }},
        {"tightness", [](PipelineConfig& c, const Json& v) { c.beats.tightness = get_as<double>(v, "tightness"); }},
        {"sigma_frames",
         [](PipelineConfig& c, const Json& v) { c.motion.sigma_frames = get_as<double>(v, "sigma_frames"); }},
        {"min_distance",
         [](PipelineConfig& c, const Json& v) { c.motion.peaks.min_distance_frames = get_as<int>(v, "min_distance"); }},
        {"threshold_rel",
         [](PipelineConfig& c, const Json& v) { c.motion.peaks.threshold_rel = get_as<double>(v, "threshold_rel"); }},
        {"output_fps", field(&PipelineConfig::output_fps, "output_fps")},
        {"backend", field(&PipelineConfig::backend, "backend")},
        {"command", field(&PipelineConfig::command, "command")},
        {"job_dir", field(&PipelineConfig::job_dir, "job_dir")},
        {"beat_align_sigma", field(&PipelineConfig::beat_align_sigma, "beat_align_sigma")},
        {"transposed", field(&PipelineConfig::transposed, "transposed")},
        {"eq1_strict", field(&PipelineConfig::eq1_strict, "eq1_strict")},
        {"blend", field(&PipelineConfig::blend, "blend")},
        {"segment_seconds", field(&PipelineConfig::segment_seconds, "segment_seconds")},
    };
    return table;
}

}  // namespace

void validate(const PipelineConfig& c) {
    const auto& o = c.beats.onset;
    require(o.n_fft >= 64 && o.n_fft <= 65536, "n_fft", "must be within [64, 65536]");
    require(o.hop >= 1 && o.hop <= o.n_fft, "hop", "must be within [1, n_fft]");
    require(o.n_mels >= 1 && o.n_mels <= 512, "n_mels", "must be within [1, 512]");
    const auto& t = c.beats.tempo;
    require(finite(t.bpm_min) && t.bpm_min > 0.0, "bpm_min", "must be positive");
    require(finite(t.bpm_max) && t.bpm_max <= 1000.0, "bpm_max", "must be at most 1000");
    require(t.bpm_min < t.bpm_max, "bpm range", "needs bpm_min < bpm_max");
    require(finite(t.prior_bpm) && t.prior_bpm > 0.0, "prior_bpm", "must be positive");
    require(finite(c.beats.tightness) && c.beats.tightness >= 0.0, "tightness", "must be non-negative");
    require(finite(c.motion.sigma_frames) && c.motion.sigma_frames > 0.0 && c.motion.sigma_frames <= 100.0,
            "sigma_frames", "must be within (0, 100]");
    require(c.motion.peaks.min_distance_frames >= 1, "min_distance", "must be at least 1");
    require(finite(c.motion.peaks.threshold_rel) && c.motion.peaks.threshold_rel >= 0.0 &&
                c.motion.peaks.threshold_rel < 1.0,
            "threshold_rel", "must be within [0, 1)");
    require(finite(c.output_fps) && c.output_fps >= 0.0 && c.output_fps <= 1000.0, "output_fps",
            "must be within [0, 1000]");
    require(c.backend == "hold" || c.backend == "crossfade" || c.backend == "timewarp" || c.backend == "external",
            "backend", "must be one of hold, crossfade, timewarp, external");
    require(c.backend != "external" || !c.command.empty(), "command", "is required by the external backend");
    require(finite(c.beat_align_sigma) && c.beat_align_sigma > 0.0, "beat_align_sigma", "must be positive");
    require(finite(c.segment_seconds) && c.segment_seconds >= 0.0, "segment_seconds", "must be non-negative");
}

PipelineConfig apply_config_json(const Json& j, PipelineConfig base) {
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
    }
    const auto& table = setters();
    for (const auto& [key, value] : j.items()) {
        const auto it = table.find(key);
        if (it == table.end()) {
            throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        }
        it->second(base, value);
    }
    return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    Json j;
    try {
        j = io::read_json(path);
    } catch (const Error& e) {
        throw Error(e.code() == ErrorCode::SchemaMismatch ? ErrorCode::InvalidArgument : e.code(),
                    "config " + path.string() + ": " + e.what());
    }
    return apply_config_json(j, std::move(base));
}

Json to_json(const PipelineConfig& c) {
    Json j;
    j["n_fft"] = c.beats.onset.n_fft;
    j["hop"] = c.beats.onset.hop;
    j["n_mels"] = c.beats.onset.n_mels;
    j["bpm_min"] = c.beats.tempo.bpm_min;
    j["bpm_max"] = c.beats.tempo.bpm_max;
    j["prior_bpm"] = c.beats.tempo.prior_bpm;
    j["tightness"] = c.beats.tightness;
    j["sigma_frames"] = c.motion.sigma_frames;
    j["min_distance"] = c.motion.peaks.min_distance_frames;
    j["threshold_rel"] = c.motion.peaks.threshold_rel;
    j["output_fps"] = c.output_fps;
    j["backend"] = c.backend;
    j["command"] = c.command;
    j["job_dir"] = c.job_dir;
    j["beat_align_sigma"] = c.beat_align_sigma;
    j["transposed"] = c.transposed;
    j["eq1_strict"] = c.eq1_strict;
    j["blend"] = c.blend;
    j["segment_seconds"] = c.segment_seconds;
    return j;
}

}  // namespace mvaa
