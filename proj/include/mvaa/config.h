#pragma once

#include "mvaa/audio.h"
#include "mvaa/json_fixed.h"
#include "mvaa/motion.h"

#include <filesystem>
#include <string>

namespace mvaa {

struct PipelineConfig {
    audio::BeatParams beats;
    motion::MotionParams motion;
    double output_fps = 0.0;  // 0 keeps the source frame rate
    std::string backend = "timewarp";
    std::string command;  // external backend only
    std::string job_dir;  // external backend only
    double beat_align_sigma = 0.1;
    bool transposed = false;
    bool eq1_strict = false;
    bool blend = false;
    double segment_seconds = 0.0;  // 0 renders the whole track at once
};

// Throws Error(InvalidArgument) naming the first out-of-range field.
void validate(const PipelineConfig& config);

// Overlays the keys of a JSON object onto base. Unknown keys and wrongly
// typed values are rejected.
PipelineConfig apply_config_json(const Json& j, PipelineConfig base = {});

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

Json to_json(const PipelineConfig& config);

}  // namespace mvaa
