#pragma once

#include "mvaa/align.h"
#include "mvaa/audio.h"
#include "mvaa/json_fixed.h"
#include "mvaa/metrics.h"
#include "mvaa/motion.h"

#include <filesystem>
#include <optional>

namespace mvaa::io {

Json to_json(const audio::BeatGrid& grid);
Json to_json(const motion::PeakSet& peaks, const motion::MotionEnergy* energy = nullptr);
Json to_json(const align::AlignmentPlan& plan);
Json to_json(const align::RetimingMap& map);
Json to_json(const metrics::EvalReport& report);

audio::BeatGrid beat_grid_from_json(const Json& j);
motion::PeakSet peak_set_from_json(const Json& j);
align::AlignmentPlan plan_from_json(const Json& j);
align::RetimingMap retiming_from_json(const Json& j);
metrics::EvalReport report_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

align::AlignmentPlan read_plan(const std::filesystem::path& path);
void write_plan(const align::AlignmentPlan& plan, const std::filesystem::path& path);

align::RetimingMap read_retiming(const std::filesystem::path& path);
void write_retiming(const align::RetimingMap& map, const std::filesystem::path& path);

}  // namespace mvaa::io
