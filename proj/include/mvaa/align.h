#pragma once

#include "mvaa/audio.h"
#include "mvaa/media.h"
#include "mvaa/motion.h"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mvaa::align {

struct MatchedPair {
    double beat_time = 0.0;
    double peak_time = 0.0;
    int peak_frame = 0;
    int beat_index = -1;  // position in the beat grid, -1 when unknown
    int peak_index = -1;  // position in the peak set, -1 when unknown

    friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct AlignmentPlan {
    std::vector<MatchedPair> pairs;
    double total_cost = 0.0;
    double source_fps = 0.0;
    double music_duration = 0.0;

    std::size_t k() const { return pairs.size(); }

    friend bool operator==(const AlignmentPlan&, const AlignmentPlan&) = default;
};

struct Anchor {
    int frame = 0;             // output frame index
    double source_time = 0.0;  // seconds into the source video

    friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct RetimingMap {
    std::vector<Anchor> anchors;
    int length = 0;  // output frame count
    double fps = 0.0;

    friend bool operator==(const RetimingMap&, const RetimingMap&) = default;
};

struct MatchOptions {
    // Match beats b_1..b_K in order when there are more beats than peaks,
    // instead of choosing the optimal beat subset.
    bool eq1_strict = false;
};

// (beat index, peak index) pairs, increasing in both coordinates.
using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;

// Sum of |b - v| over the assignment, accumulated from the last pair to the
// first. Both solvers report costs through this function.
double assignment_cost(std::span<const double> beats, std::span<const double> peaks,
                       const Assignment& assignment);

// Optimal monotone injective matching of min(M, N) pairs, O(M N) dynamic
// program. Ties resolve to the lexicographically smallest index sequence on
// the longer side.
Assignment match_times(std::span<const double> beats, std::span<const double> peaks,
                       const MatchOptions& options = {});

// Exhaustive enumeration with the same objective and tie-break. K <= 10.
Assignment match_times_bruteforce(std::span<const double> beats, std::span<const double> peaks,
                                  const MatchOptions& options = {});

AlignmentPlan match(const audio::BeatGrid& beats, const motion::PeakSet& peaks,
                    const MatchOptions& options = {});

AlignmentPlan match_bruteforce(const audio::BeatGrid& beats, const motion::PeakSet& peaks,
                               const MatchOptions& options = {});

int round_half_up(double x);

RetimingMap build_retiming(const AlignmentPlan& plan, std::size_t source_frames, double source_fps,
                           double music_duration, double output_fps);

RetimingMap build_retiming(const AlignmentPlan& plan, const FrameSequence& video, double music_duration,
                           double output_fps);

// Throws Error(InvalidArgument) unless the map is well formed for a source of
// the given container duration.
void validate(const RetimingMap& map, double source_duration);

// Piecewise-linear source time at output frame f.
double source_time_at(const RetimingMap& map, int frame);

}  // namespace mvaa::align
