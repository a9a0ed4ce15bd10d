#include "mvaa/align.h"

#include "mvaa/error.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mvaa::align {

namespace {

constexpr std::size_t kBruteforceMaxK = 10;
constexpr double kBruteforceMaxCombinations = 5e6;

void check_times(std::span<const double> times, const char* what) {
    if (times.empty()) {
        throw Error(ErrorCode::EmptyInput, std::string(what) + " are empty");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) {
            throw Error(ErrorCode::InvalidArgument, std::string(what) + " contain a non-finite time");
        }
        if (i > 0 && !(times[i] > times[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be strictly increasing");
        }
    }
}

// Every element of `shorter` is matched to a distinct element of `longer`,
// order preserved. Returns (shorter index, longer index) pairs.
Assignment solve_dp(std::span<const double> shorter, std::span<const double> longer) {
    const std::size_t k = shorter.size();
    const std::size_t n = longer.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const std::size_t stride = n + 1;
    // best[i][j]: minimum cost of matching shorter[i..] into longer[j..].
    std::vector<double> best((k + 1) * stride, kInf);
    std::vector<unsigned char> take(k * stride, 0);
    for (std::size_t j = 0; j <= n; ++j) {
        best[k * stride + j] = 0.0;
    }
    for (std::size_t i = k; i-- > 0;) {
        for (std::size_t j = n; j-- > 0;) {
            if (n - j < k - i) {
                continue;
            }
            const double skip = best[i * stride + j + 1];
            const double with = std::abs(shorter[i] - longer[j]) + best[(i + 1) * stride + j + 1];
            // Matching at the smaller index wins ties: lexicographic order.
            if (with <= skip) {
                best[i * stride + j] = with;
                take[i * stride + j] = 1;
            } else {
                best[i * stride + j] = skip;
            }
        }
    }
    Assignment out;
    out.reserve(k);
    for (std::size_t i = 0, j = 0; i < k; ++j) {
        if (take[i * stride + j]) {
            out.emplace_back(i, j);
            ++i;
        }
    }
    return out;
}

double combinations(std::size_t n, std::size_t k) {
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    return c;
}

Assignment solve_bruteforce(std::span<const double> shorter, std::span<const double> longer) {
    const std::size_t k = shorter.size();
    const std::size_t n = longer.size();
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) {
        pick[i] = i;
    }
    Assignment best;
    double best_cost = std::numeric_limits<double>::infinity();
    Assignment current(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) {
            current[i] = {i, pick[i]};
        }
        const double cost = assignment_cost(shorter, longer, current);
        if (cost < best_cost) {
            best_cost = cost;
            best = current;
        }
        // Next combination in lexicographic order.
        std::size_t i = k;
        while (i > 0 && pick[i - 1] == n - k + (i - 1)) {
            --i;
        }
        if (i == 0) {
            break;
        }
        ++pick[i - 1];
        for (std::size_t j = i; j < k; ++j) {
            pick[j] = pick[j - 1] + 1;
        }
    }
    return best;
}

Assignment swap_sides(const Assignment& a) {
    Assignment out;
    out.reserve(a.size());
    for (const auto& [x, y] : a) {
        out.emplace_back(y, x);
    }
    return out;
}

Assignment strict_prefix(std::size_t k) {
    Assignment out;
    for (std::size_t i = 0; i < k; ++i) {
        out.emplace_back(i, i);
    }
    return out;
}

template <typename Solver>
Assignment dispatch(std::span<const double> beats, std::span<const double> peaks, const MatchOptions& options,
                    Solver&& solver) {
    check_times(beats, "beats");
    check_times(peaks, "peaks");
    if (beats.size() <= peaks.size()) {
        return solver(beats, peaks);
    }
    if (options.eq1_strict) {
        return strict_prefix(peaks.size());
    }
    return swap_sides(solver(peaks, beats));
}

AlignmentPlan make_plan(const audio::BeatGrid& beats, const motion::PeakSet& peaks, const Assignment& a) {
    AlignmentPlan plan;
    plan.source_fps = peaks.fps;
    plan.music_duration = beats.duration;
    plan.pairs.reserve(a.size());
    for (const auto& [bi, pi] : a) {
        MatchedPair p;
        p.beat_time = beats.beats[bi];
        p.peak_time = peaks.peak_times[pi];
        p.peak_frame = pi < peaks.peak_frames.size() ? peaks.peak_frames[pi] : 0;
        p.beat_index = static_cast<int>(bi);
        p.peak_index = static_cast<int>(pi);
        plan.pairs.push_back(p);
    }
    plan.total_cost = assignment_cost(beats.beats, peaks.peak_times, a);
    return plan;
}

}  // namespace

double assignment_cost(std::span<const double> beats, std::span<const double> peaks, const Assignment& assignment) {
    double acc = 0.0;
    for (auto it = assignment.rbegin(); it != assignment.rend(); ++it) {
        acc = std::abs(beats[it->first] - peaks[it->second]) + acc;
    }
    return acc;
}

Assignment match_times(std::span<const double> beats, std::span<const double> peaks, const MatchOptions& options) {
    return dispatch(beats, peaks, options, solve_dp);
}

Assignment match_times_bruteforce(std::span<const double> beats, std::span<const double> peaks,
                                  const MatchOptions& options) {
    const std::size_t k = std::min(beats.size(), peaks.size());
    const std::size_t n = std::max(beats.size(), peaks.size());
    if (k > kBruteforceMaxK || combinations(n, k) > kBruteforceMaxCombinations) {
        throw Error(ErrorCode::InstanceTooLarge, "exhaustive matching limited to K <= 10 and 5e6 subsets");
    }
    return dispatch(beats, peaks, options, solve_bruteforce);
}

AlignmentPlan match(const audio::BeatGrid& beats, const motion::PeakSet& peaks, const MatchOptions& options) {
    return make_plan(beats, peaks, match_times(beats.beats, peaks.peak_times, options));
}

AlignmentPlan match_bruteforce(const audio::BeatGrid& beats, const motion::PeakSet& peaks,
                               const MatchOptions& options) {
    return make_plan(beats, peaks, match_times_bruteforce(beats.beats, peaks.peak_times, options));
}

int round_half_up(double x) {
    return static_cast<int>(std::floor(x + 0.5));
}

RetimingMap build_retiming(const AlignmentPlan& plan, std::size_t source_frames, double source_fps,
                           double music_duration, double output_fps) {
    if (!(output_fps > 0.0) || !(source_fps > 0.0) || source_frames == 0 || !(music_duration >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "retiming needs positive fps, frames and a music duration");
    }
    RetimingMap map;
    map.fps = output_fps;
    map.length = round_half_up(music_duration * output_fps);
    if (map.length < 2) {
        throw Error(ErrorCode::NoUsableAnchors, "output would have fewer than 2 frames");
    }
    const double input_duration = static_cast<double>(source_frames - 1) / source_fps;

    struct Candidate {
        Anchor anchor;
        double error;
    };
    std::vector<Candidate> candidates;
    for (const auto& p : plan.pairs) {
        if (p.peak_time < 0.0 || p.peak_time > input_duration + 1e-9) {
            throw Error(ErrorCode::InvalidArgument, "plan references a peak outside the source video");
        }
        const Candidate c{{round_half_up(p.beat_time * output_fps), std::min(p.peak_time, input_duration)},
                          std::abs(p.beat_time - p.peak_time)};
        if (!candidates.empty() && candidates.back().anchor.frame == c.anchor.frame) {
            if (c.error < candidates.back().error) {
                candidates.back() = c;
            }
            continue;
        }
        candidates.push_back(c);
    }

    map.anchors.push_back({0, 0.0});
    for (const auto& c : candidates) {
        const Anchor& last = map.anchors.back();
        if (c.anchor.frame <= last.frame || c.anchor.frame >= map.length - 1 ||
            c.anchor.source_time < last.source_time) {
            continue;
        }
        map.anchors.push_back(c.anchor);
    }
    map.anchors.push_back({map.length - 1, input_duration});
    return map;
}

RetimingMap build_retiming(const AlignmentPlan& plan, const FrameSequence& video, double music_duration,
                           double output_fps) {
    return build_retiming(plan, video.size(), video.fps, music_duration, output_fps);
}

void validate(const RetimingMap& map, double source_duration) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "retiming map: " + what); };
    if (map.length < 2) {
        fail("length must be at least 2");
    }
    if (!(map.fps > 0.0)) {
        fail("fps must be positive");
    }
    if (map.anchors.size() < 2) {
        fail("needs at least the two boundary anchors");
    }
    if (map.anchors.front().frame != 0 || map.anchors.back().frame != map.length - 1) {
        fail("first anchor must be frame 0 and last anchor frame length - 1");
    }
    for (std::size_t i = 0; i < map.anchors.size(); ++i) {
        const Anchor& a = map.anchors[i];
        if (!std::isfinite(a.source_time) || a.source_time < 0.0 || a.source_time > source_duration + 1e-9) {
            fail("source time out of range at anchor " + std::to_string(i));
        }
        if (i > 0) {
            if (a.frame <= map.anchors[i - 1].frame) {
                fail("anchor frames must be strictly increasing");
            }
            if (a.source_time < map.anchors[i - 1].source_time) {
                fail("anchor source times must be non-decreasing");
            }
        }
    }
}

double source_time_at(const RetimingMap& map, int frame) {
    const auto& a = map.anchors;
    if (frame <= a.front().frame) {
        return a.front().source_time;
    }
    if (frame >= a.back().frame) {
        return a.back().source_time;
    }
    const auto upper = std::upper_bound(a.begin(), a.end(), frame,
                                        [](int f, const Anchor& anchor) { return f < anchor.frame; });
    const Anchor& right = *upper;
    const Anchor& left = *(upper - 1);
    const double w = static_cast<double>(frame - left.frame) / static_cast<double>(right.frame - left.frame);
    return left.source_time + w * (right.source_time - left.source_time);
}

}  // namespace mvaa::align
