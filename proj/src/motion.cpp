#include "mvaa/motion.h"

#include "mvaa/error.h"
#include "mvaa/parallel.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace mvaa::motion {

namespace {

// Half-sample symmetric extension: d c b a | a b c d | d c b a.
std::size_t reflect_index(long long i, long long n) {
    const long long period = 2 * n;
    long long m = i % period;
    if (m < 0) {
        m += period;
    }
    return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

}  // namespace

MotionEnergy motion_energy(const FrameSequence& video) {
    if (video.size() < 2) {
        throw Error(ErrorCode::TooFewFrames, "motion energy needs at least 2 frames");
    }
    validate(video);
    MotionEnergy energy;
    energy.fps = video.fps;
    energy.values.assign(video.size() - 1, 0.0);
    const std::size_t channels = video.frames.front().rgb.size();
    parallel_for(energy.values.size(), [&](std::size_t i) {
        const auto& a = video.frames[i].rgb;
        const auto& b = video.frames[i + 1].rgb;
        std::uint64_t total = 0;
        for (std::size_t c = 0; c < channels; ++c) {
            total += static_cast<std::uint64_t>(std::abs(static_cast<int>(b[c]) - static_cast<int>(a[c])));
        }
        energy.values[i] = static_cast<double>(total) / static_cast<double>(channels);
    });
    return energy;
}

std::vector<double> gaussian_kernel(double sigma_frames) {
    if (!(sigma_frames > 0.0) || !std::isfinite(sigma_frames)) {
        throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    }
    const auto radius = static_cast<long long>(4.0 * sigma_frames + 0.5);
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    for (long long k = -radius; k <= radius; ++k) {
        const double x = static_cast<double>(k) / sigma_frames;
        kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * x * x);
    }
    const double sum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    for (double& w : kernel) {
        w /= sum;
    }
    return kernel;
}

MotionEnergy smooth(const MotionEnergy& energy, double sigma_frames) {
    const std::vector<double> kernel = gaussian_kernel(sigma_frames);
    MotionEnergy out = energy;
    out.smoothed = true;
    const auto n = static_cast<long long>(energy.values.size());
    if (n <= 1) {
        return out;
    }
    const auto radius = static_cast<long long>(kernel.size() / 2);
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long long k = -radius; k <= radius; ++k) {
            acc += kernel[static_cast<std::size_t>(k + radius)] * energy.values[reflect_index(i + k, n)];
        }
        out.values[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

PeakSet find_peaks(const MotionEnergy& energy, const PeakParams& params) {
    if (!energy.smoothed) {
        throw Error(ErrorCode::UnsmoothedInput, "peak picking requires a smoothed motion signal");
    }
    if (params.min_distance_frames < 1 || params.threshold_rel < 0.0 || params.threshold_rel > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "min_distance must be >= 1 and threshold_rel in [0, 1]");
    }
    PeakSet peaks;
    peaks.fps = energy.fps;
    const auto& v = energy.values;
    if (v.size() < 3) {
        return peaks;
    }
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double floor = *lo_it + params.threshold_rel * (*hi_it - *lo_it);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= floor) {
            candidates.push_back(i);
        }
    }

    // Strongest first, earlier index on ties; each kept peak suppresses
    // candidates closer than min_distance.
    std::vector<std::size_t> order = candidates;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    std::vector<std::size_t> kept;
    for (const std::size_t c : order) {
        const bool clear = std::none_of(kept.begin(), kept.end(), [&](std::size_t k) {
            const std::size_t d = c > k ? c - k : k - c;
            return d < static_cast<std::size_t>(params.min_distance_frames);
        });
        if (clear) {
            kept.push_back(c);
        }
    }
    std::sort(kept.begin(), kept.end());

    for (const std::size_t i : kept) {
        const int frame = static_cast<int>(i + 1);
        peaks.peak_frames.push_back(frame);
        peaks.peak_times.push_back(static_cast<double>(frame) / energy.fps);
        peaks.peak_values.push_back(v[i]);
    }
    return peaks;
}

PeakSet extract_peaks(const FrameSequence& video, const MotionParams& params) {
    return find_peaks(smooth(motion_energy(video), params.sigma_frames), params.peaks);
}

}  // namespace mvaa::motion
