#pragma once

#include "mvaa/media.h"

#include <vector>

namespace mvaa::motion {

// values[i] describes the transition from frame i to frame i + 1 and is
// stamped at (i + 1) / fps.
struct MotionEnergy {
    std::vector<double> values;
    double fps = 0.0;
    bool smoothed = false;
};

struct PeakSet {
    std::vector<double> peak_times;  // strictly increasing, peak_frames[k] / fps
    std::vector<int> peak_frames;    // in [1, L - 1]
    std::vector<double> peak_values;
    double fps = 0.0;

    std::size_t size() const { return peak_times.size(); }
};

struct PeakParams {
    int min_distance_frames = 3;
    double threshold_rel = 0.1;
};

// Mean absolute RGB difference between consecutive frames, in 0-255 units.
MotionEnergy motion_energy(const FrameSequence& video);

// Normalised Gaussian kernel with radius round(4 sigma).
std::vector<double> gaussian_kernel(double sigma_frames);

// Gaussian convolution with half-sample symmetric ("reflect") boundaries.
MotionEnergy smooth(const MotionEnergy& energy, double sigma_frames = 2.0);

PeakSet find_peaks(const MotionEnergy& energy, const PeakParams& params = {});

struct MotionParams {
    double sigma_frames = 2.0;
    PeakParams peaks;
};

PeakSet extract_peaks(const FrameSequence& video, const MotionParams& params = {});

}  // namespace mvaa::motion
