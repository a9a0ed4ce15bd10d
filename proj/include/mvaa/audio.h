#pragma once

#include "mvaa/media.h"

#include <vector>

namespace mvaa::audio {

inline constexpr double kAnalysisSampleRate = 22050.0;

struct OnsetParams {
    int n_fft = 2048;
    int hop = 512;
    int n_mels = 64;
    double local_mean_seconds = 0.37;
};

// Half-wave-rectified log-mel spectral flux, one value per analysis frame.
// Frame t is stamped at start_offset + t * hop_seconds.
struct OnsetEnvelope {
    std::vector<double> values;
    double hop_seconds = 0.0;
    double start_offset = 0.0;
    double duration = 0.0;  // audio duration the envelope was computed from

    double frame_time(std::size_t t) const { return start_offset + static_cast<double>(t) * hop_seconds; }
};

struct TempoParams {
    double bpm_min = 60.0;
    double bpm_max = 180.0;
    double prior_bpm = 120.0;
    double prior_octaves = 1.0;
};

struct TempoEstimate {
    double period = 0.0;  // seconds per beat
    double bpm = 0.0;
    double confidence = 0.0;
};

struct BeatGrid {
    std::vector<double> beats;  // strictly increasing, seconds
    double bpm = 0.0;
    double duration = 0.0;

    std::size_t size() const { return beats.size(); }
};

// Band-limited (windowed sinc) sample-rate conversion.
AudioTrack resample(const AudioTrack& track, double target_rate);

// Resamples to the analysis rate when needed, then computes the envelope.
OnsetEnvelope onset_envelope(const AudioTrack& track, const OnsetParams& params = {});

TempoEstimate estimate_tempo(const OnsetEnvelope& env, const TempoParams& params = {});

// With trim, weak beats at either end of the chain (strength at most half
// the RMS beat strength) are dropped.
BeatGrid track_beats(const OnsetEnvelope& env, const TempoEstimate& tempo, double tightness = 100.0,
                     bool trim = true);

struct BeatParams {
    OnsetParams onset;
    TempoParams tempo;
    double tightness = 100.0;
    bool trim = true;
};

BeatGrid extract_beats(const AudioTrack& track, const BeatParams& params = {});

}  // namespace mvaa::audio
