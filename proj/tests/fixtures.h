#pragma once

#include "mvaa/media.h"

#include <filesystem>
#include <vector>

namespace fixtures {

// Decaying 1 kHz clicks at first_click + k * 60 / bpm.
mvaa::AudioTrack click_track(double bpm, double seconds, double sample_rate = 22050.0, double first_click = 0.0);

std::vector<double> click_times(double bpm, double seconds, double first_click = 0.0);

// Grey background with a textured square that jumps to a new position at
// each listed frame and rests otherwise.
mvaa::FrameSequence impulse_video(int frames, const std::vector<int>& impulse_frames, double fps = 16.0,
                                  int size = 64);

// End-to-end synchrony inputs: a 120 BPM click track with clicks at
// 0.5, 1.0, ..., 8.0 s (8.25 s long) and a 130-frame 16 fps video with one
// pulse per beat, each 3-5 frames past a half-second grid line and so never
// within 0.18 s of a beat. Writes music.wav and video/ (PNG) into dir.
struct SyncFixture {
    std::filesystem::path audio;
    std::filesystem::path video;
    std::vector<double> beats;
    std::vector<int> pulse_frames;
};

SyncFixture write_sync_fixture(const std::filesystem::path& dir);

// Deterministic random RGB frames.
mvaa::FrameSequence noise_video(int frames, int width, int height, double fps, unsigned seed);

mvaa::Image noise_image(int width, int height, unsigned seed);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace fixtures
