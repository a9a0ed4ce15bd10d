#include "fixtures.h"

#include "mvaa/io.h"

#include <cmath>
#include <numbers>
#include <random>
#include <unistd.h>

namespace fixtures {

mvaa::AudioTrack click_track(double bpm, double seconds, double sample_rate, double first_click) {
    mvaa::AudioTrack t;
    t.sample_rate = sample_rate;
    t.samples.assign(static_cast<std::size_t>(std::llround(seconds * sample_rate)), 0.0f);
    const auto click_len = static_cast<std::size_t>(0.03 * sample_rate);
    for (double c : click_times(bpm, seconds, first_click)) {
        const auto start = static_cast<std::size_t>(std::llround(c * sample_rate));
        for (std::size_t i = 0; i < click_len && start + i < t.samples.size(); ++i) {
            const double x = static_cast<double>(i) / sample_rate;
            t.samples[start + i] += static_cast<float>(0.8 * std::exp(-x / 0.005) *
                                                       std::sin(2.0 * std::numbers::pi * 1000.0 * x));
        }
    }
    return t;
}

std::vector<double> click_times(double bpm, double seconds, double first_click) {
    std::vector<double> times;
    const double period = 60.0 / bpm;
    for (int k = 0;; ++k) {
        const double c = first_click + k * period;
        if (c >= seconds) {
            break;
        }
        times.push_back(c);
    }
    return times;
}

mvaa::FrameSequence impulse_video(int frames, const std::vector<int>& impulse_frames, double fps, int size) {
    mvaa::FrameSequence v;
    v.fps = fps;
    const int square = size / 4;
    int pos = 0;
    for (int f = 0; f < frames; ++f) {
        for (int i : impulse_frames) {
            if (i == f) {
                pos = (pos + 1) % 3;
            }
        }
        mvaa::Image img(size, size, 128);
        const int x0 = square / 2 + pos * square;
        const int y0 = size / 2 - square / 2;
        for (int y = y0; y < y0 + square; ++y) {
            for (int x = x0; x < x0 + square; ++x) {
                std::uint8_t* p = img.at(x, y);
                p[0] = static_cast<std::uint8_t>(((x + y) % 2) ? 250 : 10);
                p[1] = 30;
                p[2] = 220;
            }
        }
        v.frames.push_back(std::move(img));
    }
    return v;
}

mvaa::Image noise_image(int width, int height, unsigned seed) {
    std::mt19937 rng(seed);
    mvaa::Image img(width, height);
    for (auto& b : img.rgb) {
        b = static_cast<std::uint8_t>(rng() & 0xff);
    }
    return img;
}

mvaa::FrameSequence noise_video(int frames, int width, int height, double fps, unsigned seed) {
    mvaa::FrameSequence v;
    v.fps = fps;
    for (int f = 0; f < frames; ++f) {
        v.frames.push_back(noise_image(width, height, seed + static_cast<unsigned>(f) * 7919u));
    }
    return v;
}

SyncFixture write_sync_fixture(const std::filesystem::path& dir) {
    SyncFixture fx;
    const int offsets[6] = {5, 3, 4, 5, 4, 3};
    for (int k = 0; k < 16; ++k) {
        fx.pulse_frames.push_back(8 * k + offsets[k % 6]);
    }
    fx.beats = click_times(120.0, 8.25, 0.5);
    fx.audio = dir / "music.wav";
    fx.video = dir / "video";
    mvaa::io::save_wav(click_track(120.0, 8.25, 22050.0, 0.5), fx.audio);
    mvaa::io::save_frames(impulse_video(130, fx.pulse_frames, 16.0), fx.video);
    return fx;
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("mvaa_test_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
