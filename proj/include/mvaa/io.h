#pragma once

#include "mvaa/media.h"

#include <filesystem>

namespace mvaa::io {

// RIFF/WAVE, PCM 16-bit or IEEE float 32-bit, one or two channels.
// Stereo is averaged to mono; 16-bit samples are scaled by 1/32768.
AudioTrack load_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Samples are rounded and saturated.
void save_wav(const AudioTrack& track, const std::filesystem::path& path);

// Either a YUV4MPEG2 file (*.y4m) or a directory of numbered PNG files with
// an fps.txt sidecar.
FrameSequence load_frames(const std::filesystem::path& path);

// *.y4m paths produce a 4:2:0 stream, everything else a PNG directory with
// files 000001.png, 000002.png, ... and fps.txt.
void save_frames(const FrameSequence& seq, const std::filesystem::path& path);

// Numbered PNG files from a directory, fps supplied by the caller.
FrameSequence load_png_directory(const std::filesystem::path& dir, double fps);

Image load_png(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

FrameSequence load_y4m(const std::filesystem::path& path);
void save_y4m(const FrameSequence& seq, const std::filesystem::path& path);

}  // namespace mvaa::io
