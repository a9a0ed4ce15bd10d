#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvaa {

// Mono audio. Samples are finite and within [-1, 1].
struct AudioTrack {
    std::vector<float> samples;
    double sample_rate = 0.0;

    double duration() const {
        return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Interleaved 8-bit RGB image, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t* at(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int x, int y) const {
        return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    bool same_size(const Image& other) const { return width == other.width && height == other.height; }

    friend bool operator==(const Image&, const Image&) = default;
};

struct FrameSequence {
    std::vector<Image> frames;
    double fps = 0.0;

    std::size_t size() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }

    // Timestamp of the last frame, (L - 1) / fps.
    double last_frame_time() const {
        return frames.empty() ? 0.0 : static_cast<double>(frames.size() - 1) / fps;
    }
    // Container duration, L / fps.
    double duration() const { return static_cast<double>(frames.size()) / fps; }

    friend bool operator==(const FrameSequence&, const FrameSequence&) = default;
};

// Throws Error(EmptySequence | MixedDimensions | InvalidArgument) when the
// sequence breaks its invariants.
void validate(const FrameSequence& seq);

}  // namespace mvaa
