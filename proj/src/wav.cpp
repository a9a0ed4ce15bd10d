#include "mvaa/error.h"
#include "mvaa/io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

namespace mvaa::io {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

struct WavFormat {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

WavFormat parse_fmt(const std::uint8_t* p, std::uint32_t size) {
    if (size < 16) {
        throw Error(ErrorCode::CorruptHeader, "fmt chunk shorter than 16 bytes");
    }
    WavFormat fmt;
    fmt.format = read_u16(p);
    fmt.channels = read_u16(p + 2);
    fmt.sample_rate = read_u32(p + 4);
    fmt.block_align = read_u16(p + 12);
    fmt.bits = read_u16(p + 14);
    if (fmt.format == kFormatExtensible) {
        if (size < 40) {
            throw Error(ErrorCode::CorruptHeader, "extensible fmt chunk shorter than 40 bytes");
        }
        // First two bytes of the sub-format GUID carry the plain format tag.
        fmt.format = read_u16(p + 24);
    }
    return fmt;
}

}  // namespace

AudioTrack load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error(ErrorCode::CorruptHeader, path.string() + " is not a RIFF/WAVE file");
    }

    std::optional<WavFormat> fmt;
    const std::uint8_t* data = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* hdr = bytes.data() + pos;
        const std::uint32_t size = read_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body) {
            throw Error(ErrorCode::CorruptHeader, "chunk '" + std::string(hdr, hdr + 4) +
                                                      "' runs past end of file");
        }
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            fmt = parse_fmt(bytes.data() + body, size);
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = size;
        }
        pos = body + size + (size & 1u);
    }

    if (!fmt) {
        throw Error(ErrorCode::CorruptHeader, "missing fmt chunk");
    }
    if (data == nullptr) {
        throw Error(ErrorCode::CorruptHeader, "missing data chunk");
    }
    const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
    const bool float32 = fmt->format == kFormatFloat && fmt->bits == 32;
    if (!pcm16 && !float32) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "format tag " + std::to_string(fmt->format) + " with " +
                        std::to_string(fmt->bits) + " bits; need PCM 16-bit or float 32-bit");
    }
    if (fmt->channels < 1 || fmt->channels > 2) {
        throw Error(ErrorCode::UnsupportedFormat,
                    std::to_string(fmt->channels) + " channels; need 1 or 2");
    }
    if (fmt->sample_rate == 0) {
        throw Error(ErrorCode::CorruptHeader, "sample rate is zero");
    }
    const std::size_t bytes_per_sample = fmt->bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
    if (fmt->block_align != frame_bytes) {
        throw Error(ErrorCode::CorruptHeader, "block align disagrees with channels and bit depth");
    }
    if (data_size % frame_bytes != 0) {
        throw Error(ErrorCode::CorruptHeader, "data chunk holds a partial sample frame");
    }

    const std::size_t frames = data_size / frame_bytes;
    AudioTrack track;
    track.sample_rate = fmt->sample_rate;
    track.samples.resize(frames);

    auto sample_at = [&](std::size_t frame, std::size_t ch) -> double {
        const std::uint8_t* p = data + frame * frame_bytes + ch * bytes_per_sample;
        if (pcm16) {
            return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
        }
        const double v = std::bit_cast<float>(read_u32(p));
        if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
            throw Error(ErrorCode::InvalidData,
                        "float sample outside [-1, 1] at frame " + std::to_string(frame));
        }
        return v;
    };

    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t ch = 0; ch < fmt->channels; ++ch) {
            acc += sample_at(i, ch);
        }
        track.samples[i] = static_cast<float>(acc / fmt->channels);
    }
    return track;
}

void save_wav(const AudioTrack& track, const std::filesystem::path& path) {
    if (track.sample_rate <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
    }
    const auto data_bytes = static_cast<std::uint32_t>(track.samples.size() * 2);
    const auto rate = static_cast<std::uint32_t>(std::lround(track.sample_rate));

    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    put_u32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);
    put_u32(out, rate);
    put_u32(out, rate * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out += "data";
    put_u32(out, data_bytes);
    for (const float s : track.samples) {
        const long q = std::clamp(std::lround(static_cast<double>(s) * 32768.0), -32768L, 32767L);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }

    std::ofstream f(path, std::ios::binary);
    if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
}

}  // namespace mvaa::io
