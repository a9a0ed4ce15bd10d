#include "mvaa/error.h"
#include "mvaa/io.h"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>

namespace mvaa {

void validate(const FrameSequence& seq) {
    if (seq.frames.empty()) {
        throw Error(ErrorCode::EmptySequence, "frame sequence has no frames");
    }
    if (!(seq.fps > 0.0) || !std::isfinite(seq.fps)) {
        throw Error(ErrorCode::InvalidArgument, "fps must be positive");
    }
    const Image& first = seq.frames.front();
    if (first.width <= 0 || first.height <= 0) {
        throw Error(ErrorCode::InvalidArgument, "frames must have positive dimensions");
    }
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const Image& f = seq.frames[i];
        if (!f.same_size(first)) {
            throw Error(ErrorCode::MixedDimensions,
                        "frame " + std::to_string(i) + " is " + std::to_string(f.width) + "x" +
                            std::to_string(f.height) + ", expected " + std::to_string(first.width) +
                            "x" + std::to_string(first.height));
        }
        if (f.rgb.size() != f.pixel_count() * 3) {
            throw Error(ErrorCode::InvalidArgument, "frame " + std::to_string(i) + " buffer size mismatch");
        }
    }
}

namespace io {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFpsSidecar = "fps.txt";

std::uint8_t clamp_round(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

std::string format_shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

// Accepts "16", "29.97" or "30000/1001".
double parse_fps_text(const std::string& raw, const std::string& where) {
    const std::string text = trim(raw);
    double fps = 0.0;
    const auto slash = text.find('/');
    if (slash == std::string::npos) {
        if (!parse_double(text, fps)) {
            throw Error(ErrorCode::InvalidData, "cannot parse fps '" + text + "' in " + where);
        }
    } else {
        double num = 0.0;
        double den = 0.0;
        if (!parse_double(text.substr(0, slash), num) || !parse_double(text.substr(slash + 1), den) ||
            den == 0.0) {
            throw Error(ErrorCode::InvalidData, "cannot parse fps '" + text + "' in " + where);
        }
        fps = num / den;
    }
    if (!(fps > 0.0) || !std::isfinite(fps)) {
        throw Error(ErrorCode::InvalidData, "fps must be positive in " + where);
    }
    return fps;
}

bool is_numbered_png(const fs::path& p, long long& number) {
    if (p.extension() != ".png") {
        return false;
    }
    const std::string stem = p.stem().string();
    if (stem.empty() || stem.size() > 18 ||
        !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return false;
    }
    number = std::stoll(stem);
    return true;
}

std::vector<fs::path> numbered_pngs(const fs::path& dir) {
    std::vector<std::pair<long long, fs::path>> found;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        long long n = 0;
        if (entry.is_regular_file() && is_numbered_png(entry.path(), n)) {
            found.emplace_back(n, entry.path());
        }
    }
    if (ec) {
        throw Error(ErrorCode::IoFailure, "cannot list " + dir.string() + ": " + ec.message());
    }
    std::sort(found.begin(), found.end());
    std::vector<fs::path> out;
    out.reserve(found.size());
    for (auto& [n, p] : found) {
        out.push_back(std::move(p));
    }
    return out;
}

// BT.601 in either full (JPEG) or studio range.
struct YuvRange {
    bool full = false;
};

void yuv_to_rgb(double y, double u, double v, YuvRange range, std::uint8_t* out) {
    if (!range.full) {
        y = (y - 16.0) * (255.0 / 219.0);
        u = (u - 128.0) * (255.0 / 224.0);
        v = (v - 128.0) * (255.0 / 224.0);
    } else {
        u -= 128.0;
        v -= 128.0;
    }
    out[0] = clamp_round(y + 1.402 * v);
    out[1] = clamp_round(y - 0.344136 * u - 0.714136 * v);
    out[2] = clamp_round(y + 1.772 * u);
}

enum class ChromaLayout { C420, C422, C444, Mono };

struct Y4mHeader {
    int width = 0;
    int height = 0;
    double fps = 0.0;
    ChromaLayout chroma = ChromaLayout::C420;
    YuvRange range;
};

Y4mHeader parse_y4m_header(const std::string& line, const std::string& where) {
    std::istringstream tokens(line);
    std::string magic;
    tokens >> magic;
    if (magic != "YUV4MPEG2") {
        throw Error(ErrorCode::CorruptHeader, where + " does not start with YUV4MPEG2");
    }
    Y4mHeader h;
    std::string tok;
    while (tokens >> tok) {
        const char tag = tok[0];
        const std::string val = tok.substr(1);
        switch (tag) {
        case 'W': h.width = std::atoi(val.c_str()); break;
        case 'H': h.height = std::atoi(val.c_str()); break;
        case 'F': {
            const auto colon = val.find(':');
            if (colon == std::string::npos) {
                throw Error(ErrorCode::CorruptHeader, "bad frame rate token " + tok);
            }
            h.fps = parse_fps_text(val.substr(0, colon) + "/" + val.substr(colon + 1), where);
            break;
        }
        case 'C':
            if (val.rfind("420", 0) == 0) {
                h.chroma = ChromaLayout::C420;
            } else if (val.rfind("422", 0) == 0) {
                h.chroma = ChromaLayout::C422;
            } else if (val.rfind("444", 0) == 0 && val.find("alpha") == std::string::npos) {
                h.chroma = ChromaLayout::C444;
            } else if (val.rfind("mono", 0) == 0) {
                h.chroma = ChromaLayout::Mono;
            } else {
                throw Error(ErrorCode::UnsupportedFormat, "y4m colorspace " + val);
            }
            if (val.find("p10") != std::string::npos || val.find("p12") != std::string::npos ||
                val.find("p16") != std::string::npos) {
                throw Error(ErrorCode::UnsupportedFormat, "only 8-bit y4m is supported");
            }
            break;
        case 'X':
            if (val == "COLORRANGE=FULL") {
                h.range.full = true;
            } else if (val == "COLORRANGE=LIMITED") {
                h.range.full = false;
            }
            break;
        default:
            break;
        }
    }
    if (h.width <= 0 || h.height <= 0) {
        throw Error(ErrorCode::CorruptHeader, where + " lacks positive W/H");
    }
    if (h.fps <= 0.0) {
        throw Error(ErrorCode::CorruptHeader, where + " lacks an F frame-rate token");
    }
    return h;
}

std::string fps_rational(double fps) {
    const double rounded = std::round(fps);
    if (std::abs(fps - rounded) < 1e-9) {
        return std::to_string(static_cast<long long>(rounded)) + ":1";
    }
    const double ntsc = fps * 1001.0;
    if (std::abs(ntsc - std::round(ntsc)) < 1e-6) {
        return std::to_string(static_cast<long long>(std::round(ntsc))) + ":1001";
    }
    return std::to_string(static_cast<long long>(std::round(fps * 1000000.0))) + ":1000000";
}

}  // namespace

Image load_png(const fs::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw Error(ErrorCode::IoFailure, "cannot read PNG " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    png_color black{0, 0, 0};
    if (!png_image_finish_read(&img, &black, out.rgb.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw Error(ErrorCode::CorruptHeader, "cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

void save_png(const Image& image, const fs::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.rgb.data(), 0, nullptr)) {
        throw Error(ErrorCode::IoFailure, "cannot write PNG " + path.string() + ": " + img.message);
    }
}

FrameSequence load_png_directory(const fs::path& dir, double fps) {
    FrameSequence seq;
    seq.fps = fps;
    for (const auto& p : numbered_pngs(dir)) {
        seq.frames.push_back(load_png(p));
    }
    if (seq.frames.empty()) {
        throw Error(ErrorCode::EmptySequence, "no numbered PNG files in " + dir.string());
    }
    validate(seq);
    return seq;
}

FrameSequence load_y4m(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::CorruptHeader, path.string() + " is empty");
    }
    const Y4mHeader h = parse_y4m_header(line, path.string());

    const std::size_t w = static_cast<std::size_t>(h.width);
    const std::size_t hgt = static_cast<std::size_t>(h.height);
    std::size_t cw = w;
    std::size_t ch = hgt;
    switch (h.chroma) {
    case ChromaLayout::C420: cw = (w + 1) / 2; ch = (hgt + 1) / 2; break;
    case ChromaLayout::C422: cw = (w + 1) / 2; break;
    case ChromaLayout::C444: break;
    case ChromaLayout::Mono: cw = 0; ch = 0; break;
    }
    const std::size_t luma_bytes = w * hgt;
    const std::size_t chroma_bytes = cw * ch;
    std::vector<std::uint8_t> plane(luma_bytes + 2 * chroma_bytes);

    FrameSequence seq;
    seq.fps = h.fps;
    while (std::getline(in, line)) {
        if (line.rfind("FRAME", 0) != 0) {
            throw Error(ErrorCode::CorruptHeader, "expected FRAME marker in " + path.string());
        }
        if (!in.read(reinterpret_cast<char*>(plane.data()), static_cast<std::streamsize>(plane.size()))) {
            throw Error(ErrorCode::CorruptHeader, "truncated frame in " + path.string());
        }
        const std::uint8_t* yp = plane.data();
        const std::uint8_t* up = yp + luma_bytes;
        const std::uint8_t* vp = up + chroma_bytes;
        Image img(h.width, h.height);
        for (std::size_t y = 0; y < hgt; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double u = 128.0;
                double v = 128.0;
                if (h.chroma != ChromaLayout::Mono) {
                    const std::size_t cx = cw == w ? x : x / 2;
                    const std::size_t cy = ch == hgt ? y : y / 2;
                    u = up[cy * cw + cx];
                    v = vp[cy * cw + cx];
                }
                yuv_to_rgb(yp[y * w + x], u, v, h.range,
                           img.at(static_cast<int>(x), static_cast<int>(y)));
            }
        }
        seq.frames.push_back(std::move(img));
    }
    if (seq.frames.empty()) {
        throw Error(ErrorCode::EmptySequence, path.string() + " has no frames");
    }
    return seq;
}

void save_y4m(const FrameSequence& seq, const fs::path& path) {
    validate(seq);
    const int w = seq.width();
    const int h = seq.height();
    const int cw = (w + 1) / 2;
    const int ch = (h + 1) / 2;

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
    out << "YUV4MPEG2 W" << w << " H" << h << " F" << fps_rational(seq.fps)
        << " Ip A1:1 C420jpeg XCOLORRANGE=FULL\n";

    std::vector<std::uint8_t> yplane(static_cast<std::size_t>(w) * h);
    std::vector<std::uint8_t> uplane(static_cast<std::size_t>(cw) * ch);
    std::vector<std::uint8_t> vplane(uplane.size());
    for (const Image& img : seq.frames) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::uint8_t* p = img.at(x, y);
                yplane[static_cast<std::size_t>(y) * w + x] =
                    clamp_round(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
            }
        }
        for (int cy = 0; cy < ch; ++cy) {
            for (int cx = 0; cx < cw; ++cx) {
                double r = 0.0, g = 0.0, b = 0.0;
                int n = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int x = 2 * cx + dx;
                        const int y = 2 * cy + dy;
                        if (x < w && y < h) {
                            const std::uint8_t* p = img.at(x, y);
                            r += p[0];
                            g += p[1];
                            b += p[2];
                            ++n;
                        }
                    }
                }
                r /= n;
                g /= n;
                b /= n;
                const std::size_t idx = static_cast<std::size_t>(cy) * cw + cx;
                uplane[idx] = clamp_round(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
                vplane[idx] = clamp_round(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
            }
        }
        out << "FRAME\n";
        out.write(reinterpret_cast<const char*>(yplane.data()), static_cast<std::streamsize>(yplane.size()));
        out.write(reinterpret_cast<const char*>(uplane.data()), static_cast<std::streamsize>(uplane.size()));
        out.write(reinterpret_cast<const char*>(vplane.data()), static_cast<std::streamsize>(vplane.size()));
    }
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

FrameSequence load_frames(const fs::path& path) {
    std::error_code ec;
    if (!fs::exists(path, ec)) {
        throw Error(ErrorCode::IoFailure, path.string() + " does not exist");
    }
    if (fs::is_directory(path, ec)) {
        const fs::path sidecar = path / kFpsSidecar;
        std::ifstream in(sidecar);
        if (!in) {
            throw Error(ErrorCode::MissingFpsSidecar, "missing " + sidecar.string());
        }
        std::stringstream text;
        text << in.rdbuf();
        return load_png_directory(path, parse_fps_text(text.str(), sidecar.string()));
    }
    if (path.extension() == ".y4m") {
        FrameSequence seq = load_y4m(path);
        validate(seq);
        return seq;
    }
    throw Error(ErrorCode::UnsupportedFormat,
                path.string() + " is neither a .y4m file nor a PNG-sequence directory");
}

void save_frames(const FrameSequence& seq, const fs::path& path) {
    validate(seq);
    if (path.extension() == ".y4m") {
        save_y4m(seq, path);
        return;
    }
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec || !fs::is_directory(path)) {
        throw Error(ErrorCode::IoFailure, "cannot create directory " + path.string());
    }
    // Stale frames from an earlier, longer sequence would be picked up on load.
    for (const auto& stale : numbered_pngs(path)) {
        fs::remove(stale, ec);
    }
    char name[32];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i + 1);
        save_png(seq.frames[i], path / name);
    }
    std::ofstream sidecar(path / kFpsSidecar);
    sidecar << format_shortest(seq.fps) << "\n";
    if (!sidecar) {
        throw Error(ErrorCode::IoFailure, "cannot write fps sidecar in " + path.string());
    }
}

}  // namespace io
}  // namespace mvaa
