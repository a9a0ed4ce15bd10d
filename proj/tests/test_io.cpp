#include "fixtures.h"

#include "mvaa/artifacts.h"
#include "mvaa/error.h"
#include "mvaa/io.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace fs = std::filesystem;
using mvaa::Error;
using mvaa::ErrorCode;

namespace {

void put_u16(std::string& s, unsigned v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

// Hand-assembled RIFF/WAVE file.
std::string wav_bytes(unsigned format, unsigned channels, std::uint32_t rate, unsigned bits,
                      const std::string& payload) {
    std::string fmt;
    put_u16(fmt, format);
    put_u16(fmt, channels);
    put_u32(fmt, rate);
    put_u32(fmt, rate * channels * bits / 8);
    put_u16(fmt, channels * bits / 8);
    put_u16(fmt, bits);
    std::string body = "WAVE";
    body += "fmt ";
    put_u32(body, static_cast<std::uint32_t>(fmt.size()));
    body += fmt;
    body += "data";
    put_u32(body, static_cast<std::uint32_t>(payload.size()));
    body += payload;
    std::string out = "RIFF";
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    return out + body;
}

std::string pcm16(std::initializer_list<int> samples) {
    std::string s;
    for (int v : samples) {
        put_u16(s, static_cast<unsigned>(static_cast<std::uint16_t>(static_cast<std::int16_t>(v))));
    }
    return s;
}

fs::path write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    return p;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("wav: 16-bit scaling uses 32768") {
    const auto dir = fixtures::temp_dir("wav16");
    const auto p = write_file(dir / "a.wav", wav_bytes(1, 1, 22050, 16, pcm16({0, -32768, 32767, 16384})));
    const auto t = mvaa::io::load_wav(p);
    REQUIRE(t.samples.size() == 4);
    CHECK(t.sample_rate == 22050.0);
    CHECK(t.samples[0] == 0.0f);
    CHECK(t.samples[1] == -1.0f);
    CHECK(t.samples[2] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-7));
    CHECK(t.samples[3] == 0.5f);
}

TEST_CASE("wav: stereo collapses by channel mean") {
    const auto dir = fixtures::temp_dir("wavst");
    const auto p = write_file(dir / "s.wav", wav_bytes(1, 2, 8000, 16, pcm16({16384, 0, -32768, -32768})));
    const auto t = mvaa::io::load_wav(p);
    REQUIRE(t.samples.size() == 2);
    CHECK(t.samples[0] == 0.25f);
    CHECK(t.samples[1] == -1.0f);
}

TEST_CASE("wav: one second of silence") {
    const auto dir = fixtures::temp_dir("wavsil");
    const auto p = write_file(dir / "z.wav", wav_bytes(1, 1, 22050, 16, std::string(44100, '\0')));
    const auto t = mvaa::io::load_wav(p);
    CHECK(t.samples.size() == 22050);
    CHECK(std::all_of(t.samples.begin(), t.samples.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("wav: float32 samples and range check") {
    const auto dir = fixtures::temp_dir("wavf");
    auto floats = [](std::initializer_list<float> v) {
        std::string s;
        for (float f : v) {
            char b[4];
            std::memcpy(b, &f, 4);
            s.append(b, 4);
        }
        return s;
    };
    const auto ok = write_file(dir / "f.wav", wav_bytes(3, 1, 16000, 32, floats({0.25f, -0.5f, 1.0f})));
    const auto t = mvaa::io::load_wav(ok);
    CHECK(t.samples == std::vector<float>{0.25f, -0.5f, 1.0f});
    const auto bad = write_file(dir / "g.wav", wav_bytes(3, 1, 16000, 32, floats({0.25f, 1.5f})));
    CHECK(code_of([&] { mvaa::io::load_wav(bad); }) == ErrorCode::InvalidData);
    const auto nan = write_file(dir / "n.wav", wav_bytes(3, 1, 16000, 32, floats({NAN})));
    CHECK(code_of([&] { mvaa::io::load_wav(nan); }) == ErrorCode::InvalidData);
}

TEST_CASE("wav: extensible header with PCM subformat") {
    std::string fmt;
    put_u16(fmt, 0xFFFE);
    put_u16(fmt, 1);
    put_u32(fmt, 8000);
    put_u32(fmt, 16000);
    put_u16(fmt, 2);
    put_u16(fmt, 16);
    put_u16(fmt, 22);
    put_u16(fmt, 16);
    put_u32(fmt, 4);
    put_u16(fmt, 1);  // PCM subformat GUID prefix
    fmt += std::string("\x00\x00\x00\x00\x10\x00\x80\x00\x00\xAA\x00\x38\x9B\x71", 14);
    const std::string data = pcm16({-32768, 0});
    std::string body = "WAVEfmt ";
    put_u32(body, static_cast<std::uint32_t>(fmt.size()));
    body += fmt + "data";
    put_u32(body, static_cast<std::uint32_t>(data.size()));
    body += data;
    std::string bytes = "RIFF";
    put_u32(bytes, static_cast<std::uint32_t>(body.size()));
    bytes += body;
    const auto dir = fixtures::temp_dir("wavx");
    const auto t = mvaa::io::load_wav(write_file(dir / "x.wav", bytes));
    CHECK(t.samples == std::vector<float>{-1.0f, 0.0f});
}

TEST_CASE("wav: error paths") {
    const auto dir = fixtures::temp_dir("wave");
    CHECK(code_of([&] { mvaa::io::load_wav(dir / "missing.wav"); }) == ErrorCode::IoFailure);
    const auto adpcm = write_file(dir / "adpcm.wav", wav_bytes(2, 1, 8000, 4, std::string(8, '\0')));
    CHECK(code_of([&] { mvaa::io::load_wav(adpcm); }) == ErrorCode::UnsupportedFormat);
    const auto pcm8 = write_file(dir / "pcm8.wav", wav_bytes(1, 1, 8000, 8, std::string(8, '\0')));
    CHECK(code_of([&] { mvaa::io::load_wav(pcm8); }) == ErrorCode::UnsupportedFormat);
    const auto six = write_file(dir / "six.wav", wav_bytes(1, 6, 8000, 16, std::string(24, '\0')));
    CHECK(code_of([&] { mvaa::io::load_wav(six); }) == ErrorCode::UnsupportedFormat);
    const auto junk = write_file(dir / "junk.wav", "not a wave file at all");
    CHECK(code_of([&] { mvaa::io::load_wav(junk); }) == ErrorCode::CorruptHeader);
    std::string truncated = wav_bytes(1, 1, 8000, 16, pcm16({1, 2, 3, 4}));
    truncated.resize(truncated.size() - 3);
    const auto trunc = write_file(dir / "trunc.wav", truncated);
    CHECK(code_of([&] { mvaa::io::load_wav(trunc); }) == ErrorCode::CorruptHeader);
}

TEST_CASE("wav: save and reload is deterministic") {
    const auto dir = fixtures::temp_dir("wavrt");
    mvaa::AudioTrack t;
    t.sample_rate = 11025;
    for (int v : {-32768, -1, 0, 1, 12345, 32767}) {
        t.samples.push_back(static_cast<float>(v / 32768.0));
    }
    mvaa::io::save_wav(t, dir / "r.wav");
    const auto a = mvaa::io::load_wav(dir / "r.wav");
    const auto b = mvaa::io::load_wav(dir / "r.wav");
    CHECK(a.samples == t.samples);
    CHECK(a.samples == b.samples);
    CHECK(a.sample_rate == 11025.0);
}

TEST_CASE("png sequence: two frames with fps sidecar") {
    const auto dir = fixtures::temp_dir("png2");
    mvaa::io::save_png(fixtures::noise_image(8, 6, 1), dir / "000001.png");
    mvaa::io::save_png(fixtures::noise_image(8, 6, 2), dir / "000002.png");
    write_file(dir / "fps.txt", "16\n");
    const auto seq = mvaa::io::load_frames(dir);
    CHECK(seq.size() == 2);
    CHECK(seq.fps == 16.0);
    CHECK(seq.frames[1] == fixtures::noise_image(8, 6, 2));
}

TEST_CASE("png sequence: numeric ordering and rational fps") {
    const auto dir = fixtures::temp_dir("pngord");
    mvaa::io::save_png(fixtures::noise_image(4, 4, 10), dir / "10.png");
    mvaa::io::save_png(fixtures::noise_image(4, 4, 9), dir / "9.png");
    write_file(dir / "fps.txt", "30000/1001");
    write_file(dir / "notes.txt", "ignored");
    const auto seq = mvaa::io::load_frames(dir);
    REQUIRE(seq.size() == 2);
    CHECK(seq.frames[0] == fixtures::noise_image(4, 4, 9));
    CHECK(seq.fps == doctest::Approx(30000.0 / 1001.0).epsilon(1e-15));
}

TEST_CASE("png sequence: invariant violations") {
    const auto mixed = fixtures::temp_dir("pngmix");
    mvaa::io::save_png(mvaa::Image(64, 64), mixed / "000001.png");
    mvaa::io::save_png(mvaa::Image(32, 32), mixed / "000002.png");
    write_file(mixed / "fps.txt", "16");
    CHECK(code_of([&] { mvaa::io::load_frames(mixed); }) == ErrorCode::MixedDimensions);

    const auto empty = fixtures::temp_dir("pngempty");
    write_file(empty / "fps.txt", "16");
    CHECK(code_of([&] { mvaa::io::load_frames(empty); }) == ErrorCode::EmptySequence);

    const auto nofps = fixtures::temp_dir("pngnofps");
    mvaa::io::save_png(mvaa::Image(4, 4), nofps / "000001.png");
    CHECK(code_of([&] { mvaa::io::load_frames(nofps); }) == ErrorCode::MissingFpsSidecar);

    write_file(nofps / "fps.txt", "-3");
    CHECK(code_of([&] { mvaa::io::load_frames(nofps); }) == ErrorCode::InvalidData);

    CHECK(code_of([&] { mvaa::io::load_frames(nofps / "nothing"); }) == ErrorCode::IoFailure);
    const auto other = write_file(nofps / "clip.mp4", "x");
    CHECK(code_of([&] { mvaa::io::load_frames(other); }) == ErrorCode::UnsupportedFormat);
}

TEST_CASE("png sequence: round trip is the identity") {
    const auto dir = fixtures::temp_dir("pngrt");
    auto seq = fixtures::noise_video(5, 13, 7, 29.97, 42);
    mvaa::io::save_frames(seq, dir / "v");
    const auto back = mvaa::io::load_frames(dir / "v");
    CHECK(back == seq);

    // Saving a shorter sequence over it leaves no stale frames behind.
    seq.frames.resize(2);
    mvaa::io::save_frames(seq, dir / "v");
    CHECK(mvaa::io::load_frames(dir / "v") == seq);
}

TEST_CASE("png sequence: single frame naming contract") {
    const auto dir = fixtures::temp_dir("png1");
    mvaa::FrameSequence seq;
    seq.fps = 16;
    seq.frames.push_back(fixtures::noise_image(3, 3, 5));
    mvaa::io::save_frames(seq, dir / "one");
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir / "one")) {
        names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"000001.png", "fps.txt"});
}

TEST_CASE("save_frames: unwritable destination") {
    const auto dir = fixtures::temp_dir("ro");
    write_file(dir / "plain", "file");
    mvaa::FrameSequence seq;
    seq.fps = 16;
    seq.frames.push_back(mvaa::Image(2, 2));
    CHECK(code_of([&] { mvaa::io::save_frames(seq, dir / "plain" / "sub"); }) == ErrorCode::IoFailure);
    CHECK(code_of([&] { mvaa::io::save_frames(seq, dir / "plain" / "v.y4m"); }) == ErrorCode::IoFailure);
}

TEST_CASE("y4m: header parse") {
    const auto dir = fixtures::temp_dir("y4mh");
    std::string bytes = "YUV4MPEG2 W64 H64 F16:1 Ip A1:1 C420jpeg\n";
    for (int f = 0; f < 3; ++f) {
        bytes += "FRAME\n";
        bytes += std::string(64 * 64, static_cast<char>(100 + f));
        bytes += std::string(2 * 32 * 32, static_cast<char>(128));
    }
    const auto seq = mvaa::io::load_frames(write_file(dir / "a.y4m", bytes));
    CHECK(seq.size() == 3);
    CHECK(seq.fps == 16.0);
    CHECK(seq.width() == 64);
    CHECK(seq.height() == 64);
}

TEST_CASE("y4m: colour range conventions") {
    const auto dir = fixtures::temp_dir("y4mr");
    auto one_pixel_frames = [](const std::string& header, std::uint8_t y) {
        std::string b = header + "\nFRAME\n";
        b += std::string(4, static_cast<char>(y));
        b += std::string(2, static_cast<char>(128));
        return b;
    };
    const auto studio = mvaa::io::load_frames(write_file(dir / "s.y4m", one_pixel_frames("YUV4MPEG2 W2 H2 F25:1 C420", 235)));
    CHECK(studio.frames[0].rgb[0] == 255);
    const auto black = mvaa::io::load_frames(write_file(dir / "b.y4m", one_pixel_frames("YUV4MPEG2 W2 H2 F25:1 C420", 16)));
    CHECK(black.frames[0].rgb[0] == 0);
    const auto full = mvaa::io::load_frames(
        write_file(dir / "f.y4m", one_pixel_frames("YUV4MPEG2 W2 H2 F25:1 C420jpeg XCOLORRANGE=FULL", 235)));
    CHECK(full.frames[0].rgb[0] == 235);
}

TEST_CASE("y4m: 444 and error paths") {
    const auto dir = fixtures::temp_dir("y4me");
    std::string b = "YUV4MPEG2 W2 H1 F30000:1001 C444\nFRAME\n";
    b += std::string(2, static_cast<char>(126));
    b += std::string(4, static_cast<char>(128));
    const auto seq = mvaa::io::load_frames(write_file(dir / "a.y4m", b));
    CHECK(seq.size() == 1);
    CHECK(seq.fps == doctest::Approx(30000.0 / 1001.0));
    CHECK(seq.frames[0].rgb[0] == 128);  // (126 - 16) * 255 / 219 = 128.08

    CHECK(code_of([&] { mvaa::io::load_frames(write_file(dir / "b.y4m", "JUNK")); }) == ErrorCode::CorruptHeader);
    CHECK(code_of([&] {
              mvaa::io::load_frames(write_file(dir / "c.y4m", "YUV4MPEG2 W2 H2 F25:1 C420p10\nFRAME\n"));
          }) == ErrorCode::UnsupportedFormat);
    CHECK(code_of([&] {
              mvaa::io::load_frames(write_file(dir / "d.y4m", "YUV4MPEG2 W2 H2 F25:1\nFRAME\nab"));
          }) == ErrorCode::CorruptHeader);
    CHECK(code_of([&] { mvaa::io::load_frames(write_file(dir / "e.y4m", "YUV4MPEG2 W2 H2 F25:1\n")); }) ==
          ErrorCode::EmptySequence);
}

TEST_CASE("y4m: round trip keeps luma within one level") {
    // Chroma is constant over 2x2 blocks, luma varies per pixel.
    std::mt19937 rng(3);
    mvaa::FrameSequence seq;
    seq.fps = 12.5;
    for (int f = 0; f < 3; ++f) {
        mvaa::Image img(16, 10);
        for (int y = 0; y < 10; ++y) {
            for (int x = 0; x < 16; ++x) {
                const int g = 40 + static_cast<int>(rng() % 170);
                const int tint = static_cast<int>(((x / 2) * 7 + (y / 2) * 3 + f) % 21) - 10;
                std::uint8_t* p = img.at(x, y);
                p[0] = static_cast<std::uint8_t>(g + tint);
                p[1] = static_cast<std::uint8_t>(g);
                p[2] = static_cast<std::uint8_t>(g - tint);
            }
        }
        seq.frames.push_back(img);
    }
    const auto dir = fixtures::temp_dir("y4mrt");
    mvaa::io::save_frames(seq, dir / "v.y4m");
    const auto back = mvaa::io::load_frames(dir / "v.y4m");
    REQUIRE(back.size() == seq.size());
    CHECK(back.fps == 12.5);
    auto luma = [](const std::uint8_t* p) { return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]; };
    double worst = 0.0;
    for (std::size_t f = 0; f < seq.size(); ++f) {
        for (int y = 0; y < 10; ++y) {
            for (int x = 0; x < 16; ++x) {
                worst = std::max(worst, std::abs(luma(seq.frames[f].at(x, y)) - luma(back.frames[f].at(x, y))));
            }
        }
    }
    CHECK(worst <= 1.0);
}

TEST_CASE("artifacts: plan round trip") {
    mvaa::align::AlignmentPlan plan;
    plan.pairs.push_back({0.5, 0.45, 7, 0, 0});
    plan.total_cost = 0.05;
    plan.source_fps = 16;
    plan.music_duration = 2.0;
    const auto dir = fixtures::temp_dir("plan");
    mvaa::io::write_plan(plan, dir / "plan.json");
    CHECK(mvaa::io::read_plan(dir / "plan.json") == plan);

    std::ifstream in(dir / "plan.json");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("0.450000") != std::string::npos);
}

TEST_CASE("artifacts: empty plan and schema errors") {
    mvaa::align::AlignmentPlan empty;
    empty.source_fps = 24;
    empty.music_duration = 3;
    const auto back = mvaa::io::plan_from_json(mvaa::io::to_json(empty));
    CHECK(back.k() == 0);
    CHECK(back == empty);

    mvaa::Json j = mvaa::io::to_json(empty);
    j.erase("fps");
    CHECK(code_of([&] { mvaa::io::plan_from_json(j); }) == ErrorCode::SchemaMismatch);

    mvaa::Json r = mvaa::io::to_json(mvaa::align::RetimingMap{{{0, 0.0}, {9, 1.0}}, 10, 10.0});
    r.erase("fps");
    CHECK(code_of([&] { mvaa::io::retiming_from_json(r); }) == ErrorCode::SchemaMismatch);

    mvaa::Json bad_cost = mvaa::io::to_json(mvaa::align::AlignmentPlan{{{1.0, 0.5, 8, 0, 0}}, 0.5, 16, 2});
    bad_cost["cost"] = 0.7;
    CHECK(code_of([&] { mvaa::io::plan_from_json(bad_cost); }) == ErrorCode::SchemaMismatch);

    const auto dir = fixtures::temp_dir("schema");
    write_file(dir / "x.json", "{ not json");
    CHECK(code_of([&] { mvaa::io::read_plan(dir / "x.json"); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([&] { mvaa::io::read_plan(dir / "none.json"); }) == ErrorCode::IoFailure);
}

TEST_CASE("artifacts: minimal plan schema is accepted") {
    const auto j = mvaa::Json::parse(R"({"pairs": [{"beat": 0.5, "peak": 0.45, "peak_frame": 7}],
                                          "cost": 0.05, "fps": 16, "music_duration": 1.0})");
    const auto plan = mvaa::io::plan_from_json(j);
    REQUIRE(plan.k() == 1);
    CHECK(plan.pairs[0].beat_index == -1);
    CHECK(plan.pairs[0].peak_frame == 7);
}

TEST_CASE("artifacts: every type round trips and writing is idempotent") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        mvaa::audio::BeatGrid g;
        double t = 0.0;
        for (int i = 0; i < 8; ++i) {
            t += 0.1 + u(rng) / 10.0;
            g.beats.push_back(t);
        }
        g.bpm = 60 + u(rng) * 10;
        g.duration = t + 1.0;
        const std::string once = mvaa::dump_fixed(mvaa::io::to_json(g));
        const auto back = mvaa::io::beat_grid_from_json(mvaa::Json::parse(once));
        CHECK(mvaa::dump_fixed(mvaa::io::to_json(back)) == once);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(std::abs(back.beats[i] - g.beats[i]) <= 5e-7);
        }
        const auto again = mvaa::io::beat_grid_from_json(mvaa::Json::parse(once));
        CHECK(again.beats == back.beats);
    }

    mvaa::motion::PeakSet peaks{{0.5, 1.5}, {8, 24}, {3.25, 4.5}, 16.0};
    const auto pb = mvaa::io::peak_set_from_json(mvaa::io::to_json(peaks));
    CHECK(pb.peak_frames == peaks.peak_frames);
    CHECK(pb.peak_times == peaks.peak_times);
    CHECK(pb.peak_values == peaks.peak_values);
    CHECK(pb.fps == 16.0);

    mvaa::align::RetimingMap map{{{0, 0.0}, {8, 0.4}, {16, 1.1}, {23, 1.5}}, 24, 16.0};
    CHECK(mvaa::io::retiming_from_json(mvaa::io::to_json(map)) == map);

    mvaa::metrics::EvalReport report;
    report.beat_align = 0.75;
    report.temporal_consistency = 0.5;
    report.content = mvaa::metrics::ContentPreservation{1.0, 100.0};
    report.input_beat_align = 0.125;
    report.embedder = "box16";
    report.beat_count = 4;
    report.peak_count = 3;
    const auto rb = mvaa::io::report_from_json(mvaa::io::to_json(report));
    CHECK(rb.beat_align == 0.75);
    CHECK(rb.temporal_consistency == 0.5);
    REQUIRE(rb.content.has_value());
    CHECK(rb.content->psnr_db == 100.0);
    CHECK(rb.input_beat_align.value() == 0.125);
    CHECK(rb.embedder == "box16");
    CHECK(rb.beat_count == 4);
}

TEST_CASE("artifacts: beat grid must be increasing") {
    const auto j = mvaa::Json::parse(R"({"beats": [1.0, 0.5], "bpm": 120, "duration": 2})");
    CHECK(code_of([&] { mvaa::io::beat_grid_from_json(j); }) == ErrorCode::SchemaMismatch);
}
