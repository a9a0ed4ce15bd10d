#include "fixtures.h"

#include "mvaa/error.h"
#include "mvaa/motion.h"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace mvaa;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

FrameSequence two_frames(const Image& a, const Image& b) {
    FrameSequence v;
    v.fps = 16;
    v.frames = {a, b};
    return v;
}

motion::MotionEnergy smoothed(std::vector<double> values) {
    return {std::move(values), 16.0, true};
}

// Gaussian convolution over the mirrored extension of the signal, edge
// sample repeated: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} x_{n-2} ...
std::vector<double> reference_smooth(const std::vector<double>& x, double sigma) {
    const int r = static_cast<int>(4.0 * sigma + 0.5);
    std::vector<double> w;
    double s = 0.0;
    for (int k = -r; k <= r; ++k) {
        w.push_back(std::exp(-0.5 * k * k / (sigma * sigma)));
        s += w.back();
    }
    for (double& v : w) {
        v /= s;
    }
    const int n = static_cast<int>(x.size());
    auto at = [&](int i) {
        int m = ((i % (2 * n)) + 2 * n) % (2 * n);
        return m < n ? x[static_cast<std::size_t>(m)] : x[static_cast<std::size_t>(2 * n - 1 - m)];
    };
    std::vector<double> out(x.size());
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
            acc += w[static_cast<std::size_t>(k + r)] * at(i + k);
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("energy: closed forms") {
    const Image black(64, 64, 0);
    const Image white(64, 64, 255);
    CHECK(motion::motion_energy(two_frames(black, black)).values == std::vector<double>{0.0});
    CHECK(motion::motion_energy(two_frames(black, white)).values == std::vector<double>{255.0});

    Image square = black;
    for (int y = 10; y < 18; ++y) {
        for (int x = 20; x < 28; ++x) {
            std::fill(square.at(x, y), square.at(x, y) + 3, std::uint8_t{255});
        }
    }
    const auto e = motion::motion_energy(two_frames(black, square));
    REQUIRE(e.values.size() == 1);
    CHECK(e.values[0] == 255.0 * 64 / (64 * 64));
    CHECK(e.values[0] == 3.984375);
    CHECK_FALSE(e.smoothed);
    CHECK(e.fps == 16.0);
}

TEST_CASE("energy: reversal symmetry and length") {
    auto v = fixtures::noise_video(9, 12, 7, 16, 5);
    const auto fwd = motion::motion_energy(v);
    CHECK(fwd.values.size() == 8);
    std::reverse(v.frames.begin(), v.frames.end());
    auto back = motion::motion_energy(v).values;
    std::reverse(back.begin(), back.end());
    CHECK(back == fwd.values);
    CHECK(std::all_of(fwd.values.begin(), fwd.values.end(), [](double x) { return x >= 0.0; }));
}

TEST_CASE("energy: too few frames") {
    FrameSequence one;
    one.fps = 16;
    one.frames.push_back(Image(4, 4));
    CHECK(code_of([&] { motion::motion_energy(one); }) == ErrorCode::TooFewFrames);
    CHECK(code_of([&] { motion::extract_peaks(one); }) == ErrorCode::TooFewFrames);
}

TEST_CASE("smooth: kernel, DC and impulse response") {
    const auto k = motion::gaussian_kernel(2.0);
    REQUIRE(k.size() == 17);
    double sum = 0.0;
    for (double v : k) {
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));

    const auto c = motion::smooth(smoothed(std::vector<double>(30, 4.5)), 2.0);
    CHECK(c.smoothed);
    for (double v : c.values) {
        CHECK(v == doctest::Approx(4.5).epsilon(1e-12));
    }

    std::vector<double> impulse(41, 0.0);
    impulse[20] = 1.0;
    const auto r = motion::smooth({impulse, 16.0, false}, 2.0).values;
    for (int i = 0; i < 41; ++i) {
        const int d = i - 20;
        const double expect = std::abs(d) <= 8 ? k[static_cast<std::size_t>(d + 8)] : 0.0;
        CHECK(r[static_cast<std::size_t>(i)] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("smooth: matches a mirrored-extension oracle") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (double sigma : {0.6, 1.0, 2.0, 3.3}) {
        for (int n : {2, 3, 5, 9, 40}) {
            std::vector<double> x(static_cast<std::size_t>(n));
            for (double& v : x) {
                v = u(rng);
            }
            const auto got = motion::smooth({x, 16.0, false}, sigma).values;
            const auto want = reference_smooth(x, sigma);
            for (int i = 0; i < n; ++i) {
                CHECK(got[static_cast<std::size_t>(i)] == doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("smooth: interior mass is preserved") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> x(60, 0.0);
        for (int i = 10; i < 50; ++i) {
            x[static_cast<std::size_t>(i)] = u(rng);
        }
        double before = 0.0;
        double after = 0.0;
        for (double v : x) {
            before += v;
        }
        for (double v : motion::smooth({x, 16.0, false}, 2.0).values) {
            after += v;
        }
        CHECK(std::abs(before - after) <= 1e-9);
    }
}

TEST_CASE("smooth: degenerate inputs") {
    const auto one = motion::smooth({{7.0}, 16.0, false}, 2.0);
    CHECK(one.values == std::vector<double>{7.0});
    CHECK(code_of([] { motion::smooth({{1.0, 2.0}, 16.0, false}, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("peaks: two isolated bumps") {
    std::vector<double> x(30, 0.0);
    x[5] = 10.0;
    x[20] = 8.0;
    const auto s = motion::smooth({x, 16.0, false}, 2.0);
    const auto p = motion::find_peaks(s);
    REQUIRE(p.size() == 2);
    // Transition i is stamped at frame i + 1.
    CHECK(p.peak_frames == std::vector<int>{6, 21});
    CHECK(p.peak_times[0] == doctest::Approx(6.0 / 16.0));
    CHECK(p.peak_values[0] == doctest::Approx(s.values[5]));
}

TEST_CASE("peaks: no interior maximum") {
    std::vector<double> rising;
    for (int i = 0; i < 20; ++i) {
        rising.push_back(i);
    }
    CHECK(motion::find_peaks(smoothed(rising)).size() == 0);
    CHECK(motion::find_peaks(smoothed(std::vector<double>(10, 3.0))).size() == 0);
}

TEST_CASE("peaks: ties and minimum distance") {
    // A plateau reports its left edge.
    auto p = motion::find_peaks(smoothed({0, 1, 1, 0, 0, 0}));
    CHECK(p.peak_frames == std::vector<int>{2});
    // Equal peaks two apart: the earlier survives.
    p = motion::find_peaks(smoothed({0, 5, 0, 5, 0, 0}));
    CHECK(p.peak_frames == std::vector<int>{2});
    // Unequal: the larger survives regardless of order.
    p = motion::find_peaks(smoothed({0, 3, 0, 5, 0, 0}));
    CHECK(p.peak_frames == std::vector<int>{4});
    // Far enough apart: both survive.
    p = motion::find_peaks(smoothed({0, 3, 0, 0, 5, 0}));
    CHECK(p.peak_frames == std::vector<int>{2, 5});
    // Threshold is relative to the dynamic range.
    p = motion::find_peaks(smoothed({0, 0.5, 0, 0, 10, 0, 0}));
    CHECK(p.peak_frames == std::vector<int>{5});
}

TEST_CASE("peaks: unsmoothed input is refused") {
    CHECK(code_of([] { motion::find_peaks({{0, 1, 0}, 16.0, false}); }) == ErrorCode::UnsmoothedInput);
}

TEST_CASE("peaks: affine invariance and local-maximum property") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> x(50);
        for (double& v : x) {
            v = u(rng);
        }
        const auto s = motion::smooth({x, 16.0, false}, 1.5);
        const auto base = motion::find_peaks(s);
        auto scaled = s;
        for (double& v : scaled.values) {
            v = 3.0 * v + 7.0;
        }
        CHECK(motion::find_peaks(scaled).peak_frames == base.peak_frames);
        for (int f : base.peak_frames) {
            const auto i = static_cast<std::size_t>(f - 1);
            CHECK(s.values[i] > s.values[i - 1]);
            CHECK(s.values[i] >= s.values[i + 1]);
        }
        for (std::size_t k = 1; k < base.size(); ++k) {
            CHECK(base.peak_frames[k] - base.peak_frames[k - 1] >= 3);
        }
    }
}

TEST_CASE("peaks: impulse video") {
    const auto video = fixtures::impulse_video(56, {8, 24, 40});
    const auto p = motion::extract_peaks(video);
    REQUIRE(p.size() == 3);
    const int expect[3] = {8, 24, 40};
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(p.peak_frames[static_cast<std::size_t>(i)] - expect[i]) <= 1);
    }
    CHECK(p.fps == 16.0);
}
