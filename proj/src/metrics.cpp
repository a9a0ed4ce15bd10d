#include "mvaa/metrics.h"

#include "mvaa/error.h"
#include "mvaa/parallel.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string_view>
#include <unordered_map>

namespace mvaa::metrics {

std::vector<double> BoxEmbedder::embed(const Image& image) const {
    constexpr int g = kGrid;
    std::vector<double> feature(static_cast<std::size_t>(g) * g * 3, 0.0);
    if (image.width <= 0 || image.height <= 0) {
        feature[0] = 1.0;
        return feature;
    }
    for (int cy = 0; cy < g; ++cy) {
        const int y0 = cy * image.height / g;
        const int y1 = std::max(y0 + 1, (cy + 1) * image.height / g);
        for (int cx = 0; cx < g; ++cx) {
            const int x0 = cx * image.width / g;
            const int x1 = std::max(x0 + 1, (cx + 1) * image.width / g);
            double sum[3] = {0.0, 0.0, 0.0};
            for (int y = std::min(y0, image.height - 1); y < std::min(y1, image.height); ++y) {
                for (int x = std::min(x0, image.width - 1); x < std::min(x1, image.width); ++x) {
                    const std::uint8_t* p = image.at(x, y);
                    sum[0] += p[0];
                    sum[1] += p[1];
                    sum[2] += p[2];
                }
            }
            const double count = static_cast<double>((std::min(y1, image.height) - std::min(y0, image.height - 1)) *
                                                     (std::min(x1, image.width) - std::min(x0, image.width - 1)));
            const std::size_t base = (static_cast<std::size_t>(cy) * g + cx) * 3;
            for (int c = 0; c < 3; ++c) {
                feature[base + c] = sum[c] / count;
            }
        }
    }
    double mean = 0.0;
    for (double v : feature) {
        mean += v;
    }
    mean /= static_cast<double>(feature.size());
    double norm2 = 0.0;
    for (double& v : feature) {
        v -= mean;
        norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    if (norm < 1e-12) {
        std::fill(feature.begin(), feature.end(), 0.0);
        feature[0] = 1.0;
        return feature;
    }
    for (double& v : feature) {
        v /= norm;
    }
    return feature;
}

double beat_align(std::span<const double> beats, std::span<const double> peaks, double sigma, bool transposed) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    }
    if (transposed) {
        std::swap(beats, peaks);
    }
    if (beats.empty()) {
        throw Error(ErrorCode::NoBeats, transposed ? "no peaks to score" : "no beats to score");
    }
    if (peaks.empty()) {
        return 0.0;
    }
    std::vector<double> sorted(peaks.begin(), peaks.end());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double b : beats) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), b);
        double d = std::numeric_limits<double>::infinity();
        if (it != sorted.end()) {
            d = std::min(d, std::abs(*it - b));
        }
        if (it != sorted.begin()) {
            d = std::min(d, std::abs(b - *(it - 1)));
        }
        total += std::exp(-(d * d) / (2.0 * sigma * sigma));
    }
    return total / static_cast<double>(beats.size());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "feature vectors differ in length");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double temporal_consistency(const std::vector<std::vector<double>>& features) {
    if (features.size() < 2) {
        throw Error(ErrorCode::TooFewFrames, "temporal consistency needs at least 2 frames");
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < features.size(); ++i) {
        total += cosine_similarity(features[i], features[i + 1]);
    }
    return std::clamp(total / static_cast<double>(features.size() - 1), -1.0, 1.0);
}

double temporal_consistency(const FrameSequence& video, const FrameEmbedder& embedder) {
    if (video.size() < 2) {
        throw Error(ErrorCode::TooFewFrames, "temporal consistency needs at least 2 frames");
    }
    std::vector<std::vector<double>> features(video.size());
    parallel_for(video.size(), [&](std::size_t i) { features[i] = embedder.embed(video.frames[i]); });
    return temporal_consistency(features);
}

double psnr(const Image& a, const Image& b) {
    if (!a.same_size(b) || a.rgb.size() != b.rgb.size()) {
        throw Error(ErrorCode::DimensionMismatch, "images differ in size");
    }
    if (a.rgb.empty()) {
        return kPsnrCap;
    }
    std::uint64_t sq = 0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const int d = int{a.rgb[i]} - int{b.rgb[i]};
        sq += static_cast<std::uint64_t>(d * d);
    }
    if (sq == 0) {
        return kPsnrCap;
    }
    const double mse = static_cast<double>(sq) / static_cast<double>(a.rgb.size());
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

ContentPreservation content_preservation(const FrameSequence& output, const FrameSequence& source) {
    validate(output);
    validate(source);
    if (output.width() != source.width() || output.height() != source.height()) {
        throw Error(ErrorCode::DimensionMismatch, "output and source dimensions differ");
    }
    auto hash_of = [](const Image& img) {
        return std::hash<std::string_view>{}(
            std::string_view(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size()));
    };
    std::unordered_multimap<std::size_t, std::size_t> index;
    for (std::size_t i = 0; i < source.size(); ++i) {
        index.emplace(hash_of(source.frames[i]), i);
    }
    std::vector<double> best(output.size(), 0.0);
    std::vector<char> exact(output.size(), 0);
    parallel_for(output.size(), [&](std::size_t f) {
        const Image& frame = output.frames[f];
        const auto [lo, hi] = index.equal_range(hash_of(frame));
        for (auto it = lo; it != hi; ++it) {
            if (source.frames[it->second] == frame) {
                exact[f] = 1;
                best[f] = kPsnrCap;
                return;
            }
        }
        double top = 0.0;
        for (const Image& s : source.frames) {
            top = std::max(top, psnr(frame, s));
        }
        best[f] = top;
    });
    ContentPreservation cp;
    double total = 0.0;
    std::size_t matches = 0;
    for (std::size_t f = 0; f < output.size(); ++f) {
        total += best[f];
        matches += exact[f] ? 1 : 0;
    }
    cp.exact_match_rate = static_cast<double>(matches) / static_cast<double>(output.size());
    cp.psnr_db = total / static_cast<double>(output.size());
    return cp;
}

}  // namespace mvaa::metrics
