#pragma once

#include "mvaa/media.h"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvaa::metrics {

class FrameEmbedder {
public:
    virtual ~FrameEmbedder() = default;
    virtual std::string name() const = 0;
    // Unit-norm feature vector; deterministic.
    virtual std::vector<double> embed(const Image& image) const = 0;
};

// 16x16 box-averaged RGB, mean removed, L2-normalised (768 dims). Constant
// images map to e_1.
class BoxEmbedder final : public FrameEmbedder {
public:
    static constexpr int kGrid = 16;
    std::string name() const override { return "box16"; }
    std::vector<double> embed(const Image& image) const override;
};

// Mean over beats of exp(-d^2 / (2 sigma^2)), d the distance to the nearest
// peak. With transposed = true the roles of beats and peaks swap.
double beat_align(std::span<const double> beats, std::span<const double> peaks, double sigma = 0.1,
                  bool transposed = false);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

double temporal_consistency(const FrameSequence& video, const FrameEmbedder& embedder);

// Same metric over externally computed per-frame features.
double temporal_consistency(const std::vector<std::vector<double>>& features);

struct ContentPreservation {
    double exact_match_rate = 0.0;
    double psnr_db = 0.0;
};

inline constexpr double kPsnrCap = 100.0;

double psnr(const Image& a, const Image& b);

ContentPreservation content_preservation(const FrameSequence& output, const FrameSequence& source);

struct EvalReport {
    double beat_align = 0.0;
    double temporal_consistency = 0.0;
    std::optional<ContentPreservation> content;
    std::optional<double> input_beat_align;  // same score on the unedited input
    double sigma = 0.1;
    bool transposed = false;
    std::string embedder;
    std::size_t beat_count = 0;
    std::size_t peak_count = 0;
};

}  // namespace mvaa::metrics
