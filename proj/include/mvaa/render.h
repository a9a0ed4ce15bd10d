#pragma once

#include "mvaa/align.h"
#include "mvaa/media.h"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mvaa::render {

struct Conditioning {
    int frame = 0;  // output frame index t_k
    Image image;
};

struct CompletionJob {
    std::string job_id;
    std::vector<Conditioning> conditioning;  // strictly increasing frame indices
    int length = 0;
    double fps = 0.0;
    int width = 0;
    int height = 0;
    std::string prompt;
};

void validate(const CompletionJob& job);

// Source frame index shown at a given source time, round(t * fps) clamped.
std::size_t source_frame_index(double source_time, const FrameSequence& source);

// One conditioning frame per anchor, taken from the source at the anchor's
// source time.
CompletionJob make_job(const align::RetimingMap& map, const FrameSequence& source,
                       std::string job_id = "mvaa");

// Length, fps and dimensions must match the job, and each conditioning
// frame must be reproduced with mean absolute error <= tolerance (8-bit units).
void check_contract(const CompletionJob& job, const FrameSequence& output, double tolerance);

double mean_absolute_error(const Image& a, const Image& b);

FrameSequence backend_hold(const CompletionJob& job, const FrameSequence& source);
FrameSequence backend_crossfade(const CompletionJob& job, const FrameSequence& source);

struct TimewarpOptions {
    bool blend = false;  // linear blend of the two bracketing source frames
};

FrameSequence backend_timewarp(const align::RetimingMap& map, const FrameSequence& source,
                               const TimewarpOptions& options = {});

struct ExternalOptions {
    std::filesystem::path job_dir;
    std::string command;  // whitespace-separated argv; job_dir is appended
    double tolerance = 2.0;
};

void write_job(const CompletionJob& job, const std::filesystem::path& job_dir);
CompletionJob read_job(const std::filesystem::path& job_dir);

FrameSequence backend_external(const CompletionJob& job, const FrameSequence& source,
                               const ExternalOptions& options);

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual std::string name() const = 0;
    virtual FrameSequence complete(const CompletionJob& job, const FrameSequence& source) = 0;
};

struct BackendOptions {
    std::string name = "timewarp";
    align::RetimingMap map;  // consulted by timewarp
    TimewarpOptions timewarp;
    ExternalOptions external;
};

std::unique_ptr<CompletionBackend> make_backend(const BackendOptions& options);

}  // namespace mvaa::render
