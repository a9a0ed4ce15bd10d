#include "mvaa/render.h"

#include "mvaa/artifacts.h"
#include "mvaa/error.h"
#include "mvaa/io.h"
#include "mvaa/parallel.h"

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

extern char** environ;

namespace mvaa::render {

namespace fs = std::filesystem;

namespace {

void job_error(const std::string& what) {
    throw Error(ErrorCode::InvalidJob, what);
}

void check_source(const CompletionJob& job, const FrameSequence& source) {
    validate(source);
    if (source.width() != job.width || source.height() != job.height) {
        throw Error(ErrorCode::DimensionMismatch, "job dimensions differ from the source video");
    }
}

FrameSequence blank_output(const CompletionJob& job) {
    FrameSequence out;
    out.fps = job.fps;
    out.frames.resize(static_cast<std::size_t>(job.length));
    return out;
}

std::vector<std::string> split_command(const std::string& command) {
    std::istringstream in(command);
    std::vector<std::string> argv;
    std::string tok;
    while (in >> tok) {
        argv.push_back(tok);
    }
    return argv;
}

int run_process(const std::vector<std::string>& args) {
    std::vector<char*> argv;
    for (const auto& a : args) {
        argv.push_back(const_cast<char*>(a.c_str()));
    }
    argv.push_back(nullptr);
    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
    if (rc != 0) {
        throw Error(ErrorCode::BackendFailed, "cannot start '" + args[0] + "'");
    }
    int status = 0;
    if (waitpid(pid, &status, 0) < 0) {
        throw Error(ErrorCode::BackendFailed, "lost track of backend process");
    }
    if (!WIFEXITED(status)) {
        return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    }
    return WEXITSTATUS(status);
}

std::string cond_name(std::size_t k) {
    char name[32];
    std::snprintf(name, sizeof(name), "cond/%06zu.png", k + 1);
    return name;
}

}  // namespace

void validate(const CompletionJob& job) {
    if (job.length < 1) {
        job_error("length must be positive");
    }
    if (!(job.fps > 0.0)) {
        job_error("fps must be positive");
    }
    if (job.width <= 0 || job.height <= 0) {
        job_error("width and height must be positive");
    }
    if (job.conditioning.empty()) {
        job_error("at least one conditioning frame is required");
    }
    for (std::size_t i = 0; i < job.conditioning.size(); ++i) {
        const Conditioning& c = job.conditioning[i];
        if (c.frame < 0 || c.frame >= job.length) {
            job_error("conditioning index " + std::to_string(c.frame) + " outside [0, length - 1]");
        }
        if (i > 0 && c.frame <= job.conditioning[i - 1].frame) {
            job_error("conditioning indices must be strictly increasing");
        }
        if (c.image.width != job.width || c.image.height != job.height ||
            c.image.rgb.size() != c.image.pixel_count() * 3) {
            job_error("conditioning image " + std::to_string(i) + " has the wrong size");
        }
    }
}

std::size_t source_frame_index(double source_time, const FrameSequence& source) {
    const long long idx = align::round_half_up(source_time * source.fps);
    return static_cast<std::size_t>(std::clamp<long long>(idx, 0, static_cast<long long>(source.size()) - 1));
}

CompletionJob make_job(const align::RetimingMap& map, const FrameSequence& source, std::string job_id) {
    validate(source);
    CompletionJob job;
    job.job_id = std::move(job_id);
    job.length = map.length;
    job.fps = map.fps;
    job.width = source.width();
    job.height = source.height();
    for (const auto& a : map.anchors) {
        job.conditioning.push_back({a.frame, source.frames[source_frame_index(a.source_time, source)]});
    }
    validate(job);
    return job;
}

double mean_absolute_error(const Image& a, const Image& b) {
    if (!a.same_size(b) || a.rgb.size() != b.rgb.size()) {
        throw Error(ErrorCode::DimensionMismatch, "images differ in size");
    }
    if (a.rgb.empty()) {
        return 0.0;
    }
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        total += static_cast<std::uint64_t>(std::abs(int{a.rgb[i]} - int{b.rgb[i]}));
    }
    return static_cast<double>(total) / static_cast<double>(a.rgb.size());
}

void check_contract(const CompletionJob& job, const FrameSequence& output, double tolerance) {
    auto violation = [](const std::string& what) { throw Error(ErrorCode::ContractViolation, what); };
    if (output.size() != static_cast<std::size_t>(job.length)) {
        violation("expected " + std::to_string(job.length) + " frames, got " + std::to_string(output.size()));
    }
    if (std::abs(output.fps - job.fps) > 1e-9 * job.fps) {
        violation("output fps differs from the job");
    }
    for (std::size_t i = 0; i < output.size(); ++i) {
        const Image& f = output.frames[i];
        if (f.width != job.width || f.height != job.height || f.rgb.size() != f.pixel_count() * 3) {
            violation("frame " + std::to_string(i) + " has the wrong dimensions");
        }
    }
    for (const Conditioning& c : job.conditioning) {
        const double mae = mean_absolute_error(output.frames[static_cast<std::size_t>(c.frame)], c.image);
        if (mae > tolerance) {
            std::ostringstream msg;
            msg << "conditioning frame " << c.frame << " reproduced with MAE " << mae << " > " << tolerance;
            violation(msg.str());
        }
    }
}

FrameSequence backend_hold(const CompletionJob& job, const FrameSequence& source) {
    validate(job);
    check_source(job, source);
    FrameSequence out = blank_output(job);
    const auto& cond = job.conditioning;
    parallel_for(out.size(), [&](std::size_t f) {
        const int frame = static_cast<int>(f);
        const auto right = std::lower_bound(cond.begin(), cond.end(), frame,
                                            [](const Conditioning& c, int v) { return c.frame < v; });
        const Conditioning* pick = nullptr;
        if (right == cond.end()) {
            pick = &cond.back();
        } else if (right == cond.begin() || right->frame == frame) {
            pick = &*right;
        } else {
            const auto left = right - 1;
            pick = (frame - left->frame) <= (right->frame - frame) ? &*left : &*right;
        }
        out.frames[f] = pick->image;
    });
    return out;
}

FrameSequence backend_crossfade(const CompletionJob& job, const FrameSequence& source) {
    validate(job);
    check_source(job, source);
    std::vector<const Conditioning*> keys;
    Conditioning head{0, job.conditioning.front().image};
    Conditioning tail{job.length - 1, job.conditioning.back().image};
    if (job.conditioning.front().frame > 0) {
        keys.push_back(&head);
    }
    for (const auto& c : job.conditioning) {
        keys.push_back(&c);
    }
    if (job.conditioning.back().frame < job.length - 1) {
        keys.push_back(&tail);
    }

    FrameSequence out = blank_output(job);
    if (keys.size() == 1) {
        for (auto& f : out.frames) {
            f = keys.front()->image;
        }
        return out;
    }
    parallel_for(out.size(), [&](std::size_t fi) {
        const int f = static_cast<int>(fi);
        std::size_t seg = 0;
        while (seg + 2 < keys.size() && keys[seg + 1]->frame <= f) {
            ++seg;
        }
        const Conditioning& a = *keys[seg];
        const Conditioning& b = *keys[seg + 1];
        if (f == a.frame) {
            out.frames[fi] = a.image;
            return;
        }
        if (f == b.frame) {
            out.frames[fi] = b.image;
            return;
        }
        const std::int64_t den = b.frame - a.frame;
        const std::int64_t wa = b.frame - f;
        const std::int64_t wb = f - a.frame;
        Image img(job.width, job.height);
        for (std::size_t i = 0; i < img.rgb.size(); ++i) {
            const std::int64_t num = wa * a.image.rgb[i] + wb * b.image.rgb[i];
            img.rgb[i] = static_cast<std::uint8_t>((2 * num + den) / (2 * den));
        }
        out.frames[fi] = std::move(img);
    });
    return out;
}

FrameSequence backend_timewarp(const align::RetimingMap& map, const FrameSequence& source,
                               const TimewarpOptions& options) {
    validate(source);
    align::validate(map, source.duration());
    FrameSequence out;
    out.fps = map.fps;
    out.frames.resize(static_cast<std::size_t>(map.length));
    const double last = static_cast<double>(source.size() - 1);
    parallel_for(out.size(), [&](std::size_t f) {
        const double t = align::source_time_at(map, static_cast<int>(f));
        if (!options.blend) {
            out.frames[f] = source.frames[source_frame_index(t, source)];
            return;
        }
        const double pos = std::clamp(t * source.fps, 0.0, last);
        const auto i0 = static_cast<std::size_t>(std::floor(pos));
        const std::size_t i1 = std::min(i0 + 1, source.size() - 1);
        const double w = pos - static_cast<double>(i0);
        if (w <= 0.0 || i0 == i1) {
            out.frames[f] = source.frames[i0];
            return;
        }
        const Image& a = source.frames[i0];
        const Image& b = source.frames[i1];
        Image img(a.width, a.height);
        for (std::size_t i = 0; i < img.rgb.size(); ++i) {
            img.rgb[i] = static_cast<std::uint8_t>(std::floor((1.0 - w) * a.rgb[i] + w * b.rgb[i] + 0.5));
        }
        out.frames[f] = std::move(img);
    });
    return out;
}

void write_job(const CompletionJob& job, const fs::path& job_dir) {
    validate(job);
    std::error_code ec;
    fs::remove_all(job_dir / "out", ec);
    fs::remove_all(job_dir / "cond", ec);
    fs::create_directories(job_dir / "cond", ec);
    if (ec) {
        throw Error(ErrorCode::IoFailure, "cannot create job directory " + job_dir.string());
    }
    Json j;
    j["job_id"] = job.job_id;
    j["fps"] = job.fps;
    j["length"] = job.length;
    j["width"] = job.width;
    j["height"] = job.height;
    Json cond = Json::array();
    for (std::size_t k = 0; k < job.conditioning.size(); ++k) {
        const std::string rel = cond_name(k);
        io::save_png(job.conditioning[k].image, job_dir / rel);
        cond.push_back({{"frame", job.conditioning[k].frame}, {"path", rel}});
    }
    j["conditioning"] = std::move(cond);
    j["prompt"] = job.prompt;
    io::write_json(j, job_dir / "job.json");
}

CompletionJob read_job(const fs::path& job_dir) {
    const Json j = io::read_json(job_dir / "job.json");
    CompletionJob job;
    try {
        job.job_id = j.at("job_id").get<std::string>();
        job.fps = j.at("fps").get<double>();
        job.length = j.at("length").get<int>();
        job.width = j.at("width").get<int>();
        job.height = j.at("height").get<int>();
        if (j.contains("prompt") && !j.at("prompt").is_null()) {
            job.prompt = j.at("prompt").get<std::string>();
        }
        for (const Json& c : j.at("conditioning")) {
            job.conditioning.push_back(
                {c.at("frame").get<int>(), io::load_png(job_dir / c.at("path").get<std::string>())});
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("job.json: ") + e.what());
    }
    validate(job);
    return job;
}

FrameSequence backend_external(const CompletionJob& job, const FrameSequence& source,
                               const ExternalOptions& options) {
    validate(job);
    check_source(job, source);
    std::vector<std::string> argv = split_command(options.command);
    if (argv.empty()) {
        throw Error(ErrorCode::InvalidArgument, "external backend needs a command");
    }
    if (options.job_dir.empty()) {
        throw Error(ErrorCode::InvalidArgument, "external backend needs a job directory");
    }
    write_job(job, options.job_dir);
    argv.push_back(options.job_dir.string());
    const int status = run_process(argv);
    if (status != 0) {
        throw Error(ErrorCode::BackendFailed, "'" + options.command + "' exited with status " + std::to_string(status));
    }
    FrameSequence out;
    try {
        out = io::load_png_directory(options.job_dir / "out", job.fps);
    } catch (const Error& e) {
        throw Error(ErrorCode::ContractViolation, std::string("reading backend output: ") + e.what());
    }
    check_contract(job, out, options.tolerance);
    return out;
}

namespace {

class HoldBackend final : public CompletionBackend {
public:
    std::string name() const override { return "hold"; }
    FrameSequence complete(const CompletionJob& job, const FrameSequence& source) override {
        return backend_hold(job, source);
    }
};

class CrossfadeBackend final : public CompletionBackend {
public:
    std::string name() const override { return "crossfade"; }
    FrameSequence complete(const CompletionJob& job, const FrameSequence& source) override {
        return backend_crossfade(job, source);
    }
};

// Resamples the source along the retiming map; the job only fixes the
// output shape.
class TimewarpBackend final : public CompletionBackend {
public:
    TimewarpBackend(align::RetimingMap map, TimewarpOptions options) : map_(std::move(map)), options_(options) {}
    std::string name() const override { return "timewarp"; }
    FrameSequence complete(const CompletionJob& job, const FrameSequence& source) override {
        if (job.length != map_.length) {
            throw Error(ErrorCode::InvalidJob, "job length differs from the retiming map");
        }
        FrameSequence out = backend_timewarp(map_, source, options_);
        // Conditioning images may differ from the mapped source frame (for
        // instance a frame carried over from a previous segment).
        for (const auto& c : job.conditioning) {
            out.frames[static_cast<std::size_t>(c.frame)] = c.image;
        }
        return out;
    }

private:
    align::RetimingMap map_;
    TimewarpOptions options_;
};

class ExternalBackend final : public CompletionBackend {
public:
    explicit ExternalBackend(ExternalOptions options) : options_(std::move(options)) {}
    std::string name() const override { return "external"; }
    FrameSequence complete(const CompletionJob& job, const FrameSequence& source) override {
        return backend_external(job, source, options_);
    }

private:
    ExternalOptions options_;
};

}  // namespace

std::unique_ptr<CompletionBackend> make_backend(const BackendOptions& options) {
    if (options.name == "hold") {
        return std::make_unique<HoldBackend>();
    }
    if (options.name == "crossfade") {
        return std::make_unique<CrossfadeBackend>();
    }
    if (options.name == "timewarp") {
        return std::make_unique<TimewarpBackend>(options.map, options.timewarp);
    }
    if (options.name == "external") {
        return std::make_unique<ExternalBackend>(options.external);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown backend '" + options.name + "'");
}

}  // namespace mvaa::render
