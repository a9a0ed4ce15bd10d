#include "mvaa/cli.h"

#include "mvaa/align.h"
#include "mvaa/artifacts.h"
#include "mvaa/audio.h"
#include "mvaa/config.h"
#include "mvaa/error.h"
#include "mvaa/io.h"
#include "mvaa/metrics.h"
#include "mvaa/motion.h"
#include "mvaa/render.h"

#include <CLI11.hpp>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>

namespace mvaa::cli {

namespace fs = std::filesystem;

namespace {

// Flags land in a scratch config; only the ones actually given override the
// values from defaults and --config.
struct Overrides {
    PipelineConfig flags;
    std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&, const PipelineConfig&)>>> list;

    template <typename Get>
    void option(CLI::App* app, const std::string& name, Get get, const std::string& help) {
        CLI::Option* opt = app->add_option(name, get(flags), help);
        list.emplace_back(opt, [get](PipelineConfig& dst, const PipelineConfig& src) {
            get(dst) = get(const_cast<PipelineConfig&>(src));
        });
    }

    template <typename Get>
    void flag(CLI::App* app, const std::string& name, Get get, const std::string& help) {
        CLI::Option* opt = app->add_flag(name, get(flags), help);
        list.emplace_back(opt, [get](PipelineConfig& dst, const PipelineConfig& src) {
            get(dst) = get(const_cast<PipelineConfig&>(src));
        });
    }

    void apply(PipelineConfig& config) const {
        for (const auto& [opt, copy] : list) {
            if (opt->count() > 0) {
                copy(config, flags);
            }
        }
    }
};

void add_beat_flags(CLI::App* app, Overrides& o) {
    o.option(app, "--n-fft", [](PipelineConfig& c) -> int& { return c.beats.onset.n_fft; }, "STFT size");
    o.option(app, "--hop", [](PipelineConfig& c) -> int& { return c.beats.onset.hop; }, "STFT hop in samples");
    o.option(app, "--n-mels", [](PipelineConfig& c) -> int& { return c.beats.onset.n_mels; }, "mel bands");
    o.option(app, "--bpm-min", [](PipelineConfig& c) -> double& { return c.beats.tempo.bpm_min; }, "lowest tempo");
    o.option(app, "--bpm-max", [](PipelineConfig& c) -> double& { return c.beats.tempo.bpm_max; }, "highest tempo");
    o.option(app, "--prior-bpm", [](PipelineConfig& c) -> double& { return c.beats.tempo.prior_bpm; },
             "centre of the tempo prior");
    o.option(app, "--tightness", [](PipelineConfig& c) -> double& { return c.beats.tightness; },
             "beat tracker tempo adherence");
}

void add_motion_flags(CLI::App* app, Overrides& o) {
    o.option(app, "--sigma-frames", [](PipelineConfig& c) -> double& { return c.motion.sigma_frames; },
             "Gaussian smoothing width in frames");
    o.option(app, "--min-distance", [](PipelineConfig& c) -> int& { return c.motion.peaks.min_distance_frames; },
             "minimum frames between peaks");
    o.option(app, "--threshold-rel", [](PipelineConfig& c) -> double& { return c.motion.peaks.threshold_rel; },
             "relative peak threshold in [0, 1)");
}

void add_match_flags(CLI::App* app, Overrides& o) {
    o.flag(app, "--eq1-strict", [](PipelineConfig& c) -> bool& { return c.eq1_strict; },
           "with more beats than peaks, match the first beats in order");
}

void add_render_flags(CLI::App* app, Overrides& o) {
    o.option(app, "--backend", [](PipelineConfig& c) -> std::string& { return c.backend; },
             "hold, crossfade, timewarp or external");
    o.option(app, "--output-fps", [](PipelineConfig& c) -> double& { return c.output_fps; },
             "output frame rate (default: source)");
    o.flag(app, "--blend", [](PipelineConfig& c) -> bool& { return c.blend; },
           "timewarp: blend the two nearest source frames");
    o.option(app, "--command", [](PipelineConfig& c) -> std::string& { return c.command; },
             "external backend command; the job directory is appended");
    o.option(app, "--job-dir", [](PipelineConfig& c) -> std::string& { return c.job_dir; },
             "external backend job directory");
}

void add_eval_flags(CLI::App* app, Overrides& o) {
    o.option(app, "--sigma", [](PipelineConfig& c) -> double& { return c.beat_align_sigma; },
             "beat alignment kernel width in seconds");
    o.flag(app, "--transposed", [](PipelineConfig& c) -> bool& { return c.transposed; },
           "average beat alignment over peaks instead of beats");
}

void emit_json(const Json& j, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << dump_fixed(j) << "\n";
    } else {
        io::write_json(j, path);
    }
}

double output_fps_for(const PipelineConfig& c, const FrameSequence& source) {
    return c.output_fps > 0.0 ? c.output_fps : source.fps;
}

FrameSequence complete(const PipelineConfig& c, const align::RetimingMap& map, const FrameSequence& source,
                       render::CompletionJob job, const fs::path& job_dir) {
    render::BackendOptions options;
    options.name = c.backend;
    options.map = map;
    options.timewarp.blend = c.blend;
    options.external.command = c.command;
    options.external.job_dir = job_dir;
    return render::make_backend(options)->complete(job, source);
}

// Removes what a failed command wrote.
class OutputGuard {
public:
    explicit OutputGuard(fs::path dir) : dir_(std::move(dir)), existed_(fs::exists(dir_)) {}
    ~OutputGuard() {
        if (committed_) {
            return;
        }
        std::error_code ec;
        if (!existed_) {
            fs::remove_all(dir_, ec);
            return;
        }
        for (const auto& p : created_) {
            fs::remove_all(p, ec);
        }
    }
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;

    fs::path track(const fs::path& name) {
        created_.push_back(dir_ / name);
        return created_.back();
    }
    void commit() { committed_ = true; }

private:
    fs::path dir_;
    bool existed_;
    bool committed_ = false;
    std::vector<fs::path> created_;
};

int cmd_beats(const PipelineConfig& c, const std::string& audio_path, const std::string& out_path,
              std::ostream& out) {
    const AudioTrack track = io::load_wav(audio_path);
    emit_json(io::to_json(audio::extract_beats(track, c.beats)), out_path, out);
    return kExitOk;
}

int cmd_motion(const PipelineConfig& c, const std::string& video_path, bool no_smooth, const std::string& out_path,
               std::ostream& out) {
    const FrameSequence video = io::load_frames(video_path);
    motion::MotionEnergy energy = motion::motion_energy(video);
    if (!no_smooth) {
        energy = motion::smooth(energy, c.motion.sigma_frames);
    }
    const motion::PeakSet peaks = motion::find_peaks(energy, c.motion.peaks);
    emit_json(io::to_json(peaks, &energy), out_path, out);
    return kExitOk;
}

int cmd_align(const PipelineConfig& c, const std::string& beats_path, const std::string& peaks_path,
              bool bruteforce, const std::string& out_path, std::ostream& out) {
    const audio::BeatGrid beats = io::beat_grid_from_json(io::read_json(beats_path));
    const motion::PeakSet peaks = io::peak_set_from_json(io::read_json(peaks_path));
    const align::MatchOptions options{c.eq1_strict};
    const align::AlignmentPlan plan =
        bruteforce ? align::match_bruteforce(beats, peaks, options) : align::match(beats, peaks, options);
    emit_json(io::to_json(plan), out_path, out);
    return kExitOk;
}

int cmd_render(const PipelineConfig& c, const std::string& video_path, const std::string& plan_path,
               const std::string& retime_path, const std::string& retime_out, const std::string& out_path) {
    const FrameSequence video = io::load_frames(video_path);
    align::RetimingMap map;
    if (!retime_path.empty()) {
        map = io::read_retiming(retime_path);
    } else {
        const align::AlignmentPlan plan = io::read_plan(plan_path);
        map = align::build_retiming(plan, video, plan.music_duration, output_fps_for(c, video));
    }
    align::validate(map, video.duration());

    fs::path job_dir = c.job_dir;
    bool temp_job = false;
    if (c.backend == "external" && job_dir.empty()) {
        job_dir = fs::temp_directory_path() / ("mvaa_job_" + std::to_string(::getpid()));
        temp_job = true;
    }
    FrameSequence rendered;
    try {
        rendered = complete(c, map, video, render::make_job(map, video), job_dir);
    } catch (...) {
        if (temp_job) {
            std::error_code ec;
            fs::remove_all(job_dir, ec);
        }
        throw;
    }
    if (temp_job) {
        std::error_code ec;
        fs::remove_all(job_dir, ec);
    }
    io::save_frames(rendered, out_path);
    if (!retime_out.empty()) {
        io::write_retiming(map, retime_out);
    }
    return kExitOk;
}

std::vector<std::vector<double>> read_features(const std::string& path) {
    const Json j = io::read_json(path);
    std::vector<std::vector<double>> features;
    try {
        features = j.get<std::vector<std::vector<double>>>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, path + ": features must be an array of number arrays");
    }
    return features;
}

metrics::EvalReport evaluate(const PipelineConfig& c, const FrameSequence& rendered,
                             const std::vector<double>& beats, const FrameSequence* source,
                             const std::vector<double>* input_peaks,
                             const std::vector<std::vector<double>>* features) {
    const motion::PeakSet peaks = motion::extract_peaks(rendered, c.motion);
    metrics::EvalReport report;
    report.sigma = c.beat_align_sigma;
    report.transposed = c.transposed;
    report.beat_count = beats.size();
    report.peak_count = peaks.size();
    report.beat_align = metrics::beat_align(beats, peaks.peak_times, c.beat_align_sigma, c.transposed);
    if (features != nullptr) {
        if (features->size() != rendered.size()) {
            throw Error(ErrorCode::InvalidArgument, "feature file must hold one vector per frame");
        }
        report.embedder = "features";
        report.temporal_consistency = metrics::temporal_consistency(*features);
    } else {
        const metrics::BoxEmbedder embedder;
        report.embedder = embedder.name();
        report.temporal_consistency = metrics::temporal_consistency(rendered, embedder);
    }
    if (source != nullptr) {
        report.content = metrics::content_preservation(rendered, *source);
    }
    if (input_peaks != nullptr) {
        report.input_beat_align = metrics::beat_align(beats, *input_peaks, c.beat_align_sigma, c.transposed);
    }
    return report;
}

int cmd_eval(const PipelineConfig& c, const std::string& video_path, const std::string& beats_path,
             const std::string& audio_path, const std::string& source_path, const std::string& features_path,
             const std::string& out_path, std::ostream& out) {
    if (beats_path.empty() == audio_path.empty()) {
        throw Error(ErrorCode::InvalidArgument, "eval needs exactly one of --beats or --audio");
    }
    const FrameSequence rendered = io::load_frames(video_path);
    const audio::BeatGrid beats = beats_path.empty() ? audio::extract_beats(io::load_wav(audio_path), c.beats)
                                                     : io::beat_grid_from_json(io::read_json(beats_path));
    std::optional<FrameSequence> source;
    std::optional<motion::PeakSet> input_peaks;
    if (!source_path.empty()) {
        source = io::load_frames(source_path);
        input_peaks = motion::extract_peaks(*source, c.motion);
    }
    std::optional<std::vector<std::vector<double>>> features;
    if (!features_path.empty()) {
        features = read_features(features_path);
    }
    const metrics::EvalReport report =
        evaluate(c, rendered, beats.beats, source ? &*source : nullptr,
                 input_peaks ? &input_peaks->peak_times : nullptr, features ? &*features : nullptr);
    emit_json(io::to_json(report), out_path, out);
    return kExitOk;
}

// Output frame boundaries of the segments, strictly increasing, each segment
// at least 2 frames long.
std::vector<int> segment_bounds(double duration, double segment_seconds, double fps) {
    const int total = align::round_half_up(duration * fps);
    std::vector<int> bounds{0};
    if (segment_seconds > 0.0) {
        for (int k = 1; static_cast<double>(k) * segment_seconds < duration; ++k) {
            const int g = align::round_half_up(static_cast<double>(k) * segment_seconds * fps);
            if (g - bounds.back() >= 2 && total - g >= 2) {
                bounds.push_back(g);
            }
        }
    }
    bounds.push_back(total);
    return bounds;
}

char* seg_name(char* buf, std::size_t n, const char* stem, std::size_t k) {
    std::snprintf(buf, n, "%s_%03zu.json", stem, k);
    return buf;
}

int cmd_run(const PipelineConfig& c, const std::string& video_path, const std::string& audio_path,
            const std::string& out_dir, const std::string& format) {
    if (format != "png" && format != "y4m") {
        throw Error(ErrorCode::InvalidArgument, "--format must be png or y4m");
    }
    const FrameSequence video = io::load_frames(video_path);
    const AudioTrack track = io::load_wav(audio_path);

    OutputGuard guard(out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoFailure, "cannot create " + out_dir);
    }

    const audio::BeatGrid beats = audio::extract_beats(track, c.beats);
    io::write_json(io::to_json(beats), guard.track("beats.json"));
    motion::MotionEnergy energy = motion::smooth(motion::motion_energy(video), c.motion.sigma_frames);
    const motion::PeakSet peaks = motion::find_peaks(energy, c.motion.peaks);
    io::write_json(io::to_json(peaks, &energy), guard.track("peaks.json"));

    const double fps = output_fps_for(c, video);
    const align::MatchOptions options{c.eq1_strict};
    const bool own_job_dir = c.job_dir.empty();
    const fs::path job_dir = own_job_dir ? guard.track("job") : fs::path(c.job_dir);

    align::AlignmentPlan plan;
    if (!beats.beats.empty()) {
        plan = align::match(beats, peaks, options);
    } else {
        plan.source_fps = video.fps;
        plan.music_duration = beats.duration;
    }
    const align::RetimingMap map = align::build_retiming(plan, video, beats.duration, fps);
    io::write_plan(plan, guard.track("plan.json"));
    io::write_retiming(map, guard.track("retime.json"));

    FrameSequence rendered;
    rendered.fps = fps;
    const std::vector<int> bounds = segment_bounds(beats.duration, c.segment_seconds, fps);
    if (bounds.size() == 2) {
        rendered = complete(c, map, video, render::make_job(map, video, "mvaa_0"), job_dir);
    }
    for (std::size_t k = 0; bounds.size() > 2 && k + 1 < bounds.size(); ++k) {
        // Segment k >= 1 starts one frame early, on the last frame of segment k - 1.
        const int first = k == 0 ? 0 : bounds[k] - 1;
        const int last = bounds[k + 1] - 1;
        const double shift = static_cast<double>(first) / fps;

        align::AlignmentPlan seg_plan;
        seg_plan.source_fps = plan.source_fps;
        seg_plan.music_duration = static_cast<double>(last - first + 1) / fps;
        for (const auto& p : plan.pairs) {
            const int f = align::round_half_up(p.beat_time * fps);
            if (f >= first && f <= last) {
                align::MatchedPair q = p;
                q.beat_time -= shift;
                seg_plan.pairs.push_back(q);
                seg_plan.total_cost += std::abs(q.beat_time + shift - q.peak_time);
            }
        }
        align::RetimingMap seg_map;
        seg_map.fps = fps;
        seg_map.length = last - first + 1;
        seg_map.anchors.push_back({0, align::source_time_at(map, first)});
        for (const auto& a : map.anchors) {
            if (a.frame > first && a.frame < last) {
                seg_map.anchors.push_back({a.frame - first, a.source_time});
            }
        }
        seg_map.anchors.push_back({last - first, align::source_time_at(map, last)});

        char name[64];
        io::write_plan(seg_plan, guard.track(seg_name(name, sizeof(name), "plan", k)));
        io::write_retiming(seg_map, guard.track(seg_name(name, sizeof(name), "retime", k)));

        render::CompletionJob job = render::make_job(seg_map, video, "mvaa_" + std::to_string(k));
        const long lead = k == 0 ? 0 : 1;
        if (lead == 1) {
            job.conditioning.front().image = rendered.frames.back();
        }
        FrameSequence part = complete(c, seg_map, video, std::move(job), job_dir);
        rendered.frames.insert(rendered.frames.end(), std::make_move_iterator(part.frames.begin() + lead),
                               std::make_move_iterator(part.frames.end()));
    }
    if (own_job_dir) {
        fs::remove_all(job_dir, ec);
    }

    const fs::path video_out = guard.track(format == "png" ? "video" : "video.y4m");
    io::save_frames(rendered, video_out);

    const metrics::EvalReport report = evaluate(c, rendered, beats.beats, &video, &peaks.peak_times, nullptr);
    io::write_json(io::to_json(report), guard.track("report.json"));
    guard.commit();
    return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retimes a video so its motion peaks land on the beats of a music track.", "mvaa"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file of pipeline settings")->check(CLI::ExistingFile);

    Overrides o;
    std::string out_path;
    std::string in_a;
    std::string in_b;

    CLI::App* beats = app.add_subcommand("beats", "estimate the beat grid of a WAV file");
    beats->fallthrough();
    beats->add_option("audio", in_a, "input WAV")->required();
    beats->add_option("-o,--output", out_path, "output JSON (default: stdout)");
    add_beat_flags(beats, o);

    bool no_smooth = false;
    CLI::App* mot = app.add_subcommand("motion", "find motion peaks in a video");
    mot->fallthrough();
    mot->add_option("video", in_a, "input video (.y4m or PNG directory)")->required();
    mot->add_option("-o,--output", out_path, "output JSON (default: stdout)");
    mot->add_flag("--no-smooth", no_smooth, "skip Gaussian smoothing");
    add_motion_flags(mot, o);

    bool bruteforce = false;
    CLI::App* aln = app.add_subcommand("align", "match beats to motion peaks");
    aln->fallthrough();
    aln->add_option("beats", in_a, "beat grid JSON")->required();
    aln->add_option("peaks", in_b, "peak set JSON")->required();
    aln->add_option("-o,--output", out_path, "output plan JSON (default: stdout)");
    aln->add_flag("--bruteforce", bruteforce, "exhaustive search (small inputs only)");
    add_match_flags(aln, o);

    std::string plan_path;
    std::string retime_path;
    std::string retime_out;
    CLI::App* ren = app.add_subcommand("render", "retime a video with a completion backend");
    ren->fallthrough();
    ren->add_option("video", in_a, "source video")->required();
    ren->add_option("-o,--output", out_path, "output video (.y4m or PNG directory)")->required();
    auto* plan_opt = ren->add_option("--plan", plan_path, "alignment plan JSON");
    auto* retime_opt = ren->add_option("--retime", retime_path, "retiming map JSON");
    plan_opt->excludes(retime_opt);
    ren->add_option("--retime-out", retime_out, "write the retiming map used");
    add_render_flags(ren, o);

    std::string beats_path;
    std::string audio_path;
    std::string source_path;
    std::string features_path;
    CLI::App* ev = app.add_subcommand("eval", "score a rendered video against a beat grid");
    ev->fallthrough();
    ev->add_option("video", in_a, "rendered video")->required();
    ev->add_option("--beats", beats_path, "beat grid JSON");
    ev->add_option("--audio", audio_path, "music WAV (beats are estimated)");
    ev->add_option("--source", source_path, "unedited source video for content preservation");
    ev->add_option("--features", features_path, "JSON array of per-frame feature vectors");
    ev->add_option("-o,--output", out_path, "output report JSON (default: stdout)");
    add_eval_flags(ev, o);
    add_motion_flags(ev, o);
    add_beat_flags(ev, o);

    std::string format = "png";
    CLI::App* run_cmd = app.add_subcommand("run", "full pipeline: beats, peaks, matching, rendering, report");
    run_cmd->fallthrough();
    run_cmd->add_option("video", in_a, "source video")->required();
    run_cmd->add_option("audio", in_b, "music WAV")->required();
    run_cmd->add_option("-o,--output", out_path, "output directory")->required();
    run_cmd->add_option("--format", format, "rendered video format: png or y4m");
    run_cmd->add_option("--segment-seconds", o.flags.segment_seconds, "render long music in segments");
    o.list.emplace_back(run_cmd->get_option("--segment-seconds"),
                        [](PipelineConfig& d, const PipelineConfig& s) { d.segment_seconds = s.segment_seconds; });
    add_beat_flags(run_cmd, o);
    add_motion_flags(run_cmd, o);
    add_match_flags(run_cmd, o);
    add_render_flags(run_cmd, o);
    add_eval_flags(run_cmd, o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    PipelineConfig config;
    if (!config_path.empty()) {
        config = load_config(config_path);
    }
    o.apply(config);
    validate(config);

    if (beats->parsed()) {
        return cmd_beats(config, in_a, out_path, out);
    }
    if (mot->parsed()) {
        return cmd_motion(config, in_a, no_smooth, out_path, out);
    }
    if (aln->parsed()) {
        return cmd_align(config, in_a, in_b, bruteforce, out_path, out);
    }
    if (ren->parsed()) {
        if (plan_path.empty() && retime_path.empty()) {
            throw Error(ErrorCode::InvalidArgument, "render needs --plan or --retime");
        }
        return cmd_render(config, in_a, plan_path, retime_path, retime_out, out_path);
    }
    if (ev->parsed()) {
        return cmd_eval(config, in_a, beats_path, audio_path, source_path, features_path, out_path, out);
    }
    return cmd_run(config, in_a, in_b, out_path, format);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const Error& e) {
        err << "mvaa: " << e.what() << "\n";
        return is_input_error(e.code()) ? kExitInput : kExitProcessing;
    } catch (const std::exception& e) {
        err << "mvaa: " << e.what() << "\n";
        return kExitProcessing;
    }
}

int main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, std::cout, std::cerr);
}

}  // namespace mvaa::cli
