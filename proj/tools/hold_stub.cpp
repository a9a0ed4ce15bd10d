// Reference completion backend for the job-directory protocol: reads
// job.json and cond/, writes out/000001.png ... holding the nearest
// conditioning frame.
//
// usage: mvaa_hold_stub [--drop-last] [--shift N] [--fail] JOB_DIR

#include "mvaa/error.h"
#include "mvaa/io.h"
#include "mvaa/render.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    bool drop_last = false;
    bool fail = false;
    int shift = 0;
    std::string job_dir;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--drop-last") {
            drop_last = true;
        } else if (arg == "--fail") {
            fail = true;
        } else if (arg == "--shift" && i + 1 < argc) {
            shift = std::stoi(argv[++i]);
        } else {
            job_dir = arg;
        }
    }
    if (job_dir.empty()) {
        std::cerr << "usage: mvaa_hold_stub [--drop-last] [--shift N] [--fail] JOB_DIR\n";
        return 2;
    }
    if (fail) {
        std::cerr << "mvaa_hold_stub: failing on request\n";
        return 1;
    }
    try {
        const mvaa::render::CompletionJob job = mvaa::render::read_job(job_dir);
        mvaa::FrameSequence source;
        source.fps = job.fps;
        for (const auto& c : job.conditioning) {
            source.frames.push_back(c.image);
        }
        mvaa::FrameSequence out = mvaa::render::backend_hold(job, source);
        if (drop_last) {
            out.frames.pop_back();
        }
        const fs::path dir = fs::path(job_dir) / "out";
        fs::create_directories(dir);
        for (std::size_t i = 0; i < out.frames.size(); ++i) {
            mvaa::Image& img = out.frames[i];
            for (auto& v : img.rgb) {
                v = static_cast<std::uint8_t>(std::clamp(int{v} + shift, 0, 255));
            }
            char name[32];
            std::snprintf(name, sizeof(name), "%06zu.png", i + 1);
            mvaa::io::save_png(img, dir / name);
        }
    } catch (const std::exception& e) {
        std::cerr << "mvaa_hold_stub: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
