#include "mvaa/audio.h"

#include "mvaa/error.h"
#include "mvaa/parallel.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

namespace mvaa::audio {

namespace {

constexpr double kLogFloor = 1e-10;

double sinc(double x) {
    if (std::abs(x) < 1e-12) {
        return 1.0;
    }
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
struct PlanFree {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

double hz_to_mel(double hz) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (hz >= min_log_hz) {
        return min_log_mel + std::log(hz / min_log_hz) / logstep;
    }
    return hz / f_sp;
}

double mel_to_hz(double mel) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (mel >= min_log_mel) {
        return min_log_hz * std::exp(logstep * (mel - min_log_mel));
    }
    return f_sp * mel;
}

// Slaney-normalised triangular mel filters over [0, sr/2], n_mels x bins.
std::vector<std::vector<double>> mel_filterbank(double sample_rate, int n_fft, int n_mels) {
    const int bins = n_fft / 2 + 1;
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                          static_cast<double>(n_mels + 1));
    }
    std::vector<std::vector<double>> weights(static_cast<std::size_t>(n_mels), std::vector<double>(bins, 0.0));
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges[m];
        const double mid = edges[m + 1];
        const double hi = edges[m + 2];
        const double norm = 2.0 / (hi - lo);
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / n_fft;
            const double rising = (f - lo) / (mid - lo);
            const double falling = (hi - f) / (hi - mid);
            weights[m][k] = std::max(0.0, std::min(rising, falling)) * norm;
        }
    }
    return weights;
}

// log-mel power spectrogram (dB), frames centred at t * hop with zero padding.
std::vector<std::vector<double>> log_mel_spectrogram(const std::vector<float>& samples, double sample_rate,
                                                     const OnsetParams& p) {
    const std::size_t n_fft = static_cast<std::size_t>(p.n_fft);
    const std::size_t hop = static_cast<std::size_t>(p.hop);
    const std::size_t bins = n_fft / 2 + 1;
    const std::size_t frames = 1 + samples.size() / hop;

    std::vector<double> window(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_fft));
    }
    const auto filters = mel_filterbank(sample_rate, p.n_fft, p.n_mels);

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n_fft)));
    std::unique_ptr<fftw_complex, FftwFree> out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    std::unique_ptr<fftw_plan_s, PlanFree> plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.get(), out.get(), FFTW_ESTIMATE));
    }

    std::vector<double> power(bins);
    std::vector<std::vector<double>> logmel(frames, std::vector<double>(static_cast<std::size_t>(p.n_mels)));
    const long long half = static_cast<long long>(n_fft / 2);
    for (std::size_t t = 0; t < frames; ++t) {
        const long long start = static_cast<long long>(t * hop) - half;
        for (std::size_t i = 0; i < n_fft; ++i) {
            const long long s = start + static_cast<long long>(i);
            const double x = (s >= 0 && s < static_cast<long long>(samples.size())) ? samples[static_cast<std::size_t>(s)] : 0.0;
            in.get()[i] = x * window[i];
        }
        fftw_execute(plan.get());
        for (std::size_t k = 0; k < bins; ++k) {
            power[k] = out.get()[k][0] * out.get()[k][0] + out.get()[k][1] * out.get()[k][1];
        }
        for (std::size_t m = 0; m < filters.size(); ++m) {
            const double e = std::inner_product(filters[m].begin(), filters[m].end(), power.begin(), 0.0);
            logmel[t][m] = 10.0 * std::log10(std::max(e, kLogFloor));
        }
    }
    return logmel;
}

// Lag (in frames) at which the tempo equals bpm.
double lag_for_bpm(double bpm, double hop_seconds) {
    return 60.0 / (bpm * hop_seconds);
}

}  // namespace

AudioTrack resample(const AudioTrack& track, double target_rate) {
    if (!(target_rate > 0.0) || !(track.sample_rate > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sample rates must be positive");
    }
    if (track.sample_rate == target_rate) {
        return track;
    }
    const double ratio = target_rate / track.sample_rate;
    const double cutoff = std::min(1.0, ratio);
    constexpr double zero_crossings = 16.0;
    const double half_width = zero_crossings / cutoff;
    const auto n_in = static_cast<long long>(track.samples.size());
    const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));

    AudioTrack out;
    out.sample_rate = target_rate;
    out.samples.assign(n_out, 0.0f);

    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (n_out + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t end = std::min(n_out, (b + 1) * kBlock);
        for (std::size_t n = b * kBlock; n < end; ++n) {
            const double t = static_cast<double>(n) / ratio;
            const long long k0 = std::max(0LL, static_cast<long long>(std::ceil(t - half_width)));
            const long long k1 = std::min(n_in - 1, static_cast<long long>(std::floor(t + half_width)));
            double acc = 0.0;
            double wsum = 0.0;
            for (long long k = k0; k <= k1; ++k) {
                const double x = t - static_cast<double>(k);
                const double taper = 0.5 + 0.5 * std::cos(std::numbers::pi * x / half_width);
                const double w = cutoff * sinc(cutoff * x) * taper;
                acc += w * track.samples[static_cast<std::size_t>(k)];
                wsum += w;
            }
            const double v = wsum > 1e-9 ? acc / wsum : 0.0;
            out.samples[n] = static_cast<float>(std::clamp(v, -1.0, 1.0));
        }
    });
    return out;
}

OnsetEnvelope onset_envelope(const AudioTrack& input, const OnsetParams& params) {
    if (params.n_fft < 16 || params.hop <= 0 || params.n_fft < params.hop || params.n_mels <= 0) {
        throw Error(ErrorCode::InvalidArgument, "onset parameters need n_fft >= hop > 0, n_fft >= 16, n_mels > 0");
    }
    if (input.samples.empty() || !(input.sample_rate > 0.0)) {
        throw Error(ErrorCode::AudioTooShort, "audio is empty");
    }
    const AudioTrack track = resample(input, kAnalysisSampleRate);
    const double sr = track.sample_rate;
    const std::size_t frames = 1 + track.samples.size() / static_cast<std::size_t>(params.hop);
    if (frames < 2) {
        throw Error(ErrorCode::AudioTooShort, "audio yields fewer than 2 analysis frames");
    }

    const auto logmel = log_mel_spectrogram(track.samples, sr, params);

    std::vector<double> flux(frames, 0.0);
    for (std::size_t t = 1; t < frames; ++t) {
        double acc = 0.0;
        for (std::size_t m = 0; m < logmel[t].size(); ++m) {
            acc += std::max(0.0, logmel[t][m] - logmel[t - 1][m]);
        }
        flux[t] = acc;
    }

    OnsetEnvelope env;
    env.hop_seconds = params.hop / sr;
    // A frame's flux responds once an event enters the leading half of its
    // window; centre that response on the event.
    env.start_offset = 0.5 * (params.n_fft - params.hop) / sr;
    env.duration = input.duration();

    const auto half = static_cast<std::size_t>(std::lround(params.local_mean_seconds / (2.0 * env.hop_seconds)));
    std::vector<double> prefix(frames + 1, 0.0);
    for (std::size_t t = 0; t < frames; ++t) {
        prefix[t + 1] = prefix[t] + flux[t];
    }
    env.values.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t lo = t >= half ? t - half : 0;
        const std::size_t hi = std::min(frames, t + half + 1);
        const double mean = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
        env.values[t] = std::max(0.0, flux[t] - mean);
    }
    env.values[0] = 0.0;
    return env;
}

TempoEstimate estimate_tempo(const OnsetEnvelope& env, const TempoParams& params) {
    if (!(params.bpm_min > 0.0) || !(params.bpm_max > params.bpm_min) || !(params.prior_bpm > 0.0) ||
        !(params.prior_octaves > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "tempo parameters need 0 < bpm_min < bpm_max and a positive prior");
    }
    if (!(env.hop_seconds > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "envelope hop must be positive");
    }
    const double lag_lo = lag_for_bpm(params.bpm_max, env.hop_seconds);
    const double lag_hi = lag_for_bpm(params.bpm_min, env.hop_seconds);
    const auto n = static_cast<long long>(env.values.size());
    const long long min_lag = std::max(1LL, static_cast<long long>(std::ceil(lag_lo)));
    if (n < 2 * min_lag) {
        throw Error(ErrorCode::EnvelopeTooShort, "envelope spans fewer than two candidate periods");
    }
    const long long max_lag = std::min(static_cast<long long>(std::floor(lag_hi)), n - 2);

    // Onsets quantised to the hop grid alternate between neighbouring lags;
    // a one-frame Gaussian blur lets both lags collect the same evidence.
    std::vector<double> blurred(env.values.size(), 0.0);
    {
        constexpr int radius = 4;
        double kernel[2 * radius + 1];
        double ksum = 0.0;
        for (int d = -radius; d <= radius; ++d) {
            kernel[d + radius] = std::exp(-0.5 * d * d);
            ksum += kernel[d + radius];
        }
        for (long long t = 0; t < n; ++t) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                long long i = t + d;
                i = i < 0 ? -i - 1 : (i >= n ? 2 * n - i - 1 : i);
                i = std::clamp(i, 0LL, n - 1);
                acc += kernel[d + radius] * env.values[static_cast<std::size_t>(i)];
            }
            blurred[static_cast<std::size_t>(t)] = acc / ksum;
        }
    }
    const double mean = std::accumulate(blurred.begin(), blurred.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centred(blurred.size());
    std::transform(blurred.begin(), blurred.end(), centred.begin(), [&](double v) { return v - mean; });

    auto autocorr = [&](long long lag) {
        double acc = 0.0;
        for (long long t = 0; t + lag < n; ++t) {
            acc += centred[static_cast<std::size_t>(t)] * centred[static_cast<std::size_t>(t + lag)];
        }
        return acc;
    };
    const double prior_period = 60.0 / params.prior_bpm;
    auto prior = [&](double lag) {
        const double octaves = std::log2(lag * env.hop_seconds / prior_period) / params.prior_octaves;
        return std::exp(-0.5 * octaves * octaves);
    };
    auto score = [&](long long lag) { return autocorr(lag) * prior(static_cast<double>(lag)); };

    const double energy = autocorr(0);
    const double fallback_period = std::clamp(prior_period, 60.0 / params.bpm_max, 60.0 / params.bpm_min);
    TempoEstimate est{fallback_period, 60.0 / fallback_period, 0.0};
    if (!(energy > 1e-12) || max_lag < min_lag) {
        return est;
    }

    long long best = -1;
    double best_score = 0.0;
    for (long long lag = min_lag; lag <= max_lag; ++lag) {
        const double s = score(lag);
        if (s > best_score) {
            best_score = s;
            best = lag;
        }
    }
    if (best < 0) {
        return est;
    }

    // Parabolic refinement of the integer lag, kept inside the tempo range.
    double lag = static_cast<double>(best);
    if (best - 1 >= 1 && best + 1 < n) {
        const double y0 = score(best - 1);
        const double y1 = best_score;
        const double y2 = score(best + 1);
        const double denom = y0 - 2.0 * y1 + y2;
        if (denom < 0.0) {
            lag += std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
        }
    }
    lag = std::clamp(lag, lag_lo, lag_hi);

    est.period = lag * env.hop_seconds;
    est.bpm = 60.0 / est.period;
    est.confidence = std::clamp(autocorr(best) / energy, 0.0, 1.0);
    return est;
}

BeatGrid track_beats(const OnsetEnvelope& env, const TempoEstimate& tempo, double tightness, bool trim) {
    if (!(tempo.period > 0.0) || !(env.hop_seconds > 0.0) || tightness < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "tempo period, hop and tightness must be valid");
    }
    const double period = tempo.period / env.hop_seconds;  // frames
    const auto n = static_cast<long long>(env.values.size());
    if (static_cast<double>(n) < period / 2.0) {
        throw Error(ErrorCode::NoBeatsFound, "envelope shorter than half a beat period");
    }
    // Predecessor gaps stay within [period / 2, 2 period] in exact frame units.
    const long long min_gap = std::max(1LL, static_cast<long long>(std::ceil(period / 2.0)));
    const long long max_gap = std::max(min_gap, static_cast<long long>(std::floor(2.0 * period)));

    // Unit-variance onset strength balances the transition penalty.
    std::vector<double> onset = env.values;
    const double mean = std::accumulate(onset.begin(), onset.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (const double v : onset) {
        var += (v - mean) * (v - mean);
    }
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    if (sd > 1e-12) {
        for (double& v : onset) {
            v /= sd;
        }
    }

    std::vector<double> penalty(static_cast<std::size_t>(max_gap + 1), 0.0);
    for (long long gap = min_gap; gap <= max_gap; ++gap) {
        const double l = std::log(static_cast<double>(gap) / period);
        penalty[static_cast<std::size_t>(gap)] = tightness * l * l;
    }

    std::vector<double> score(static_cast<std::size_t>(n));
    std::vector<long long> back(static_cast<std::size_t>(n), -1);
    for (long long t = 0; t < n; ++t) {
        double best = -std::numeric_limits<double>::infinity();
        long long arg = -1;
        for (long long gap = min_gap; gap <= max_gap && t - gap >= 0; ++gap) {
            const double cand = score[static_cast<std::size_t>(t - gap)] - penalty[static_cast<std::size_t>(gap)];
            if (cand > best) {
                best = cand;
                arg = t - gap;
            }
        }
        score[static_cast<std::size_t>(t)] = onset[static_cast<std::size_t>(t)] + (arg >= 0 ? best : 0.0);
        back[static_cast<std::size_t>(t)] = arg;
    }

    // The chain ends at the best-scoring frame within the final beat period.
    const long long tail = std::max(0LL, n - static_cast<long long>(std::llround(period)));
    long long end = n - 1;
    for (long long t = n - 1; t >= tail; --t) {
        if (score[static_cast<std::size_t>(t)] > score[static_cast<std::size_t>(end)]) {
            end = t;
        }
    }

    std::vector<long long> frames;
    for (long long t = end; t >= 0; t = back[static_cast<std::size_t>(t)]) {
        frames.push_back(t);
    }
    std::reverse(frames.begin(), frames.end());

    // Drop weak beats the chain extends into leading and trailing quiet
    // stretches: strength at most half the RMS strength over all beats.
    std::vector<double> strength;
    double sq = 0.0;
    for (const long long f : frames) {
        double s = 0.0;
        for (long long t = std::max(0LL, f - 1); t <= std::min(n - 1, f + 1); ++t) {
            s = std::max(s, onset[static_cast<std::size_t>(t)]);
        }
        strength.push_back(s);
        sq += s * s;
    }
    const double threshold = 0.5 * std::sqrt(sq / static_cast<double>(frames.size()));
    if (trim && threshold > 0.0) {
        std::size_t lo = 0;
        std::size_t hi = frames.size();
        while (lo < hi && strength[lo] <= threshold) {
            ++lo;
        }
        while (hi > lo && strength[hi - 1] <= threshold) {
            --hi;
        }
        frames = std::vector<long long>(frames.begin() + static_cast<long>(lo), frames.begin() + static_cast<long>(hi));
    }

    BeatGrid grid;
    grid.bpm = tempo.bpm;
    grid.duration = env.duration;
    for (const long long f : frames) {
        const double t = env.frame_time(static_cast<std::size_t>(f));
        if (t >= 0.0 && t <= env.duration) {
            grid.beats.push_back(t);
        }
    }
    if (grid.beats.empty()) {
        throw Error(ErrorCode::NoBeatsFound, "beat chain lies outside the audio");
    }
    return grid;
}

BeatGrid extract_beats(const AudioTrack& track, const BeatParams& params) {
    const OnsetEnvelope env = onset_envelope(track, params.onset);
    const TempoEstimate tempo = estimate_tempo(env, params.tempo);
    return track_beats(env, tempo, params.tightness, params.trim);
}

}  // namespace mvaa::audio
