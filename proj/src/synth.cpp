#include "pulsepipe/synth.hpp"

#include "pulsepipe/bp.hpp"
#include "pulsepipe/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pulsepipe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Poor windows keep a shallow beat on a steady carrier under heavy noise. The
// steady part stops the carrier from reading as a pure tone; the noise pulls
// envelope periodicity below the Good gate (median rho_fhr about 0.37).
constexpr double kPoorBeatDepth = 0.2;
constexpr double kPoorNoise = 0.45;

void check_params(const DopplerParams& p, double duration_s) {
    if (!(p.bpm >= 60.0 && p.bpm <= 240.0)) throw Error(ErrorKind::OutOfRange, "bpm must be within [60, 240]");
    if (!(p.noise_level >= 0.0 && p.noise_level <= 1.0)) throw Error(ErrorKind::OutOfRange, "noise must be within [0, 1]");
    if (!(p.beat_depth >= 0.0 && p.beat_depth <= 1.0)) throw Error(ErrorKind::OutOfRange, "beat depth must be within [0, 1]");
    if (!(duration_s >= 0.0)) throw Error(ErrorKind::OutOfRange, "duration must be non-negative");
}

} // namespace

double Lcg::next_gaussian() {
    // 1 - u keeps the log argument in (0, 1]
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

DopplerSource::DopplerSource(const DopplerParams& params) : params_(params), rng_(params.seed) {
    check_params(params_, 0.0);
}

void DopplerSource::set_noise(double level) {
    if (!(level >= 0.0 && level <= 1.0)) throw Error(ErrorKind::OutOfRange, "noise must be within [0, 1]");
    params_.noise_level = level;
}

std::vector<double> DopplerSource::next(std::size_t count) {
    const double period = 60.0 / params_.bpm;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i, ++position_) {
        const double t = static_cast<double>(position_) / kSampleRate;
        const double phase = std::fmod(t, period);
        const double burst = phase < kBurstSeconds ? 0.5 * (1.0 - std::cos(kTwoPi * phase / kBurstSeconds)) : 0.0;
        const double beat = (1.0 - params_.beat_depth) + params_.beat_depth * burst;
        const double carrier = std::sin(kTwoPi * kCarrierHz * t);
        const double noise = rng_.next_signed();
        out[i] = (1.0 - params_.noise_level) * beat * carrier + params_.noise_level * noise;
    }
    return out;
}

SampleStream synth_doppler(const DopplerParams& params, double duration_s) {
    check_params(params, duration_s);
    DopplerSource source(params);
    SampleStream stream;
    stream.rate_hz = kSampleRate;
    stream.samples = source.next(static_cast<std::size_t>(std::llround(duration_s * kSampleRate)));
    return stream;
}

SampleStream synth_doppler(double bpm, double duration_s, double noise_level, std::uint32_t seed) {
    return synth_doppler(DopplerParams{bpm, noise_level, seed, 1.0}, duration_s);
}

Segment synth_class(QualityClass cls, std::uint32_t seed) {
    std::vector<double> x;
    switch (cls) {
    case QualityClass::Silent: {
        Lcg rng(seed);
        x.resize(kWindowSamples);
        for (double& v : x) v = 0.0005 * rng.next_signed();
        break;
    }
    case QualityClass::Good:
        x = DopplerSource(DopplerParams{140.0, 0.05, seed, 1.0}).next(kWindowSamples);
        break;
    case QualityClass::Poor:
        x = DopplerSource(DopplerParams{140.0, kPoorNoise, seed, kPoorBeatDepth}).next(kWindowSamples);
        break;
    case QualityClass::Interference: {
        Lcg rng(seed);
        x.resize(kWindowSamples);
        for (double& v : x) v = 0.3 * rng.next_signed();
        break;
    }
    case QualityClass::Talking: {
        // 150 Hz voice with five equal harmonics at seeded phases, 3 Hz syllabic AM
        Lcg rng(seed);
        double phases[5];
        for (double& p : phases) p = kTwoPi * rng.next_unit();
        x.resize(kWindowSamples);
        for (std::size_t n = 0; n < x.size(); ++n) {
            const double t = static_cast<double>(n) / kSampleRate;
            double voice = 0.0;
            for (int h = 0; h < 5; ++h) voice += std::sin(kTwoPi * 150.0 * (h + 1) * t + phases[h]);
            const double syllable = 0.5 + 0.5 * std::sin(kTwoPi * 3.0 * t);
            x[n] = 0.1 * syllable * voice + 0.01 * rng.next_signed();
        }
        break;
    }
    }
    return make_segment(std::move(x), 0);
}

std::vector<double> bpm_suite(std::size_t count, double mean, double sd, std::uint32_t seed) {
    if (count < 2) throw Error(ErrorKind::InvalidArgument, "a suite needs at least two draws");
    Lcg rng(seed);
    std::vector<double> draws(count);
    for (double& d : draws) d = rng.next_gaussian();
    const double m = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(count);
    double ss = 0.0;
    for (double d : draws) ss += (d - m) * (d - m);
    const double s = std::sqrt(ss / static_cast<double>(count - 1));
    for (double& d : draws) d = std::clamp(mean + sd * (d - m) / s, 60.0, 240.0);
    return draws;
}

void add_salt_pepper(GrayImage& img, double fraction, std::uint32_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorKind::OutOfRange, "noise fraction must be in [0, 1]");
    // exactly round(fraction * N) distinct pixels, picked by a partial shuffle
    const std::size_t n = img.pixels.size();
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Lcg rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_unit() * static_cast<double>(n - i));
        std::swap(order[i], order[j]);
        img.pixels[order[i]] = (rng.next_u32() >> 31) ? 255 : 0;
    }
}

} // namespace pulsepipe
