#pragma once

#include "pulsepipe/bp.hpp"
#include "pulsepipe/dsp.hpp"
#include "pulsepipe/quality.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pulsepipe {

/// x <- 1664525 x + 1013904223 (mod 2^32). Fixtures depend on this exact sequence.
class Lcg {
public:
    explicit Lcg(std::uint32_t seed) : state_(seed) {}

    std::uint32_t next_u32() {
        state_ = 1664525u * state_ + 1013904223u;
        return state_;
    }
    /// Uniform in [0, 1).
    double next_unit() { return next_u32() / 4294967296.0; }
    /// Uniform in [-1, 1).
    double next_signed() { return 2.0 * next_unit() - 1.0; }
    /// Standard normal via Box-Muller (consumes two draws).
    double next_gaussian();

private:
    std::uint32_t state_;
};

inline constexpr double kCarrierHz = 400.0;
inline constexpr double kBurstSeconds = 0.120;

struct DopplerParams {
    double bpm = 140.0;
    double noise_level = 0.0;
    std::uint32_t seed = 1;
    /// Fraction of the carrier amplitude that follows the beat bursts; the rest is steady.
    double beat_depth = 1.0;
};

/// Sample-by-sample Doppler generator: a 400 Hz carrier amplitude-modulated by
/// 120 ms raised-cosine bursts every 60/bpm s, plus uniform noise. The noise
/// level may change mid-stream; with a fixed level the output equals synth_doppler.
class DopplerSource {
public:
    explicit DopplerSource(const DopplerParams& params);

    void set_noise(double level);
    double noise() const noexcept { return params_.noise_level; }
    std::uint64_t position() const noexcept { return position_; }

    std::vector<double> next(std::size_t count);

private:
    DopplerParams params_;
    Lcg rng_;
    std::uint64_t position_ = 0;
};

/// Throws OutOfRange unless bpm in [60, 240], noise in [0, 1], depth in [0, 1], duration >= 0.
SampleStream synth_doppler(double bpm, double duration_s, double noise_level, std::uint32_t seed);
SampleStream synth_doppler(const DopplerParams& params, double duration_s);

/// One 3.75 s window whose acoustics match the given quality class.
Segment synth_class(QualityClass cls, std::uint32_t seed);

/// Deterministic BPM suite with sample mean and sample SD exactly equal to the
/// requested values (before clamping to 60-240).
std::vector<double> bpm_suite(std::size_t count, double mean, double sd, std::uint32_t seed);

/// Replaces `fraction` of the pixels with 0 or 255.
void add_salt_pepper(GrayImage& img, double fraction, std::uint32_t seed);

} // namespace pulsepipe
