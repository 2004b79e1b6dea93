#pragma once

#include "pulsepipe/dsp.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace pulsepipe {

inline constexpr std::size_t kFhrLagMin = 1000;  // 240 BPM
inline constexpr std::size_t kFhrLagMax = 4000;  // 60 BPM
inline constexpr double kMinPeriodicity = 0.3;

struct FhrEstimate {
    double bpm = 0.0;
    double rho = 0.0;
    double lag_samples = 0.0;
};

/// r[tau] = sum x[n] x[n+tau] / sum x[n]^2 for tau in [lag_min, lag_max].
/// Element i of the result is lag lag_min + i. Expects mean-removed input.
/// Throws ZeroEnergy when sum x^2 < 1e-12.
std::vector<double> autocorr_normalized(std::span<const double> x, std::size_t lag_min, std::size_t lag_max);

/// Strongest autocorrelation peak of a sequence in a lag band, refined by
/// parabolic interpolation away from the band edges. Ties go to the smallest lag.
struct PeriodicityPeak {
    double lag = 0.0;
    double value = 0.0;
};
PeriodicityPeak strongest_period(std::span<const double> x, std::size_t lag_min, std::size_t lag_max);

/// Envelope periodicity in the 60-240 BPM band without the NoPeriodicity gate.
/// Throws ZeroEnergy for silent input.
FhrEstimate measure_periodicity(std::span<const double> samples);

/// Fetal heart rate of one window. Throws NoPeriodicity when rho < 0.3 and
/// ZeroEnergy for silent input.
FhrEstimate estimate_fhr(const Segment& seg);

} // namespace pulsepipe
