#include "pulsepipe/fhr.hpp"

#include "fft.hpp"
#include "pulsepipe/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace pulsepipe {

namespace {

constexpr double kMinEnergy = 1e-12;

std::size_t fft_length_for(std::size_t needed) {
    std::size_t n = 1;
    while (n < needed) n <<= 1;
    return n;
}

// Reported values live on a fixed grid. Rescaling the input only perturbs the
// arithmetic at the 1e-15 level, so a gain change leaves the outputs identical.
double snap(double value, double per_unit) {
    return std::round(value * per_unit) / per_unit;
}

} // namespace

std::vector<double> autocorr_normalized(std::span<const double> x, std::size_t lag_min, std::size_t lag_max) {
    if (lag_min < 1 || lag_max < lag_min || x.size() <= lag_max) {
        throw Error(ErrorKind::InvalidArgument, "autocorrelation needs |x| > lag_max >= lag_min >= 1");
    }
    double energy = 0.0;
    for (double v : x) energy += v * v;
    if (energy < kMinEnergy) throw Error(ErrorKind::ZeroEnergy, "signal energy below 1e-12");

    // Linear (not circular) correlation: pad past N + lag_max.
    const std::size_t n = fft_length_for(x.size() + lag_max + 1);
    const detail::RealFft fft(n);
    std::vector<double> padded(n, 0.0);
    std::copy(x.begin(), x.end(), padded.begin());
    std::vector<std::complex<double>> spectrum(fft.bins());
    fft.forward(padded, spectrum);
    for (auto& c : spectrum) c = std::norm(c);
    fft.inverse(spectrum, padded);

    const double scale = 1.0 / (static_cast<double>(n) * energy);
    std::vector<double> r(lag_max - lag_min + 1);
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
        r[lag - lag_min] = std::clamp(padded[lag] * scale, -1.0, 1.0);
    }
    return r;
}

PeriodicityPeak strongest_period(std::span<const double> x, std::size_t lag_min, std::size_t lag_max) {
    const std::vector<double> r = autocorr_normalized(x, lag_min, lag_max);
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        if (r[i] > r[best]) best = i;
    }
    PeriodicityPeak peak{static_cast<double>(lag_min + best), r[best]};
    if (best > 0 && best + 1 < r.size()) {
        const double left = r[best - 1];
        const double mid = r[best];
        const double right = r[best + 1];
        const double curvature = left - 2.0 * mid + right;
        if (curvature < 0.0) {
            const double offset = 0.5 * (left - right) / curvature;
            peak.lag += offset;
            peak.value = mid - 0.25 * (left - right) * offset;
        }
    }
    return peak;
}

FhrEstimate measure_periodicity(std::span<const double> samples) {
    const std::vector<double> env = remove_mean(envelope(samples));
    const PeriodicityPeak peak = strongest_period(env, kFhrLagMin, kFhrLagMax);
    FhrEstimate est;
    est.lag_samples = peak.lag;
    est.bpm = snap(60.0 * kSampleRate / peak.lag, 1e9);
    est.rho = std::clamp(snap(peak.value, 1e12), 0.0, 1.0);
    return est;
}

FhrEstimate estimate_fhr(const Segment& seg) {
    FhrEstimate est = measure_periodicity(seg.samples);
    if (est.rho < kMinPeriodicity) {
        throw Error(ErrorKind::NoPeriodicity, "periodicity " + std::to_string(est.rho) + " below 0.3");
    }
    return est;
}

} // namespace pulsepipe
