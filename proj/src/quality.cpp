#include "pulsepipe/quality.hpp"

#include "pulsepipe/error.hpp"
#include "pulsepipe/fhr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace pulsepipe {

namespace {

constexpr std::size_t kFlatnessPool = 25;
constexpr std::size_t kVoiceLagMin = 14;  // ceil(4000 / 300)
constexpr std::size_t kVoiceLagMax = 47;  // floor(4000 / 85)
constexpr double kOctaveTolerance = 0.85;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Autocorrelation peak of the raw signal whose fundamental lies in 85-300 Hz.
// The pitch lag is the first local maximum after the first zero crossing of r
// that reaches 85% of the strongest peak, so a tone above 300 Hz (whose
// multiples alias into the band at nearly equal strength) yields no voice.
double voice_periodicity(std::span<const double> centered) {
    std::vector<double> r;
    try {
        r = autocorr_normalized(centered, 1, kVoiceLagMax);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ZeroEnergy) return 0.0;
        throw;
    }
    std::size_t first_dip = r.size();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= 0.0) {
            first_dip = i;
            break;
        }
    }
    if (first_dip == r.size()) return 0.0;
    const double strongest = *std::max_element(r.begin() + static_cast<std::ptrdiff_t>(first_dip), r.end());
    if (strongest <= 0.0) return 0.0;
    for (std::size_t i = first_dip; i < r.size(); ++i) {
        const bool local_max = (i == 0 || r[i] >= r[i - 1]) && (i + 1 == r.size() || r[i] >= r[i + 1]);
        if (local_max && r[i] >= kOctaveTolerance * strongest) {
            const std::size_t lag = i + 1;
            return lag < kVoiceLagMin ? 0.0 : clamp01(r[i]);
        }
    }
    return 0.0;
}

} // namespace

std::string_view class_name(QualityClass cls) noexcept {
    switch (cls) {
    case QualityClass::Good: return "Good";
    case QualityClass::Poor: return "Poor";
    case QualityClass::Interference: return "Interference";
    case QualityClass::Talking: return "Talking";
    case QualityClass::Silent: return "Silent";
    }
    return "Silent";
}

std::optional<QualityClass> parse_class(std::string_view name) noexcept {
    for (QualityClass c : kAllClasses) {
        if (class_name(c) == name) return c;
    }
    return std::nullopt;
}

double spectral_flatness(std::span<const double> power) {
    if (power.size() < 2) return 0.0;
    const std::span<const double> bins = power.subspan(1);
    const std::size_t bands = (bins.size() + kFlatnessPool - 1) / kFlatnessPool;
    double log_sum = 0.0;
    double sum = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
        const std::size_t lo = b * kFlatnessPool;
        const std::size_t hi = std::min(bins.size(), lo + kFlatnessPool);
        double band = 0.0;
        for (std::size_t i = lo; i < hi; ++i) band += bins[i];
        band /= static_cast<double>(hi - lo);
        sum += band;
        log_sum += std::log(std::max(band, 1e-300));
    }
    const double arithmetic = sum / static_cast<double>(bands);
    if (arithmetic <= 0.0) return 0.0;
    return clamp01(std::exp(log_sum / static_cast<double>(bands)) / arithmetic);
}

QualityFeatures extract_features(const Segment& seg) {
    const std::span<const double> x = seg.samples;
    QualityFeatures f;
    if (x.empty()) return f;

    double sq = 0.0;
    for (double v : x) sq += v * v;
    f.rms = std::sqrt(sq / static_cast<double>(x.size()));

    const std::vector<double> centered = remove_mean(x);
    std::size_t crossings = 0;
    for (std::size_t i = 1; i < centered.size(); ++i) {
        if ((centered[i - 1] < 0.0) != (centered[i] < 0.0)) ++crossings;
    }
    f.zcr_hz = static_cast<double>(crossings) * kSampleRate / static_cast<double>(x.size());

    const std::vector<double> power = power_spectrum(x);
    f.flatness = spectral_flatness(power);
    const double total = std::accumulate(power.begin(), power.end(), 0.0);
    if (total > 0.0) f.peak_bin_fraction = clamp01(*std::max_element(power.begin(), power.end()) / total);

    if (x.size() > kFhrLagMax) {
        try {
            f.rho_fhr = clamp01(measure_periodicity(x).rho);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ZeroEnergy) throw;
        }
    }
    if (centered.size() > kVoiceLagMax) f.rho_voice = voice_periodicity(centered);
    return f;
}

HeuristicClassifier::Decision HeuristicClassifier::decide(const QualityFeatures& f) const {
    const QualityThresholds& t = thresholds_;
    if (f.rms < t.silent_rms) {
        return {QualityClass::Silent, clamp01((t.silent_rms - f.rms) / t.silent_rms)};
    }
    if (f.flatness > t.interference_flatness || f.peak_bin_fraction > t.interference_peak_fraction) {
        const double by_flatness = (f.flatness - t.interference_flatness) / (1.0 - t.interference_flatness);
        const double by_peak = (f.peak_bin_fraction - t.interference_peak_fraction) / (1.0 - t.interference_peak_fraction);
        return {QualityClass::Interference, clamp01(std::max(by_flatness, by_peak))};
    }
    if (f.rho_voice > t.talking_voice_rho) {
        return {QualityClass::Talking, clamp01((f.rho_voice - t.talking_voice_rho) / (1.0 - t.talking_voice_rho))};
    }
    if (f.rho_fhr >= t.good_fhr_rho) {
        return {QualityClass::Good, clamp01((f.rho_fhr - t.good_fhr_rho) / (1.0 - t.good_fhr_rho))};
    }
    return {QualityClass::Poor, clamp01((t.good_fhr_rho - f.rho_fhr) / t.good_fhr_rho)};
}

std::vector<double> HeuristicClassifier::score(const Segment& seg) const {
    const Decision d = decide(extract_features(seg));
    const double winner = 0.6 + 0.4 * d.margin;
    std::vector<double> scores(kNumClasses, (1.0 - winner) / static_cast<double>(kNumClasses - 1));
    scores[static_cast<std::size_t>(d.cls)] = winner;
    return scores;
}

std::unique_ptr<QualityClassifier> make_classifier(std::string_view name, const QualityThresholds& thresholds) {
    if (name == HeuristicClassifier::kName) return std::make_unique<HeuristicClassifier>(thresholds);
    throw Error(ErrorKind::InvalidArgument, "unknown quality classifier '" + std::string(name) + "'");
}

QualityLabel classify(const Segment& seg, const QualityClassifier& model) {
    const std::vector<double> raw = model.score(seg);
    if (raw.size() != kNumClasses) {
        throw Error(ErrorKind::ModelFailure, model.name() + " returned " + std::to_string(raw.size()) + " scores, expected 5");
    }
    double sum = 0.0;
    for (double v : raw) {
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::ModelFailure, model.name() + " returned an invalid score");
        sum += v;
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        throw Error(ErrorKind::ModelFailure, model.name() + " returned scores that cannot be normalized");
    }
    QualityLabel label;
    std::size_t best = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        label.scores[i] = raw[i] / sum;
        if (label.scores[i] > label.scores[best]) best = i;
    }
    label.cls = kAllClasses[best];
    return label;
}

ConfusionReport quality_report(std::span<const QualityLabel> labels, std::span<const QualityClass> truth) {
    if (labels.size() != truth.size() || labels.empty()) {
        throw Error(ErrorKind::LengthMismatch, "labels and truth must have the same non-zero length");
    }
    ConfusionReport report;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(labels[i].cls);
        ++report.counts[t][p];
        ++report.truth_counts[t];
        ++report.predicted_counts[p];
        if (t == p) ++report.correct;
    }
    report.total = labels.size();
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    return report;
}

std::string format_confusion(const ConfusionReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s", "truth\\pred");
    out << line;
    for (QualityClass c : kAllClasses) {
        std::snprintf(line, sizeof line, "%13s", std::string(class_name(c)).c_str());
        out << line;
    }
    out << "        n   recall\n";
    for (QualityClass t : kAllClasses) {
        const auto ti = static_cast<std::size_t>(t);
        std::snprintf(line, sizeof line, "%-14s", std::string(class_name(t)).c_str());
        out << line;
        for (QualityClass p : kAllClasses) {
            std::snprintf(line, sizeof line, "%13zu", report.cell(t, p));
            out << line;
        }
        const double recall = report.truth_counts[ti] == 0
            ? 0.0
            : static_cast<double>(report.counts[ti][ti]) / static_cast<double>(report.truth_counts[ti]);
        std::snprintf(line, sizeof line, "%9zu %8.4f\n", report.truth_counts[ti], recall);
        out << line;
    }
    std::snprintf(line, sizeof line, "accuracy %zu/%zu = %.4f\n", report.correct, report.total, report.accuracy);
    out << line;
    return out.str();
}

} // namespace pulsepipe
