#pragma once

#include "pulsepipe/dsp.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pulsepipe {

/// Declaration order is the tie-break order for argmax.
enum class QualityClass { Good, Poor, Interference, Talking, Silent };

inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::array<QualityClass, kNumClasses> kAllClasses{
    QualityClass::Good, QualityClass::Poor, QualityClass::Interference,
    QualityClass::Talking, QualityClass::Silent};

std::string_view class_name(QualityClass cls) noexcept;
std::optional<QualityClass> parse_class(std::string_view name) noexcept;

using ClassScores = std::array<double, kNumClasses>;

struct QualityLabel {
    QualityClass cls = QualityClass::Silent;
    ClassScores scores{};

    double score(QualityClass c) const { return scores[static_cast<std::size_t>(c)]; }
};

struct QualityFeatures {
    double rms = 0.0;
    double zcr_hz = 0.0;
    double flatness = 0.0;
    double rho_fhr = 0.0;
    double rho_voice = 0.0;
    double peak_bin_fraction = 0.0;
};

/// Geometric over arithmetic mean of the power spectrum, excluding bin 0.
/// Bins are pooled in groups of 25 (6.7 Hz at 15000 samples) before the ratio
/// so that a flat spectrum scores near 1 rather than at the periodogram's e^-gamma.
double spectral_flatness(std::span<const double> power);

QualityFeatures extract_features(const Segment& seg);

struct QualityThresholds {
    double silent_rms = 0.001;
    double interference_flatness = 0.5;
    double interference_peak_fraction = 0.8;
    double talking_voice_rho = 0.4;
    double good_fhr_rho = 0.5;
};

/// Scoring plug-in. Implementations return one raw score per class in
/// kAllClasses order and must be safe for concurrent calls after construction.
class QualityClassifier {
public:
    virtual ~QualityClassifier() = default;
    virtual std::string name() const = 0;
    virtual std::vector<double> score(const Segment& seg) const = 0;
};

/// Rule-based reference classifier "heuristic-v1". First matching rule wins:
/// Silent, Interference, Talking, Good, then Poor.
class HeuristicClassifier final : public QualityClassifier {
public:
    static constexpr std::string_view kName = "heuristic-v1";

    explicit HeuristicClassifier(QualityThresholds thresholds = {}) : thresholds_(thresholds) {}

    std::string name() const override { return std::string(kName); }
    std::vector<double> score(const Segment& seg) const override;

    /// The rule that fires and its margin in [0, 1].
    struct Decision {
        QualityClass cls;
        double margin;
    };
    Decision decide(const QualityFeatures& f) const;

    const QualityThresholds& thresholds() const noexcept { return thresholds_; }

private:
    QualityThresholds thresholds_;
};

/// Looks up a classifier by its configured name. Throws InvalidArgument for unknown names.
std::unique_ptr<QualityClassifier> make_classifier(std::string_view name, const QualityThresholds& thresholds = {});

/// Normalizes the model's scores and picks the argmax. Throws ModelFailure on
/// wrong arity, non-finite or negative values, or an all-zero score vector.
QualityLabel classify(const Segment& seg, const QualityClassifier& model);

struct ConfusionReport {
    /// counts[truth][predicted]
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};
    std::array<std::size_t, kNumClasses> truth_counts{};
    std::array<std::size_t, kNumClasses> predicted_counts{};
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;

    std::size_t off_diagonal() const noexcept { return total - correct; }
    std::size_t cell(QualityClass truth, QualityClass predicted) const {
        return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    }
};

/// Throws LengthMismatch unless both sequences have the same non-zero length.
ConfusionReport quality_report(std::span<const QualityLabel> labels, std::span<const QualityClass> truth);

/// Plain-text 5x5 table with per-class recall and overall accuracy.
std::string format_confusion(const ConfusionReport& report);

} // namespace pulsepipe
