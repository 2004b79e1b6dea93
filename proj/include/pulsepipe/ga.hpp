#pragma once

#include "pulsepipe/dsp.hpp"
#include "pulsepipe/quality.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pulsepipe {

inline constexpr std::size_t kMaxGaWindows = 10;
inline constexpr double kMinGaWeeks = 10.0;
inline constexpr double kMaxGaWeeks = 45.0;

struct GaEstimate {
    double weeks = 0.0;
    std::size_t n_windows_used = 0;
    std::vector<double> window_scores;
};

struct LabeledSegment {
    Segment segment;
    QualityLabel label;
};

/// Per-window scorer. Must be deterministic and safe for concurrent calls.
class WindowScorer {
public:
    virtual ~WindowScorer() = default;
    virtual std::string name() const = 0;
    virtual double score(const Segment& seg) const = 0;
};

/// Scorer that consumes the whole selected window sequence at once.
class SequenceScorer {
public:
    virtual ~SequenceScorer() = default;
    virtual std::string name() const = 0;
    virtual double score(std::span<const Segment> windows) const = 0;
};

/// Placeholder map from heart rate to weeks; carries no physiological claim.
double affine_weeks_from_bpm(double bpm);

/// "affine-fhr-v0": affine_weeks_from_bpm of the window's FHR estimate.
/// Propagates NoPeriodicity and ZeroEnergy.
class AffineFhrScorer final : public WindowScorer {
public:
    static constexpr std::string_view kName = "affine-fhr-v0";
    std::string name() const override { return std::string(kName); }
    double score(const Segment& seg) const override;
};

double reference_score(const Segment& seg);

std::unique_ptr<WindowScorer> make_scorer(std::string_view name);

/// First (by index) at most ten Good windows, in order. Throws NoGoodWindows.
std::vector<Segment> select_windows(std::span<const LabeledSegment> segments);

/// Mean of the scores, independent of their order. A constant sequence
/// returns its value exactly.
double order_free_mean(std::span<const double> values);

/// Throws NoGoodWindows, or ScorerFailure when a score is non-finite or
/// outside [10, 45] weeks.
GaEstimate estimate_ga(std::span<const LabeledSegment> segments, const WindowScorer& scorer);
GaEstimate estimate_ga(std::span<const LabeledSegment> segments, const SequenceScorer& scorer);

/// Running collector used by the live pipeline: scores Good windows as they
/// arrive until ten have been accepted.
class GaCollector {
public:
    explicit GaCollector(std::shared_ptr<const WindowScorer> scorer) : scorer_(std::move(scorer)) {}

    /// Returns true when the window was accepted. Windows whose score fails
    /// are skipped and do not count toward the cap.
    bool offer(const Segment& seg);

    bool full() const noexcept { return scores_.size() >= kMaxGaWindows; }
    std::size_t size() const noexcept { return scores_.size(); }
    std::optional<GaEstimate> current() const;

private:
    std::shared_ptr<const WindowScorer> scorer_;
    std::vector<double> scores_;
};

} // namespace pulsepipe
