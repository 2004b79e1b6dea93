#include "pulsepipe/ga.hpp"

#include "pulsepipe/error.hpp"
#include "pulsepipe/fhr.hpp"

#include <algorithm>
#include <cmath>

namespace pulsepipe {

namespace {

double checked(double weeks, const std::string& scorer) {
    if (!std::isfinite(weeks) || weeks < kMinGaWeeks || weeks > kMaxGaWeeks) {
        throw Error(ErrorKind::ScorerFailure, scorer + " returned " + std::to_string(weeks) + " weeks");
    }
    return weeks;
}

} // namespace

double affine_weeks_from_bpm(double bpm) {
    return std::clamp(44.0 - 0.07 * (bpm - 110.0), kMinGaWeeks, kMaxGaWeeks);
}

double AffineFhrScorer::score(const Segment& seg) const {
    return affine_weeks_from_bpm(estimate_fhr(seg).bpm);
}

double reference_score(const Segment& seg) {
    return AffineFhrScorer{}.score(seg);
}

std::unique_ptr<WindowScorer> make_scorer(std::string_view name) {
    if (name == AffineFhrScorer::kName) return std::make_unique<AffineFhrScorer>();
    throw Error(ErrorKind::InvalidArgument, "unknown GA scorer '" + std::string(name) + "'");
}

std::vector<Segment> select_windows(std::span<const LabeledSegment> segments) {
    std::vector<const LabeledSegment*> good;
    for (const auto& s : segments) {
        if (s.label.cls == QualityClass::Good) good.push_back(&s);
    }
    if (good.empty()) throw Error(ErrorKind::NoGoodWindows, "no Good windows to estimate from");
    std::stable_sort(good.begin(), good.end(),
                     [](const LabeledSegment* a, const LabeledSegment* b) { return a->segment.index < b->segment.index; });
    std::vector<Segment> out;
    for (std::size_t i = 0; i < good.size() && i < kMaxGaWindows; ++i) out.push_back(good[i]->segment);
    return out;
}

double order_free_mean(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::InvalidArgument, "mean of nothing");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    // offsets from the minimum vanish for constant input
    double offset_sum = 0.0;
    for (double v : sorted) offset_sum += v - sorted.front();
    return sorted.front() + offset_sum / static_cast<double>(sorted.size());
}

GaEstimate estimate_ga(std::span<const LabeledSegment> segments, const WindowScorer& scorer) {
    const std::vector<Segment> windows = select_windows(segments);
    GaEstimate est;
    for (const Segment& w : windows) {
        double weeks = 0.0;
        try {
            weeks = scorer.score(w);
        } catch (const Error& e) {
            throw Error(ErrorKind::ScorerFailure, scorer.name() + ": " + e.what());
        }
        est.window_scores.push_back(checked(weeks, scorer.name()));
    }
    est.n_windows_used = est.window_scores.size();
    est.weeks = order_free_mean(est.window_scores);
    return est;
}

GaEstimate estimate_ga(std::span<const LabeledSegment> segments, const SequenceScorer& scorer) {
    const std::vector<Segment> windows = select_windows(segments);
    GaEstimate est;
    est.weeks = checked(scorer.score(windows), scorer.name());
    est.n_windows_used = windows.size();
    est.window_scores.assign(windows.size(), est.weeks);
    return est;
}

bool GaCollector::offer(const Segment& seg) {
    if (full()) return false;
    try {
        scores_.push_back(checked(scorer_->score(seg), scorer_->name()));
    } catch (const Error&) {
        return false;
    }
    return true;
}

std::optional<GaEstimate> GaCollector::current() const {
    if (scores_.empty()) return std::nullopt;
    GaEstimate est;
    est.window_scores = scores_;
    est.n_windows_used = scores_.size();
    est.weeks = order_free_mean(scores_);
    return est;
}

} // namespace pulsepipe
