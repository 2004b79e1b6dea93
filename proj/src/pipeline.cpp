#include "pulsepipe/pipeline.hpp"

#include "pulsepipe/error.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace pulsepipe {

double tick_end_time(std::uint64_t tick_index) {
    return kWindowSeconds + static_cast<double>(tick_index);
}

std::uint64_t expected_ticks(std::uint64_t n_samples) {
    if (n_samples < kWindowSamples) return 0;
    return (n_samples - kWindowSamples) / kHopSamples + 1;
}

std::string_view phase_name(Phase p) noexcept {
    switch (p) {
    case Phase::Idle: return "idle";
    case Phase::Warming: return "warming";
    case Phase::Running: return "running";
    case Phase::Stopped: return "stopped";
    }
    return "idle";
}

std::string_view event_kind_name(EventKind k) noexcept {
    switch (k) {
    case EventKind::Started: return "started";
    case EventKind::Stopped: return "stopped";
    case EventKind::Reposition: return "reposition";
    case EventKind::DataLost: return "data_lost";
    }
    return "started";
}

Session::Session(const PipelineConfig& config)
    : Session(config, make_classifier(config.classifier, config.thresholds), make_scorer(config.scorer)) {}

Session::Session(const PipelineConfig& config, std::shared_ptr<const QualityClassifier> classifier,
                 std::shared_ptr<const WindowScorer> scorer)
    : config_(config),
      classifier_(std::move(classifier)),
      scorer_(std::move(scorer)),
      ring_(config.ring_capacity),
      collector_(scorer_) {
    if (config.ring_capacity < kWindowSamples + kHopSamples) {
        throw Error(ErrorKind::InvalidArgument, "ring capacity must hold a window plus one hop");
    }
    if (!classifier_ || !scorer_) throw Error(ErrorKind::InvalidArgument, "session needs a classifier and a scorer");
}

double Session::stream_time_s() const noexcept {
    return static_cast<double>(ring_.write_count()) / kSampleRate;
}

void Session::record_event(EventKind kind, std::string note) {
    SessionEvent ev{kind, stream_time_s(), std::move(note)};
    {
        std::lock_guard lock(mutex_);
        events_.push_back(ev);
    }
    broadcaster_.publish(ev);
}

void Session::start() {
    {
        std::lock_guard lock(mutex_);
        if (phase_ == Phase::Stopped) throw Error(ErrorKind::SessionStopped, "session already stopped");
        if (phase_ != Phase::Idle) return;
        phase_ = Phase::Warming;
    }
    record_event(EventKind::Started, {});
}

void Session::ingest(std::span<const double> chunk) {
    start();
    ring_.write(chunk);
    if (ring_.write_count() >= kWindowSamples) {
        std::lock_guard lock(mutex_);
        if (phase_ == Phase::Warming) phase_ = Phase::Running;
    }
}

std::vector<TickReport> Session::feed(std::span<const double> chunk) {
    std::vector<TickReport> reports;
    std::size_t pos = 0;
    do {
        // write only up to the end of the next pending window, then drain
        const std::uint64_t written = ring_.write_count();
        const std::uint64_t window_end = next_index_ * kHopSamples + kWindowSamples;
        std::size_t piece = chunk.size() - pos;
        if (window_end > written) piece = std::min<std::size_t>(piece, window_end - written);
        ingest(chunk.subspan(pos, piece));
        pos += piece;
        auto ready = process_ready();
        reports.insert(reports.end(), std::make_move_iterator(ready.begin()), std::make_move_iterator(ready.end()));
    } while (pos < chunk.size());
    return reports;
}

std::vector<TickReport> Session::process_ready() {
    std::vector<TickReport> reports;
    for (;;) {
        {
            std::lock_guard lock(mutex_);
            if (phase_ == Phase::Stopped) break;
        }
        std::optional<Segment> seg;
        try {
            seg = pop_segment(ring_, next_index_);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DataLost) throw;
            const std::uint64_t lost_from = next_index_;
            next_index_ = expected_ticks(ring_.write_count()) - 1;
            {
                std::lock_guard lock(mutex_);
                ++data_lost_;
            }
            record_event(EventKind::DataLost, "windows " + std::to_string(lost_from) + ".." +
                                                  std::to_string(next_index_ - 1) + " overwritten");
            continue;
        }
        if (!seg) break;
        reports.push_back(process(*seg));
        ++next_index_;
    }
    return reports;
}

TickReport Session::process(const Segment& seg) {
    const auto t0 = std::chrono::steady_clock::now();

    TickReport r;
    r.tick_index = seg.index;
    r.t_end_s = tick_end_time(seg.index);
    r.quality = classify(seg, *classifier_);
    if (r.quality.cls == QualityClass::Good) {
        try {
            r.fhr = estimate_fhr(seg);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoPeriodicity && e.kind() != ErrorKind::ZeroEnergy) throw;
            r.fhr_absent_reason = std::string(error_kind_name(e.kind()));
        }
        collector_.offer(seg);
    } else {
        r.fhr_absent_reason = "not_good";
    }
    const std::optional<GaEstimate> ga = collector_.current();
    if (ga) {
        r.ga_weeks = ga->weeks;
        r.ga_windows = ga->n_windows_used;
    }

    r.processing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.deadline_missed = r.processing_ms > config_.tick_budget_ms;

    {
        std::lock_guard lock(mutex_);
        ++ticks_;
        ++class_counts_[static_cast<std::size_t>(r.quality.cls)];
        if (r.fhr) fhr_values_.push_back(r.fhr->bpm);
        if (r.deadline_missed) ++deadline_misses_;
        ga_ = ga;
    }
    broadcaster_.publish(r);
    return r;
}

void Session::mark_reposition(const std::string& note) {
    {
        std::lock_guard lock(mutex_);
        if (phase_ == Phase::Stopped) throw Error(ErrorKind::SessionStopped, "session already stopped");
    }
    record_event(EventKind::Reposition, note);
}

SessionSummary Session::stop() {
    bool first = false;
    {
        std::lock_guard lock(mutex_);
        if (phase_ != Phase::Stopped) {
            phase_ = Phase::Stopped;
            first = true;
        }
    }
    if (first) record_event(EventKind::Stopped, {});
    return summary();
}

Phase Session::phase() const {
    std::lock_guard lock(mutex_);
    return phase_;
}

std::uint64_t Session::ticks_emitted() const {
    std::lock_guard lock(mutex_);
    return ticks_;
}

std::vector<SessionEvent> Session::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

SessionSummary Session::summary() const {
    std::lock_guard lock(mutex_);
    return summarize_locked();
}

SessionSummary Session::summarize_locked() const {
    SessionSummary s;
    s.ticks = ticks_;
    s.class_counts = class_counts_;
    s.deadline_misses = deadline_misses_;
    s.data_lost_events = data_lost_;
    s.fhr_count = fhr_values_.size();
    if (!fhr_values_.empty()) {
        const double n = static_cast<double>(fhr_values_.size());
        const double mean = std::accumulate(fhr_values_.begin(), fhr_values_.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : fhr_values_) ss += (v - mean) * (v - mean);
        s.fhr_mean_bpm = mean;
        s.fhr_sd_bpm = fhr_values_.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    if (ga_) {
        s.ga = ga_;
    } else {
        s.ga_absent_reason = std::string(error_kind_name(ErrorKind::NoGoodWindows));
    }
    return s;
}

std::shared_ptr<SessionBroadcaster::Subscription> Session::subscribe(std::function<void()> on_ready) {
    return broadcaster_.subscribe(config_.subscriber_queue_depth, std::move(on_ready));
}

void Session::unsubscribe(const std::shared_ptr<SessionBroadcaster::Subscription>& sub) {
    broadcaster_.unsubscribe(sub);
}

} // namespace pulsepipe
