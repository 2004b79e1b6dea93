#pragma once

#include "pulsepipe/broadcast.hpp"
#include "pulsepipe/dsp.hpp"
#include "pulsepipe/fhr.hpp"
#include "pulsepipe/ga.hpp"
#include "pulsepipe/quality.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pulsepipe {

inline constexpr double kTickBudgetMs = 250.0;
inline constexpr std::size_t kSubscriberQueueDepth = 64;

struct PipelineConfig {
    std::string classifier = std::string(HeuristicClassifier::kName);
    std::string scorer = std::string(AffineFhrScorer::kName);
    QualityThresholds thresholds;
    std::size_t ring_capacity = kDefaultRingCapacity;
    double tick_budget_ms = kTickBudgetMs;
    std::size_t subscriber_queue_depth = kSubscriberQueueDepth;
};

struct TickReport {
    std::uint64_t tick_index = 0;
    double t_end_s = 0.0;
    QualityLabel quality;
    std::optional<FhrEstimate> fhr;
    /// "not_good", "no_periodicity" or "zero_energy" when fhr is absent.
    std::optional<std::string> fhr_absent_reason;
    std::optional<double> ga_weeks;
    std::size_t ga_windows = 0;
    double processing_ms = 0.0;
    bool deadline_missed = false;
};

/// Stream end time of window k: 3.75 + k seconds.
double tick_end_time(std::uint64_t tick_index);

/// Number of ticks a stream of n samples yields.
std::uint64_t expected_ticks(std::uint64_t n_samples);

enum class Phase { Idle, Warming, Running, Stopped };
std::string_view phase_name(Phase p) noexcept;

enum class EventKind { Started, Stopped, Reposition, DataLost };
std::string_view event_kind_name(EventKind k) noexcept;

struct SessionEvent {
    EventKind kind = EventKind::Started;
    double t_s = 0.0;
    std::string note;
};

struct SessionSummary {
    std::uint64_t ticks = 0;
    std::array<std::uint64_t, kNumClasses> class_counts{};
    std::size_t fhr_count = 0;
    std::optional<double> fhr_mean_bpm;
    std::optional<double> fhr_sd_bpm;
    std::optional<GaEstimate> ga;
    std::optional<std::string> ga_absent_reason;
    std::uint64_t deadline_misses = 0;
    std::uint64_t data_lost_events = 0;
};

using SessionMessage = std::variant<TickReport, SessionEvent>;
using SessionBroadcaster = Broadcaster<SessionMessage>;

/// One live screening session over a 4000 Hz sample stream.
///
/// feed() is the single-threaded entry point. For concurrent operation one
/// thread calls ingest() while another calls process_ready(); control calls
/// (mark_reposition, stop) may come from any thread.
class Session {
public:
    explicit Session(const PipelineConfig& config = {});
    Session(const PipelineConfig& config, std::shared_ptr<const QualityClassifier> classifier,
            std::shared_ptr<const WindowScorer> scorer);

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Idle -> Warming. No-op once started; throws SessionStopped after stop().
    void start();

    /// Appends samples and returns one report per newly completed hop. Starts
    /// an idle session. Never loses data regardless of chunk size.
    std::vector<TickReport> feed(std::span<const double> chunk);

    /// Writer side: append samples to the ring only.
    void ingest(std::span<const double> chunk);
    /// Reader side: process every window that is complete. Windows overwritten
    /// before they were read are logged as a data_lost event and skipped.
    std::vector<TickReport> process_ready();

    void mark_reposition(const std::string& note = {});

    /// Idempotent; returns the summary of everything processed so far.
    SessionSummary stop();

    Phase phase() const;
    std::uint64_t samples_ingested() const noexcept { return ring_.write_count(); }
    double stream_time_s() const noexcept;
    std::uint64_t ticks_emitted() const;
    std::vector<SessionEvent> events() const;
    SessionSummary summary() const;
    const PipelineConfig& config() const noexcept { return config_; }

    /// Subscribers receive every tick and event published after they subscribe.
    std::shared_ptr<SessionBroadcaster::Subscription> subscribe(std::function<void()> on_ready = {});
    void unsubscribe(const std::shared_ptr<SessionBroadcaster::Subscription>& sub);
    std::size_t subscriber_count() const { return broadcaster_.subscriber_count(); }

private:
    TickReport process(const Segment& seg);
    void record_event(EventKind kind, std::string note);
    SessionSummary summarize_locked() const;

    PipelineConfig config_;
    std::shared_ptr<const QualityClassifier> classifier_;
    std::shared_ptr<const WindowScorer> scorer_;
    RingBuffer ring_;
    SessionBroadcaster broadcaster_;

    // reader-side state
    std::uint64_t next_index_ = 0;
    GaCollector collector_;

    mutable std::mutex mutex_;
    Phase phase_ = Phase::Idle;
    std::vector<SessionEvent> events_;
    std::uint64_t ticks_ = 0;
    std::array<std::uint64_t, kNumClasses> class_counts_{};
    std::vector<double> fhr_values_;
    std::uint64_t deadline_misses_ = 0;
    std::uint64_t data_lost_ = 0;
    std::optional<GaEstimate> ga_;
};

} // namespace pulsepipe
