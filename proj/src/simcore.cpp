/*
 * Copyright 2026 The offload-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "offload/simcore.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>

#include <fmt/format.h>

namespace offload::simcore {

using sysmodel::JobRequest;
using sysmodel::Protocol;
using sysmodel::SyncMechanism;
using sysmodel::SystemConfig;
using sysmodel::TimingParams;

IncrementOutcome credit_increment(const CreditCounter& counter) {
    if (counter.count >= counter.threshold) {
        throw ProtocolViolation(fmt::format("credit counter incremented past its threshold ({}/{})", counter.count,
                                            counter.threshold));
    }
    IncrementOutcome out{counter, false};
    out.counter.count += 1;
    if (out.counter.count == out.counter.threshold) {
        out.counter.fired = true;
        out.fired_now = true;
    }
    return out;
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::SerialStart: return "SerialStart";
        case EventKind::SerialEnd: return "SerialEnd";
        case EventKind::DispatchSent: return "DispatchSent";
        case EventKind::DescriptorArrived: return "DescriptorArrived";
        case EventKind::ComputeStart: return "ComputeStart";
        case EventKind::ComputeEnd: return "ComputeEnd";
        case EventKind::SyncIncrement: return "SyncIncrement";
        case EventKind::InterruptFired: return "InterruptFired";
        case EventKind::PollObserved: return "PollObserved";
        case EventKind::OffloadComplete: return "OffloadComplete";
    }
    return "?";
}

namespace {

/// Min-heap of pending events keyed by (time, kind, cluster, insertion).
class EventQueue {
  public:
    void schedule(double time, EventKind kind, std::optional<std::uint32_t> cluster = std::nullopt) {
        heap_.push(Pending{Event{time, kind, cluster}, next_seq_++});
    }

    [[nodiscard]] bool empty() const { return heap_.empty(); }

    Event pop() {
        Event e = heap_.top().event;
        heap_.pop();
        return e;
    }

  private:
    struct Pending {
        Event event;
        std::uint64_t seq;

        bool operator>(const Pending& other) const {
            if (event != other.event) return event > other.event;
            return seq > other.seq;
        }
    };

    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> heap_;
    std::uint64_t next_seq_ = 0;
};

/// Completion handling shared by the full simulation and the isolated sync stage.
class SyncStage {
  public:
    SyncStage(SyncMechanism mechanism, std::uint32_t clusters, double poll_origin, const TimingParams& tp)
        : mechanism_(mechanism), clusters_(clusters), poll_origin_(poll_origin), tp_(tp),
          counter_(CreditCounter::armed(clusters)) {}

    void start(EventQueue& queue) {
        if (mechanism_ == SyncMechanism::SoftwarePolling) {
            schedule_poll(queue);
        }
    }

    /// Returns true when the event belongs in the trace.
    bool handle(const Event& e, EventQueue& queue) {
        switch (e.kind) {
            case EventKind::ComputeEnd: on_compute_end(e, queue); return true;
            case EventKind::SyncIncrement: on_increment(e, queue); return true;
            case EventKind::InterruptFired:
                queue.schedule(e.time + tp_.interrupt_latency_cycles, EventKind::OffloadComplete);
                return true;
            case EventKind::PollObserved: return on_poll(e, queue);
            case EventKind::OffloadComplete: complete_time_ = e.time; return true;
            default: return true;
        }
    }

    [[nodiscard]] std::optional<double> complete_time() const { return complete_time_; }

  private:
    void on_compute_end(const Event& e, EventQueue& queue) {
        if (mechanism_ == SyncMechanism::CreditCounter) {
            queue.schedule(e.time + tp_.credit_increment_cycles, EventKind::SyncIncrement, e.cluster);
            return;
        }
        // Software atomics serialize; completions arrive here in (time, cluster) order.
        if (increment_in_flight_) {
            waiting_.push_back(*e.cluster);
        } else {
            increment_in_flight_ = true;
            queue.schedule(e.time + tp_.sw_increment_cycles, EventKind::SyncIncrement, e.cluster);
        }
    }

    void on_increment(const Event& e, EventQueue& queue) {
        if (mechanism_ == SyncMechanism::CreditCounter) {
            auto outcome = credit_increment(counter_);
            counter_ = outcome.counter;
            if (outcome.fired_now) {
                queue.schedule(e.time, EventKind::InterruptFired);
            }
            return;
        }
        ++software_count_;
        increment_in_flight_ = false;
        if (!waiting_.empty()) {
            std::uint32_t next = waiting_.front();
            waiting_.pop_front();
            increment_in_flight_ = true;
            queue.schedule(e.time + tp_.sw_increment_cycles, EventKind::SyncIncrement, next);
        }
    }

    bool on_poll(const Event& e, EventQueue& queue) {
        if (software_count_ == clusters_) {
            queue.schedule(e.time, EventKind::OffloadComplete);
            return true;
        }
        // Unsuccessful polls are not part of the trace.
        schedule_poll(queue);
        return false;
    }

    void schedule_poll(EventQueue& queue) {
        ++polls_;
        // Multiply rather than accumulate so poll instants do not drift.
        queue.schedule(poll_origin_ + static_cast<double>(polls_) * tp_.sw_poll_interval_cycles,
                       EventKind::PollObserved);
    }

    SyncMechanism mechanism_;
    std::uint32_t clusters_;
    double poll_origin_;
    const TimingParams& tp_;

    CreditCounter counter_;
    std::uint32_t software_count_ = 0;
    bool increment_in_flight_ = false;
    std::deque<std::uint32_t> waiting_;
    std::uint64_t polls_ = 0;
    std::optional<double> complete_time_;
};

SyncOutcome run_sync_only(SyncMechanism mechanism, std::span<const double> completion_times, double poll_origin,
                          const TimingParams& tp) {
    if (completion_times.empty()) {
        throw std::invalid_argument("synchronization needs at least one cluster");
    }
    const auto clusters = static_cast<std::uint32_t>(completion_times.size());
    EventQueue queue;
    SyncStage sync(mechanism, clusters, poll_origin, tp);
    for (std::uint32_t c = 0; c < clusters; ++c) {
        queue.schedule(completion_times[c], EventKind::ComputeEnd, c);
    }
    sync.start(queue);

    SyncOutcome out;
    while (!queue.empty()) {
        Event e = queue.pop();
        if (sync.handle(e, queue) && e.kind != EventKind::ComputeEnd) {
            out.events.push_back(e);
        }
    }
    out.complete_time = sync.complete_time().value();
    return out;
}

}  // namespace

SyncOutcome resolve_credit_sync(std::span<const double> completion_times, const TimingParams& tp) {
    return run_sync_only(SyncMechanism::CreditCounter, completion_times, 0.0, tp);
}

SyncOutcome resolve_polling_sync(std::span<const double> completion_times, double poll_origin,
                                 const TimingParams& tp) {
    return run_sync_only(SyncMechanism::SoftwarePolling, completion_times, poll_origin, tp);
}

SimResult simulate_offload(const SystemConfig& cfg, const TimingParams& tp, const JobRequest& job) {
    sysmodel::validate(cfg);
    sysmodel::validate(tp);
    sysmodel::validate(job, cfg);

    const std::uint32_t m = job.m;
    const auto partition = sysmodel::partition_work(job.n, m, cfg.worker_cores_per_cluster);

    const double setup_end = tp.offload_setup_cycles;
    const double dispatch_start = setup_end + static_cast<double>(job.n) / tp.host_serial_elems_per_cycle;

    EventQueue queue;
    queue.schedule(setup_end, EventKind::SerialStart);
    queue.schedule(dispatch_start, EventKind::SerialEnd);

    double dispatch_end = dispatch_start;
    if (job.protocol == Protocol::BaselineUnicast) {
        const double per_cluster = tp.unicast_cycles_per_cluster();
        for (std::uint32_t c = 0; c < m; ++c) {
            queue.schedule(dispatch_start + c * per_cluster, EventKind::DispatchSent, c);
            queue.schedule(dispatch_start + (c + 1) * per_cluster, EventKind::DescriptorArrived, c);
        }
        dispatch_end = dispatch_start + m * per_cluster;
    } else {
        dispatch_end = dispatch_start + tp.multicast_dispatch_cycles;
        for (std::uint32_t c = 0; c < m; ++c) {
            queue.schedule(dispatch_start, EventKind::DispatchSent, c);
            queue.schedule(dispatch_end, EventKind::DescriptorArrived, c);
        }
    }

    SyncStage sync(job.sync, m, dispatch_end, tp);
    sync.start(queue);

    SimResult result;
    double last_compute_start = dispatch_start;
    double last_compute_end = dispatch_start;
    while (!queue.empty()) {
        Event e = queue.pop();
        bool traced = true;
        switch (e.kind) {
            case EventKind::DescriptorArrived:
                queue.schedule(e.time + tp.cluster_wakeup_cycles, EventKind::ComputeStart, e.cluster);
                break;
            case EventKind::ComputeStart: {
                last_compute_start = std::max(last_compute_start, e.time);
                const double busy =
                    tp.compute_cycles_per_elem * static_cast<double>(partition.largest_chunk(*e.cluster));
                queue.schedule(e.time + busy, EventKind::ComputeEnd, e.cluster);
                break;
            }
            case EventKind::ComputeEnd:
                last_compute_end = std::max(last_compute_end, e.time);
                traced = sync.handle(e, queue);
                break;
            case EventKind::SyncIncrement:
            case EventKind::InterruptFired:
            case EventKind::PollObserved:
            case EventKind::OffloadComplete:
                traced = sync.handle(e, queue);
                break;
            default:
                break;
        }
        if (traced) {
            result.trace.push_back(e);
        }
    }

    // Handlers only ever schedule at or after the current event, but a
    // same-instant event of an earlier kind would still land later in pop order.
    std::stable_sort(result.trace.begin(), result.trace.end());

    result.total_cycles = sync.complete_time().value();
    result.breakdown.setup_cycles = setup_end;
    result.breakdown.serial_cycles = dispatch_start - setup_end;
    result.breakdown.dispatch_cycles = last_compute_start - dispatch_start;
    result.breakdown.compute_cycles = last_compute_end - last_compute_start;
    result.breakdown.sync_cycles = result.total_cycles - last_compute_end;
    return result;
}

std::string format_cycles(double cycles) { return fmt::format("{:.1f}", cycles); }

std::string trace_to_text(const SimResult& result) {
    std::string text;
    for (const Event& e : result.trace) {
        if (!text.empty()) text += '\n';
        text += format_cycles(e.time);
        text += ',';
        text += to_string(e.kind);
        text += ',';
        text += e.cluster ? std::to_string(*e.cluster) : std::string("-");
    }
    return text;
}

}  // namespace offload::simcore
