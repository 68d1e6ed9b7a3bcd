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

/**
 * @file simcore.hpp
 * @brief Discrete-event model of a single offload.
 *
 * Timeline of one offload:
 *
 *   0 .. setup             host-side offload setup
 *   setup .. ds            host serial phase, n / host_serial_elems_per_cycle
 *   ds ..                  descriptor dispatch
 *                            unicast:   cluster i arrives at ds + (i+1)*u
 *                            multicast: all clusters arrive at ds + multicast_dispatch_cycles
 *   arrival + wakeup ..    cluster compute, compute_cycles_per_elem * largest worker chunk
 *   completion ..          synchronization
 *                            credit:  counter write lands at completion + credit_increment_cycles,
 *                                     interrupt at the threshold write, done after interrupt latency
 *                            polling: increments serialize (sw_increment_cycles each), host polls
 *                                     every sw_poll_interval_cycles counted from dispatch end
 *
 * Times are real-valued cycles. Nothing is rounded until text output.
 */

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "offload/sysmodel.hpp"

namespace offload::simcore {

/// Raised when the credit counter is incremented past its threshold.
class ProtocolViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

struct CreditCounter {
    std::uint32_t threshold = 0;
    std::uint32_t count = 0;
    bool fired = false;

    /// Host arms the counter at the start of an offload session.
    static CreditCounter armed(std::uint32_t threshold) { return CreditCounter{threshold, 0, false}; }

    bool operator==(const CreditCounter&) const = default;
};

struct IncrementOutcome {
    CreditCounter counter;
    bool fired_now = false;
};

/// One atomic cluster completion write.
[[nodiscard]] IncrementOutcome credit_increment(const CreditCounter& counter);

// Declaration order is the tie-break order of the trace.
enum class EventKind : std::uint8_t {
    SerialStart,
    SerialEnd,
    DispatchSent,
    DescriptorArrived,
    ComputeStart,
    ComputeEnd,
    SyncIncrement,
    InterruptFired,
    PollObserved,
    OffloadComplete,
};

[[nodiscard]] std::string_view to_string(EventKind kind);

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::OffloadComplete;
    std::optional<std::uint32_t> cluster;

    bool operator==(const Event&) const = default;
    auto operator<=>(const Event&) const = default;
};

struct Breakdown {
    double setup_cycles = 0.0;
    double serial_cycles = 0.0;
    double dispatch_cycles = 0.0;
    double compute_cycles = 0.0;
    double sync_cycles = 0.0;

    [[nodiscard]] double sum() const {
        return setup_cycles + serial_cycles + dispatch_cycles + compute_cycles + sync_cycles;
    }

    bool operator==(const Breakdown&) const = default;
};

/**
 * Phases are consecutive intervals of the timeline, so they sum to the total:
 * dispatch runs until the last cluster starts computing (it includes the
 * wakeup), compute until the last cluster finishes, sync until completion.
 */
struct SimResult {
    double total_cycles = 0.0;
    Breakdown breakdown;
    std::vector<Event> trace;

    bool operator==(const SimResult&) const = default;
};

/// Throws sysmodel::ConfigError if the job does not fit the system.
[[nodiscard]] SimResult simulate_offload(const sysmodel::SystemConfig& cfg, const sysmodel::TimingParams& tp,
                                         const sysmodel::JobRequest& job);

/// Synchronization stage in isolation: cluster i finished computing at
/// completion_times[i]. Events returned in trace order.
struct SyncOutcome {
    double complete_time = 0.0;
    std::vector<Event> events;
};

[[nodiscard]] SyncOutcome resolve_credit_sync(std::span<const double> completion_times,
                                              const sysmodel::TimingParams& tp);

/// poll_origin is the dispatch end; polls happen at poll_origin + k * interval, k >= 1.
[[nodiscard]] SyncOutcome resolve_polling_sync(std::span<const double> completion_times, double poll_origin,
                                               const sysmodel::TimingParams& tp);

/// Cycle count with exactly one decimal digit.
[[nodiscard]] std::string format_cycles(double cycles);

/// "<time>,<kind>,<cluster|->" per event, LF-separated, no trailing newline.
[[nodiscard]] std::string trace_to_text(const SimResult& result);

}  // namespace offload::simcore
