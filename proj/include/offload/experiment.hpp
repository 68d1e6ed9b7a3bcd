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
 * @file experiment.hpp
 * @brief Grid sweeps, model validation tables and timing calibration.
 *
 * Everything here produces deterministic CSV: rows are assembled in sorted
 * order no matter how many threads ran the underlying simulations, and all
 * cycle values are printed with one decimal digit.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offload/analytic.hpp"
#include "offload/simcore.hpp"
#include "offload/sysmodel.hpp"

namespace offload::experiment {

struct SweepSpec {
    std::vector<std::uint64_t> n_values{256, 512, 768, 1024};
    std::vector<std::uint32_t> m_values{1, 2, 4, 8, 16, 32};
    std::vector<sysmodel::Protocol> protocols{sysmodel::Protocol::BaselineUnicast, sysmodel::Protocol::Multicast};
    sysmodel::SyncMechanism baseline_sync = sysmodel::SyncMechanism::SoftwarePolling;
    sysmodel::SyncMechanism multicast_sync = sysmodel::SyncMechanism::CreditCounter;

    [[nodiscard]] sysmodel::SyncMechanism sync_for(sysmodel::Protocol protocol) const {
        return protocol == sysmodel::Protocol::BaselineUnicast ? baseline_sync : multicast_sync;
    }
    [[nodiscard]] bool has(sysmodel::Protocol protocol) const;
};

/// Throws std::invalid_argument for empty lists or m beyond the system.
void validate(const SweepSpec& spec, const sysmodel::SystemConfig& cfg);

struct RuntimeRow {
    sysmodel::Protocol protocol = sysmodel::Protocol::Multicast;
    std::uint64_t n = 0;
    std::uint32_t m = 1;
    double total_cycles = 0.0;
    simcore::Breakdown breakdown;
};

struct SpeedupRow {
    std::uint64_t n = 0;
    std::uint32_t m = 1;
    double speedup = 0.0;
};

struct SweepResult {
    std::vector<RuntimeRow> runtime;  // sorted by (protocol name, n, m)
    std::vector<SpeedupRow> speedup;  // sorted by (n, m); empty unless both protocols ran

    [[nodiscard]] const RuntimeRow& at(sysmodel::Protocol protocol, std::uint64_t n, std::uint32_t m) const;
    [[nodiscard]] std::vector<analytic::Measurement> measurements(sysmodel::Protocol protocol) const;
};

/// threads == 0 picks the hardware concurrency.
[[nodiscard]] SweepResult run_sweep(const sysmodel::Config& config, const SweepSpec& spec, unsigned threads = 0);

inline constexpr const char* kRuntimeHeader = "protocol,n,m,total_cycles,setup,serial,dispatch,compute,sync";

[[nodiscard]] std::string runtime_row_csv(const RuntimeRow& row);
[[nodiscard]] std::string runtime_csv(const SweepResult& result);
[[nodiscard]] std::string speedup_csv(const SweepResult& result);

struct MapeRow {
    std::uint64_t n = 0;
    double mape_pct = 0.0;
};

/**
 * Per-size MAPE of multicast runtimes against `model`. With self_check the
 * measurements are the model's own predictions, which must give zero.
 */
[[nodiscard]] std::vector<MapeRow> validate_model(const sysmodel::Config& config, const SweepSpec& spec,
                                                  const analytic::RuntimeModel& model, bool self_check = false);
[[nodiscard]] std::string mape_csv(const std::vector<MapeRow>& rows);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_open = false;
    bool hi_open = false;

    [[nodiscard]] bool contains(double v) const {
        return (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    }
    [[nodiscard]] bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }
};

struct CalibrationTargets {
    double mape_bound_pct = 1.0;
    Interval gap_cycles_at_1024_32{300.0, 340.0, true, false};
    Interval speedup_at_1024_32{1.459, 1.499, false, false};
    std::vector<std::uint32_t> baseline_argmin_set{4, 8};
};

/// Throws std::invalid_argument for a negative bound or an empty interval/set.
void validate(const CalibrationTargets& targets);

/// Achieved metrics on the standard grid (n in {256..1024}, m in {1..32}).
struct CalibrationMetrics {
    double max_mape_pct = 0.0;
    double gap_cycles = 0.0;
    double speedup = 0.0;
    std::uint32_t baseline_argmin = 0;

    bool mape_met = false;
    bool gap_met = false;
    bool speedup_met = false;
    bool argmin_met = false;
    /// Speedup > 1 everywhere, non-increasing in n; multicast non-increasing in m.
    bool shapes_met = false;

    [[nodiscard]] bool all_met() const { return mape_met && gap_met && speedup_met && argmin_met && shapes_met; }
};

[[nodiscard]] CalibrationMetrics evaluate_targets(const sysmodel::Config& config, const CalibrationTargets& targets);

struct CalibrationResult {
    bool success = false;
    sysmodel::TimingParams params;
    CalibrationMetrics metrics;
    std::size_t passes = 0;
};

/**
 * Deterministic coordinate descent from `start`. Each pass tries +step then
 * -step on every searched parameter in a fixed order and keeps strict
 * improvements; a pass without improvement halves all steps. Stops when the
 * targets are met with margin, after `pass_budget` passes, or once the steps
 * are exhausted.
 */
[[nodiscard]] CalibrationResult calibrate(const sysmodel::SystemConfig& system, const CalibrationTargets& targets,
                                          const sysmodel::TimingParams& start = sysmodel::calibration_start(),
                                          std::size_t pass_budget = 200);

/// "metric,achieved,target,met" rows.
[[nodiscard]] std::string calibration_report_csv(const CalibrationResult& result, const CalibrationTargets& targets);

}  // namespace offload::experiment
