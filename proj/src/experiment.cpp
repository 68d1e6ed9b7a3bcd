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

#include "offload/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <fmt/format.h>

namespace offload::experiment {

using sysmodel::Config;
using sysmodel::Protocol;
using sysmodel::SystemConfig;
using sysmodel::TimingParams;

bool SweepSpec::has(Protocol protocol) const {
    return std::find(protocols.begin(), protocols.end(), protocol) != protocols.end();
}

void validate(const SweepSpec& spec, const SystemConfig& cfg) {
    if (spec.n_values.empty()) throw std::invalid_argument("sweep: empty problem-size list");
    if (spec.m_values.empty()) throw std::invalid_argument("sweep: empty cluster-count list");
    if (spec.protocols.empty()) throw std::invalid_argument("sweep: empty protocol list");
    for (std::uint32_t m : spec.m_values) {
        if (m == 0 || m > cfg.num_clusters) {
            throw std::invalid_argument(fmt::format("sweep: m={} outside [1, {}] (num_clusters)", m, cfg.num_clusters));
        }
    }
}

const RuntimeRow& SweepResult::at(Protocol protocol, std::uint64_t n, std::uint32_t m) const {
    for (const auto& row : runtime) {
        if (row.protocol == protocol && row.n == n && row.m == m) return row;
    }
    throw std::out_of_range(fmt::format("sweep has no {} point n={} m={}", sysmodel::to_string(protocol), n, m));
}

std::vector<analytic::Measurement> SweepResult::measurements(Protocol protocol) const {
    std::vector<analytic::Measurement> out;
    for (const auto& row : runtime) {
        if (row.protocol == protocol) out.push_back({row.m, row.n, row.total_cycles});
    }
    return out;
}

SweepResult run_sweep(const Config& config, const SweepSpec& spec, unsigned threads) {
    sysmodel::validate(config.system);
    sysmodel::validate(config.timing);
    validate(spec, config.system);

    // Deduplicate and order the grid up front; output order never depends on scheduling.
    auto n_values = spec.n_values;
    auto m_values = spec.m_values;
    auto protocols = spec.protocols;
    std::sort(n_values.begin(), n_values.end());
    n_values.erase(std::unique(n_values.begin(), n_values.end()), n_values.end());
    std::sort(m_values.begin(), m_values.end());
    m_values.erase(std::unique(m_values.begin(), m_values.end()), m_values.end());
    std::sort(protocols.begin(), protocols.end(),
              [](Protocol a, Protocol b) { return sysmodel::to_string(a) < sysmodel::to_string(b); });
    protocols.erase(std::unique(protocols.begin(), protocols.end()), protocols.end());

    SweepResult result;
    for (Protocol protocol : protocols) {
        for (std::uint64_t n : n_values) {
            for (std::uint32_t m : m_values) {
                result.runtime.push_back(RuntimeRow{protocol, n, m, 0.0, {}});
            }
        }
    }

    auto run_point = [&](RuntimeRow& row) {
        sysmodel::JobRequest job{sysmodel::Kernel::Daxpy, row.n, row.m, row.protocol, spec.sync_for(row.protocol)};
        auto sim = simcore::simulate_offload(config.system, config.timing, job);
        row.total_cycles = sim.total_cycles;
        row.breakdown = sim.breakdown;
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, result.runtime.size()));
    if (threads <= 1) {
        for (auto& row : result.runtime) run_point(row);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < result.runtime.size(); i = next++) {
                    try {
                        run_point(result.runtime[i]);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        workers.clear();
        if (failure) std::rethrow_exception(failure);
    }

    if (std::find(protocols.begin(), protocols.end(), Protocol::BaselineUnicast) != protocols.end() &&
        std::find(protocols.begin(), protocols.end(), Protocol::Multicast) != protocols.end()) {
        for (std::uint64_t n : n_values) {
            for (std::uint32_t m : m_values) {
                const double base = result.at(Protocol::BaselineUnicast, n, m).total_cycles;
                const double ext = result.at(Protocol::Multicast, n, m).total_cycles;
                result.speedup.push_back(SpeedupRow{n, m, analytic::speedup(base, ext)});
            }
        }
    }
    return result;
}

std::string runtime_row_csv(const RuntimeRow& row) {
    const auto& b = row.breakdown;
    return fmt::format("{},{},{},{:.1f},{:.1f},{:.1f},{:.1f},{:.1f},{:.1f}\n", sysmodel::to_string(row.protocol),
                       row.n, row.m, row.total_cycles, b.setup_cycles, b.serial_cycles, b.dispatch_cycles,
                       b.compute_cycles, b.sync_cycles);
}

std::string runtime_csv(const SweepResult& result) {
    std::string out = std::string(kRuntimeHeader) + "\n";
    for (const auto& row : result.runtime) out += runtime_row_csv(row);
    return out;
}

std::string speedup_csv(const SweepResult& result) {
    std::string out = "n,m,speedup\n";
    for (const auto& row : result.speedup) out += fmt::format("{},{},{:.4f}\n", row.n, row.m, row.speedup);
    return out;
}

std::vector<MapeRow> validate_model(const Config& config, const SweepSpec& spec,
                                    const analytic::RuntimeModel& model, bool self_check) {
    if (!spec.has(Protocol::Multicast)) {
        throw std::invalid_argument("validate: the sweep must include the multicast protocol");
    }
    SweepSpec multicast_only = spec;
    multicast_only.protocols = {Protocol::Multicast};
    const auto sweep = run_sweep(config, multicast_only);

    std::vector<MapeRow> rows;
    auto measurements = sweep.measurements(Protocol::Multicast);
    if (self_check) {
        for (auto& x : measurements) x.t = analytic::predict_runtime(model, x.m, x.n);
    }
    for (auto first = measurements.begin(); first != measurements.end();) {
        auto last = std::find_if(first, measurements.end(), [&](const auto& x) { return x.n != first->n; });
        rows.push_back(MapeRow{first->n, analytic::mape(model, std::span(first, last))});
        first = last;
    }
    return rows;
}

std::string mape_csv(const std::vector<MapeRow>& rows) {
    std::string out = "n,mape_pct\n";
    for (const auto& row : rows) out += fmt::format("{},{:.4f}\n", row.n, row.mape_pct);
    return out;
}

void validate(const CalibrationTargets& targets) {
    if (!(targets.mape_bound_pct >= 0.0)) throw std::invalid_argument("calibration: MAPE bound must be >= 0");
    if (targets.gap_cycles_at_1024_32.empty()) throw std::invalid_argument("calibration: empty gap interval");
    if (targets.speedup_at_1024_32.empty()) throw std::invalid_argument("calibration: empty speedup interval");
    if (targets.baseline_argmin_set.empty()) throw std::invalid_argument("calibration: empty baseline argmin set");
}

namespace {

constexpr std::uint64_t kHeadlineN = 1024;
constexpr std::uint32_t kHeadlineM = 32;

/// Everything the calibration loss and the target check need from one sweep.
struct GridView {
    SweepResult sweep;
    std::vector<std::uint64_t> n_values;
    std::vector<std::uint32_t> m_values;
};

GridView run_standard_grid(const Config& config) {
    SweepSpec spec;
    if (config.system.num_clusters < kHeadlineM) {
        throw std::invalid_argument("calibration needs at least 32 clusters in the system configuration");
    }
    // Calibration is itself a tight loop; the grid is small enough to run serially.
    return GridView{run_sweep(config, spec, 1), spec.n_values, spec.m_values};
}

double max_per_size_mape(const GridView& grid) {
    const analytic::RuntimeModel reference = analytic::RuntimeModel::reference();
    const auto measurements = grid.sweep.measurements(Protocol::Multicast);
    double worst = 0.0;
    for (auto first = measurements.begin(); first != measurements.end();) {
        auto last = std::find_if(first, measurements.end(), [&](const auto& x) { return x.n != first->n; });
        worst = std::max(worst, analytic::mape(reference, std::span(first, last)));
        first = last;
    }
    return worst;
}

std::uint32_t baseline_argmin(const GridView& grid) {
    std::uint32_t best = 0;
    double best_t = 0.0;
    for (std::uint32_t m : grid.m_values) {
        const double t = grid.sweep.at(Protocol::BaselineUnicast, kHeadlineN, m).total_cycles;
        if (best == 0 || t < best_t) {
            best = m;
            best_t = t;
        }
    }
    return best;
}

double speedup_at(const GridView& grid, std::uint64_t n, std::uint32_t m) {
    for (const auto& row : grid.sweep.speedup) {
        if (row.n == n && row.m == m) return row.speedup;
    }
    throw std::out_of_range("speedup grid point missing");
}

/// Total amount by which the curve-shape requirements are violated (0 = all hold).
double shape_violation(const GridView& grid, double speedup_floor, double slope_margin) {
    double violation = 0.0;
    for (const auto& row : grid.sweep.speedup) {
        violation += std::max(0.0, speedup_floor - row.speedup);
    }
    for (std::uint32_t m : grid.m_values) {
        for (std::size_t i = 0; i + 1 < grid.n_values.size(); ++i) {
            violation += std::max(0.0, speedup_at(grid, grid.n_values[i + 1], m) -
                                           speedup_at(grid, grid.n_values[i], m) + slope_margin);
        }
    }
    for (std::uint64_t n : grid.n_values) {
        for (std::size_t i = 0; i + 1 < grid.m_values.size(); ++i) {
            const double now = grid.sweep.at(Protocol::Multicast, n, grid.m_values[i]).total_cycles;
            const double next = grid.sweep.at(Protocol::Multicast, n, grid.m_values[i + 1]).total_cycles;
            violation += std::max(0.0, next - now) / 100.0;
        }
    }
    return violation;
}

CalibrationMetrics measure(const GridView& grid, const CalibrationTargets& targets) {
    CalibrationMetrics out;
    const double base = grid.sweep.at(Protocol::BaselineUnicast, kHeadlineN, kHeadlineM).total_cycles;
    const double ext = grid.sweep.at(Protocol::Multicast, kHeadlineN, kHeadlineM).total_cycles;
    out.max_mape_pct = max_per_size_mape(grid);
    out.gap_cycles = base - ext;
    out.speedup = analytic::speedup(base, ext);
    out.baseline_argmin = baseline_argmin(grid);

    const auto& set = targets.baseline_argmin_set;
    out.mape_met = out.max_mape_pct < targets.mape_bound_pct;
    out.gap_met = targets.gap_cycles_at_1024_32.contains(out.gap_cycles);
    out.speedup_met = targets.speedup_at_1024_32.contains(out.speedup);
    out.argmin_met = std::find(set.begin(), set.end(), out.baseline_argmin) != set.end();
    out.shapes_met = shape_violation(grid, 1.0, 0.0) == 0.0 &&
                     std::all_of(grid.sweep.speedup.begin(), grid.sweep.speedup.end(),
                                 [](const SpeedupRow& r) { return r.speedup > 1.0; });
    return out;
}

/// Distance of v from [lo, hi] shrunk inward by margin (or to its midpoint if narrower).
double outside(double v, const Interval& target, double margin) {
    double lo = target.lo;
    double hi = target.hi;
    if (std::isinf(lo) || std::isinf(hi)) {
        lo = std::isinf(lo) ? lo : lo + margin;
        hi = std::isinf(hi) ? hi : hi - margin;
    } else {
        margin = std::min(margin, (hi - lo) / 4.0);
        lo += margin;
        hi -= margin;
    }
    return std::max(0.0, lo - v) + std::max(0.0, v - hi);
}

/// Zero only when every target holds with margin; smooth enough for coordinate descent.
double calibration_loss(const GridView& grid, const CalibrationTargets& targets) {
    const CalibrationMetrics metrics = measure(grid, targets);
    double loss = 0.0;
    loss += std::max(0.0, metrics.max_mape_pct - 0.25 * targets.mape_bound_pct);
    if (!metrics.mape_met) loss += 1.0;
    loss += outside(metrics.gap_cycles, targets.gap_cycles_at_1024_32, 2.0) / 10.0;
    loss += outside(metrics.speedup, targets.speedup_at_1024_32, 0.01) / 0.01;

    if (!metrics.argmin_met) {
        double best_in_set = std::numeric_limits<double>::infinity();
        for (std::uint32_t m : targets.baseline_argmin_set) {
            if (std::find(grid.m_values.begin(), grid.m_values.end(), m) != grid.m_values.end()) {
                best_in_set = std::min(best_in_set, grid.sweep.at(Protocol::BaselineUnicast, kHeadlineN, m).total_cycles);
            }
        }
        const double best = grid.sweep.at(Protocol::BaselineUnicast, kHeadlineN, metrics.baseline_argmin).total_cycles;
        loss += 1.0 + (std::isinf(best_in_set) ? 0.0 : (best_in_set - best) / 10.0);
    }
    loss += 100.0 * shape_violation(grid, 1.002, 1e-5);
    return loss;
}

struct SearchedParam {
    double TimingParams::*field;
    double initial_step;
    bool must_stay_positive;  // otherwise the bound is >= 0
};

// Fixed traversal order. Stage one moves only the baseline-side costs, which
// leaves the multicast path (and so the model fit) untouched; stage two, run
// only if stage one stalls, opens up the shared and multicast costs too. The
// structural coefficients (serial throughput, per-element compute cost,
// descriptor size) are never searched.
constexpr std::size_t kBaselineSideParams = 4;
constexpr std::array kSearched{
    SearchedParam{&TimingParams::unicast_cycles_per_word, 0.125, false},
    SearchedParam{&TimingParams::unicast_fixed_per_cluster, 0.5, false},
    SearchedParam{&TimingParams::sw_increment_cycles, 0.125, false},
    SearchedParam{&TimingParams::sw_poll_interval_cycles, 0.25, true},
    SearchedParam{&TimingParams::multicast_dispatch_cycles, 0.5, false},
    SearchedParam{&TimingParams::credit_increment_cycles, 0.25, false},
    SearchedParam{&TimingParams::interrupt_latency_cycles, 0.25, false},
    SearchedParam{&TimingParams::offload_setup_cycles, 1.0, false},
    SearchedParam{&TimingParams::cluster_wakeup_cycles, 1.0, false},
};

constexpr int kMaxHalvings = 6;

struct SearchState {
    Config current;
    double loss = 0.0;
    std::size_t passes = 0;
};

void descend(SearchState& state, std::size_t searched, const CalibrationTargets& targets, std::size_t pass_budget) {
    std::array<double, kSearched.size()> steps{};
    for (std::size_t i = 0; i < kSearched.size(); ++i) steps[i] = kSearched[i].initial_step;

    int halvings = 0;
    while (state.loss > 0.0 && state.passes < pass_budget && halvings <= kMaxHalvings) {
        ++state.passes;
        bool improved = false;
        for (std::size_t i = 0; i < searched && state.loss > 0.0; ++i) {
            const auto& param = kSearched[i];
            for (double sign : {+1.0, -1.0}) {
                Config trial = state.current;
                double& value = trial.timing.*param.field;
                value += sign * steps[i];
                if (param.must_stay_positive ? value <= 0.0 : value < 0.0) continue;
                const double trial_loss = calibration_loss(run_standard_grid(trial), targets);
                if (trial_loss < state.loss) {
                    state.current = trial;
                    state.loss = trial_loss;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            ++halvings;
            for (double& step : steps) step /= 2.0;
        }
    }
}

}  // namespace

CalibrationMetrics evaluate_targets(const Config& config, const CalibrationTargets& targets) {
    validate(targets);
    return measure(run_standard_grid(config), targets);
}

CalibrationResult calibrate(const SystemConfig& system, const CalibrationTargets& targets, const TimingParams& start,
                            std::size_t pass_budget) {
    validate(targets);
    Config current{system, start};
    sysmodel::validate(current.system);
    sysmodel::validate(current.timing);

    SearchState state{current, calibration_loss(run_standard_grid(current), targets), 0};
    descend(state, kBaselineSideParams, targets, pass_budget);
    descend(state, kSearched.size(), targets, pass_budget);
    current = state.current;

    CalibrationResult result;
    result.passes = state.passes;
    result.params = current.timing;
    result.metrics = measure(run_standard_grid(current), targets);
    result.success = result.metrics.all_met();
    return result;
}

std::string calibration_report_csv(const CalibrationResult& result, const CalibrationTargets& targets) {
    auto interval = [](const Interval& i) {
        return fmt::format("{}{};{}{}", i.lo_open ? '(' : '[', i.lo, i.hi, i.hi_open ? ')' : ']');
    };
    std::string argmin_set;
    for (std::uint32_t m : targets.baseline_argmin_set) {
        argmin_set += (argmin_set.empty() ? "" : ";") + std::to_string(m);
    }
    const auto& m = result.metrics;
    auto yes = [](bool b) { return b ? "yes" : "no"; };
    std::string out = "metric,achieved,target,met\n";
    out += fmt::format("max_mape_pct,{:.4f},<{},{}\n", m.max_mape_pct, targets.mape_bound_pct, yes(m.mape_met));
    out += fmt::format("gap_cycles_1024_32,{:.1f},{},{}\n", m.gap_cycles, interval(targets.gap_cycles_at_1024_32),
                       yes(m.gap_met));
    out += fmt::format("speedup_1024_32,{:.4f},{},{}\n", m.speedup, interval(targets.speedup_at_1024_32),
                       yes(m.speedup_met));
    out += fmt::format("baseline_argmin_1024,{},{{{}}},{}\n", m.baseline_argmin, argmin_set, yes(m.argmin_met));
    out += fmt::format("curve_shapes,{},all,{}\n", m.shapes_met ? "ok" : "violated", yes(m.shapes_met));
    out += fmt::format("search_passes,{},-,-\n", result.passes);
    return out;
}

}  // namespace offload::experiment
