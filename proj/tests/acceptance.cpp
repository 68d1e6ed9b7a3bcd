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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Thresholds are pinned here and must not be relaxed to make a run pass.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <fmt/core.h>

#include "offload/analytic.hpp"
#include "offload/decision.hpp"
#include "offload/experiment.hpp"
#include "offload/simcore.hpp"
#include "offload/sysmodel.hpp"

using namespace offload;
using sysmodel::Protocol;

namespace {

constexpr double kPredictTol = 1e-9;
constexpr double kMapeBoundPct = 1.0;
constexpr double kSpeedupLo = 1.459;
constexpr double kSpeedupHi = 1.499;
constexpr double kGapLo = 300.0;  // exclusive
constexpr double kGapHi = 340.0;  // inclusive
constexpr int kDecisionQueries = 10000;
constexpr double kFitRecoveryTol = 1e-9;
constexpr double kFitCalibratedTol = 0.01;
constexpr std::uint32_t kPermutationMaxM = 8;
constexpr int kPartitionFuzz = 5000;

const std::vector<std::uint64_t> kN{256, 512, 768, 1024};
const std::vector<std::uint32_t> kM{1, 2, 4, 8, 16, 32};

struct Check {
    bool ok = true;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Check& c) {
    fmt::print("[{}] criterion {}: {} ({})\n", c.ok ? "PASS" : "FAIL", id, name, c.detail);
    if (!c.ok) ++failures;
}

sysmodel::Config shipped_config() {
    const char* dir = std::getenv("OFFLOAD_SIM_SOURCE_DIR");
    const std::filesystem::path path = std::filesystem::path(dir ? dir : ".") / "offload-sim.json";
    return sysmodel::load_config_file(path.string());
}

bool rel_close(double got, double want, double tol) {
    return std::abs(got - want) <= tol * std::abs(want);
}

Check model_arithmetic() {
    const auto ref = analytic::RuntimeModel::reference();
    const double a = analytic::predict_runtime(ref, 1, 1024);
    const double b = analytic::predict_runtime(ref, 4, 1024);
    const double c = analytic::predict_runtime(ref, 32, 1024);
    const bool ok = std::abs(a - 955.8) <= kPredictTol && std::abs(b - 706.2) <= kPredictTol &&
                    std::abs(c - 633.4) <= kPredictTol;
    return {ok, fmt::format("{:.10f} {:.10f} {:.10f}", a, b, c)};
}

Check model_validation(const sysmodel::Config& cfg) {
    const auto rows = experiment::validate_model(cfg, experiment::SweepSpec{}, analytic::RuntimeModel::reference());
    Check c;
    c.ok = rows.size() == kN.size();
    for (const auto& r : rows) {
        c.ok = c.ok && r.mape_pct < kMapeBoundPct;
        c.detail += fmt::format("{}n={}: {:.4f}%", c.detail.empty() ? "" : ", ", r.n, r.mape_pct);
    }
    return c;
}

Check speedup_headline(const experiment::SweepResult& sweep) {
    const double base = sweep.at(Protocol::BaselineUnicast, 1024, 32).total_cycles;
    const double mc = sweep.at(Protocol::Multicast, 1024, 32).total_cycles;
    const double sp = analytic::speedup(base, mc);
    const double gap = base - mc;
    const bool ok = sp >= kSpeedupLo && sp <= kSpeedupHi && gap > kGapLo && gap <= kGapHi;
    return {ok, fmt::format("speedup {:.4f}, gap {:.1f} cycles", sp, gap)};
}

Check curve_shapes(const experiment::SweepResult& sweep) {
    std::uint32_t argmin = 0;
    double best = std::numeric_limits<double>::infinity();
    for (auto m : kM) {
        const double t = sweep.at(Protocol::BaselineUnicast, 1024, m).total_cycles;
        if (t < best) {
            best = t;
            argmin = m;
        }
    }
    const bool argmin_ok = argmin == 4 || argmin == 8;

    bool mc_ok = true;
    for (auto n : kN) {
        for (std::size_t i = 1; i < kM.size(); ++i) {
            mc_ok = mc_ok && sweep.at(Protocol::Multicast, n, kM[i]).total_cycles <=
                                 sweep.at(Protocol::Multicast, n, kM[i - 1]).total_cycles;
        }
    }

    auto sp = [&](std::uint64_t n, std::uint32_t m) {
        return analytic::speedup(sweep.at(Protocol::BaselineUnicast, n, m).total_cycles,
                                 sweep.at(Protocol::Multicast, n, m).total_cycles);
    };
    bool above_one = true, decreasing = true;
    double min_sp = std::numeric_limits<double>::infinity();
    for (auto m : kM) {
        for (std::size_t i = 0; i < kN.size(); ++i) {
            min_sp = std::min(min_sp, sp(kN[i], m));
            above_one = above_one && sp(kN[i], m) > 1.0;
            if (i > 0) decreasing = decreasing && sp(kN[i], m) <= sp(kN[i - 1], m);
        }
    }
    return {argmin_ok && mc_ok && above_one && decreasing,
            fmt::format("baseline argmin m={}, multicast non-increasing {}, min speedup {:.4f}, "
                        "speedup non-increasing in n {}",
                        argmin, mc_ok ? "yes" : "no", min_sp, decreasing ? "yes" : "no")};
}

Check decision_correctness() {
    const auto ref = analytic::RuntimeModel::reference();
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<std::uint64_t> n_dist(0, 100000);
    std::uniform_real_distribution<double> t_dist(std::nextafter(0.0, 1.0), 1e6);
    std::uniform_int_distribution<std::uint64_t> cap_dist(1, 288);
    int disagreements = 0, feasible = 0;
    for (int i = 0; i < kDecisionQueries; ++i) {
        const decision::DecisionQuery q{n_dist(rng), t_dist(rng), cap_dist(rng)};
        const auto a = decision::min_clusters(ref, q);
        if (a != decision::min_clusters_bruteforce(ref, q)) ++disagreements;
        if (a.outcome == decision::Outcome::Feasible) ++feasible;
    }
    const auto example = decision::min_clusters(ref, {1024, 700.0, 32});
    const bool ok = disagreements == 0 && example == decision::DecisionResult::feasible(5);
    return {ok, fmt::format("{} disagreements over {} queries ({} feasible), example -> {}", disagreements,
                            kDecisionQueries, feasible, decision::to_string(example))};
}

Check oracle_fitting(const experiment::SweepResult& sweep) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> t0(1.0, 2000.0), s(0.01, 2.0), p(0.01, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const analytic::RuntimeModel truth{t0(rng), s(rng), p(rng)};
        std::vector<analytic::Measurement> rows;
        for (auto n : kN) {
            for (auto m : kM) rows.push_back({m, n, analytic::predict_runtime(truth, m, n)});
        }
        const auto fit = analytic::fit_model(rows);
        worst = std::max({worst, std::abs(fit.t0 - truth.t0) / truth.t0, std::abs(fit.s - truth.s) / truth.s,
                          std::abs(fit.p - truth.p) / truth.p});
    }
    const auto fit = analytic::fit_model(sweep.measurements(Protocol::Multicast));
    const auto ref = analytic::RuntimeModel::reference();
    const bool calibrated_ok = rel_close(fit.t0, ref.t0, kFitCalibratedTol) && rel_close(fit.s, ref.s, kFitCalibratedTol) &&
                               rel_close(fit.p, ref.p, kFitCalibratedTol);
    return {worst <= kFitRecoveryTol && calibrated_ok,
            fmt::format("worst noiseless relative error {:.3g}, calibrated fit t0={:.4f} s={:.6f} p={:.6f}", worst,
                        fit.t0, fit.s, fit.p)};
}

bool credit_permutations(std::size_t& orders) {
    sysmodel::TimingParams tp;
    orders = 0;
    for (std::uint32_t m = 1; m <= kPermutationMaxM; ++m) {
        std::vector<std::uint32_t> rank(m);
        std::iota(rank.begin(), rank.end(), 0u);
        do {
            std::vector<double> completion(m);
            for (std::uint32_t c = 0; c < m; ++c) completion[c] = 10.0 * rank[c];
            const auto out = simcore::resolve_credit_sync(completion, tp);
            std::size_t increments = 0, fired = 0;
            for (const auto& e : out.events) {
                if (e.kind == simcore::EventKind::SyncIncrement) {
                    if (fired != 0) return false;
                    ++increments;
                } else if (e.kind == simcore::EventKind::InterruptFired) {
                    if (increments != m) return false;
                    ++fired;
                }
            }
            if (fired != 1 || increments != m) return false;
            ++orders;
        } while (std::next_permutation(rank.begin(), rank.end()));
    }
    return true;
}

bool partition_fuzz() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::uint64_t> n_dist(0, 10'000'000);
    std::uniform_int_distribution<std::uint32_t> m_dist(1, 288), w_dist(1, 16);
    for (int i = 0; i < kPartitionFuzz; ++i) {
        const auto n = n_dist(rng);
        const auto m = m_dist(rng);
        const auto w = w_dist(rng);
        const auto p = sysmodel::partition_work(n, m, w);
        if (p.chunk_sizes.size() != std::size_t{m} * w) return false;
        if (std::accumulate(p.chunk_sizes.begin(), p.chunk_sizes.end(), std::uint64_t{0}) != n) return false;
        const auto [lo, hi] = std::minmax_element(p.chunk_sizes.begin(), p.chunk_sizes.end());
        if (*hi - *lo > 1) return false;
    }
    return true;
}

bool csv_byte_stable(const sysmodel::Config& cfg) {
    auto render = [&](unsigned threads) {
        const auto sweep = experiment::run_sweep(cfg, experiment::SweepSpec{}, threads);
        const auto mape = experiment::validate_model(cfg, experiment::SweepSpec{}, analytic::RuntimeModel::reference());
        const auto trace = simcore::simulate_offload(
            cfg.system, cfg.timing,
            {sysmodel::Kernel::Daxpy, 1024, 32, Protocol::BaselineUnicast, sysmodel::SyncMechanism::SoftwarePolling});
        return experiment::runtime_csv(sweep) + experiment::speedup_csv(sweep) + experiment::mape_csv(mape) +
               analytic::measurements_to_csv(sweep.measurements(Protocol::Multicast)) + simcore::trace_to_text(trace) +
               sysmodel::serialize_config(cfg);
    };
    const auto first = render(1);
    for (unsigned threads : {1u, 2u, 4u, 0u}) {
        if (render(threads) != first) return false;
    }
    return true;
}

Check property_suite(const sysmodel::Config& cfg) {
    std::size_t orders = 0;
    const bool perms = credit_permutations(orders);
    const bool parts = partition_fuzz();
    const bool stable = csv_byte_stable(cfg);
    return {perms && parts && stable,
            fmt::format("credit counter {} over {} orders, partition fuzz {} over {} cases, CSV byte-stable {}",
                        perms ? "ok" : "violated", orders, parts ? "ok" : "violated", kPartitionFuzz,
                        stable ? "yes" : "no")};
}

}  // namespace

int main() {
    sysmodel::Config cfg;
    try {
        cfg = shipped_config();
    } catch (const std::exception& e) {
        fmt::print("[FAIL] cannot load shipped configuration: {}\n", e.what());
        return 1;
    }
    const auto sweep = experiment::run_sweep(cfg, experiment::SweepSpec{});

    report(1, "model arithmetic", model_arithmetic());
    report(2, "per-size MAPE below 1%", model_validation(cfg));
    report(3, "speedup and gap at n=1024, m=32", speedup_headline(sweep));
    report(4, "curve shapes", curve_shapes(sweep));
    report(5, "decision agrees with search oracle", decision_correctness());
    report(6, "least-squares recovery", oracle_fitting(sweep));
    report(7, "property suite", property_suite(cfg));

    fmt::print("{} of 7 criteria passed\n", 7 - failures);
    return failures == 0 ? 0 : 1;
}
