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

#include "offload/decision.hpp"

#include <cmath>
#include <stdexcept>

#include "offload/simcore.hpp"

namespace offload::decision {

using analytic::predict_runtime;
using analytic::RuntimeModel;

namespace {

// Required counts saturate here; far beyond any buildable fabric.
constexpr std::uint64_t kClusterCountLimit = std::uint64_t{1} << 62;

void check_query(const DecisionQuery& q) {
    if (!(q.t_max > 0.0)) throw std::invalid_argument("decision: t_max must be positive");
    if (q.m_cap < 1) throw std::invalid_argument("decision: m_cap must be >= 1");
}

bool meets(const RuntimeModel& model, std::uint64_t m, const DecisionQuery& q) {
    return predict_runtime(model, m, q.n) <= q.t_max;
}

DecisionResult classify(std::uint64_t m, const DecisionQuery& q) {
    return m > q.m_cap ? DecisionResult::infeasible_capacity(m) : DecisionResult::feasible(m);
}

// Smallest passing m in (fails, passes]; meets() is monotone in m.
std::uint64_t bisect(const RuntimeModel& model, const DecisionQuery& q, std::uint64_t fails, std::uint64_t passes) {
    while (passes - fails > 1) {
        std::uint64_t mid = fails + (passes - fails) / 2;
        (meets(model, mid, q) ? passes : fails) = mid;
    }
    return passes;
}

std::uint64_t settle(const RuntimeModel& model, const DecisionQuery& q, std::uint64_t guess) {
    std::uint64_t step = 1;
    if (meets(model, guess, q)) {
        std::uint64_t passes = guess;
        while (passes > 1) {
            const std::uint64_t lo = passes > step ? passes - step : 0;
            if (lo == 0 || !meets(model, lo, q)) return bisect(model, q, lo, passes);
            passes = lo;
            step *= 2;
        }
        return 1;
    }
    std::uint64_t fails = guess;
    while (fails < kClusterCountLimit) {
        const std::uint64_t hi = kClusterCountLimit - fails > step ? fails + step : kClusterCountLimit;
        if (meets(model, hi, q)) return bisect(model, q, fails, hi);
        fails = hi;
        step *= 2;
    }
    return kClusterCountLimit;
}

}  // namespace

std::string to_string(const DecisionResult& result) {
    switch (result.outcome) {
        case Outcome::Feasible: return "feasible," + std::to_string(result.clusters);
        case Outcome::InfeasibleDeadline: return "infeasible_deadline";
        case Outcome::InfeasibleCapacity: return "infeasible_capacity," + std::to_string(result.clusters);
    }
    return "?";
}

DecisionResult min_clusters(const RuntimeModel& model, const DecisionQuery& q) {
    analytic::validate(model);
    check_query(q);

    const double n = static_cast<double>(q.n);
    if (q.n == 0) {
        // Runtime is t0 for every m; one cluster is the meaningful answer.
        return model.t0 <= q.t_max ? DecisionResult::feasible(1) : DecisionResult::infeasible_deadline();
    }
    const double slack = q.t_max - model.t0 - model.s * n;
    if (slack <= 0.0) {
        return DecisionResult::infeasible_deadline();
    }

    const double exact = std::ceil(model.p * n / slack);
    std::uint64_t m = exact >= static_cast<double>(kClusterCountLimit) ? kClusterCountLimit
                                                                       : static_cast<std::uint64_t>(exact);
    m = std::max<std::uint64_t>(m, 1);

    // The quotient can land off by rounding, by far when the slack is tiny;
    // settle on the smallest m that actually satisfies the deadline.
    return classify(settle(model, q, m), q);
}

DecisionResult min_clusters_bruteforce(const RuntimeModel& model, const DecisionQuery& q) {
    analytic::validate(model);
    check_query(q);

    for (std::uint64_t m = 1; m <= q.m_cap; ++m) {
        if (meets(model, m, q)) return DecisionResult::feasible(m);
    }
    const double limit = model.t0 + model.s * static_cast<double>(q.n);
    if (!(limit < q.t_max)) {
        return DecisionResult::infeasible_deadline();
    }

    // Runtime is non-increasing in m: gallop past the cap, then bisect.
    std::uint64_t fails = q.m_cap;
    std::uint64_t passes = q.m_cap;
    do {
        fails = passes;
        passes = passes >= kClusterCountLimit / 2 ? kClusterCountLimit : passes * 2;
    } while (passes < kClusterCountLimit && !meets(model, passes, q));
    if (!meets(model, passes, q)) {
        return DecisionResult::infeasible_capacity(kClusterCountLimit);
    }
    return DecisionResult::infeasible_capacity(bisect(model, q, fails, passes));
}

std::uint32_t optimal_clusters_baseline(const sysmodel::TimingParams& tp, const sysmodel::SystemConfig& cfg,
                                        std::uint64_t n, std::span<const std::uint32_t> m_grid) {
    if (m_grid.empty()) throw std::invalid_argument("optimal_clusters_baseline: empty cluster grid");

    std::uint32_t best_m = 0;
    double best_t = 0.0;
    for (std::uint32_t m : m_grid) {
        sysmodel::JobRequest job{sysmodel::Kernel::Daxpy, n, m, sysmodel::Protocol::BaselineUnicast,
                                 sysmodel::SyncMechanism::SoftwarePolling};
        const double t = simcore::simulate_offload(cfg, tp, job).total_cycles;
        if (best_m == 0 || t < best_t || (t == best_t && m < best_m)) {
            best_m = m;
            best_t = t;
        }
    }
    return best_m;
}

}  // namespace offload::decision
