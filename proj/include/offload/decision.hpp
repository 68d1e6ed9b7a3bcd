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
 * @file decision.hpp
 * @brief Offload sizing: how many clusters meet a runtime deadline.
 */

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "offload/analytic.hpp"
#include "offload/sysmodel.hpp"

namespace offload::decision {

struct DecisionQuery {
    std::uint64_t n = 0;
    double t_max = 0.0;
    std::uint64_t m_cap = 1;
};

enum class Outcome { Feasible, InfeasibleDeadline, InfeasibleCapacity };

/// clusters is m_min for Feasible and the required count for InfeasibleCapacity.
struct DecisionResult {
    Outcome outcome = Outcome::InfeasibleDeadline;
    std::uint64_t clusters = 0;

    static DecisionResult feasible(std::uint64_t m) { return {Outcome::Feasible, m}; }
    static DecisionResult infeasible_deadline() { return {Outcome::InfeasibleDeadline, 0}; }
    static DecisionResult infeasible_capacity(std::uint64_t m) { return {Outcome::InfeasibleCapacity, m}; }

    bool operator==(const DecisionResult&) const = default;
};

/// `feasible,<m>`, `infeasible_deadline` or `infeasible_capacity,<m>`.
[[nodiscard]] std::string to_string(const DecisionResult& result);

/// Closed-form inversion of the runtime model:
/// m = ceil(p*n / (t_max - t0 - s*n)), infeasible when the denominator is <= 0.
[[nodiscard]] DecisionResult min_clusters(const analytic::RuntimeModel& model, const DecisionQuery& q);

/// Search-based oracle for min_clusters: scans m = 1..m_cap, then keeps
/// searching beyond the cap to report the required cluster count.
[[nodiscard]] DecisionResult min_clusters_bruteforce(const analytic::RuntimeModel& model, const DecisionQuery& q);

/// Grid point minimizing the simulated baseline (unicast + polling) runtime;
/// ties go to the smaller m.
[[nodiscard]] std::uint32_t optimal_clusters_baseline(const sysmodel::TimingParams& tp,
                                                      const sysmodel::SystemConfig& cfg, std::uint64_t n,
                                                      std::span<const std::uint32_t> m_grid);

}  // namespace offload::decision
