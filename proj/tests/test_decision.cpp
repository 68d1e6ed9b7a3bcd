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

#include <random>
#include <stdexcept>

#include <doctest.h>

#include "offload/decision.hpp"

using namespace offload::decision;
using offload::analytic::predict_runtime;
using offload::analytic::RuntimeModel;

namespace {

const RuntimeModel kRef = RuntimeModel::reference();

}  // namespace

TEST_CASE("decision examples") {
    CHECK(min_clusters(kRef, {1024, 700.0, 32}) == DecisionResult::feasible(5));
    CHECK(min_clusters(kRef, {1024, 623.0, 32}) == DecisionResult::infeasible_deadline());
    CHECK(min_clusters(kRef, {1024, 600.0, 32}) == DecisionResult::infeasible_deadline());
    CHECK(min_clusters(kRef, {1024, 634.0, 16}) == DecisionResult::infeasible_capacity(31));
    CHECK(min_clusters(kRef, {1024, 634.0, 31}) == DecisionResult::feasible(31));
    CHECK(min_clusters(kRef, {0, 368.0, 32}) == DecisionResult::feasible(1));
    CHECK(min_clusters(kRef, {0, 366.0, 32}) == DecisionResult::infeasible_deadline());
    CHECK(min_clusters(kRef, {256, 10000.0, 32}) == DecisionResult::feasible(1));
    // Exactly on the deadline counts as meeting it.
    CHECK(min_clusters(kRef, {1024, 633.4, 32}) == DecisionResult::feasible(32));
}

TEST_CASE("decision text form") {
    CHECK(to_string(DecisionResult::feasible(5)) == "feasible,5");
    CHECK(to_string(DecisionResult::infeasible_deadline()) == "infeasible_deadline");
    CHECK(to_string(DecisionResult::infeasible_capacity(31)) == "infeasible_capacity,31");
}

TEST_CASE("decision rejects bad queries") {
    CHECK_THROWS_AS((void)min_clusters(kRef, {1024, 0.0, 32}), std::invalid_argument);
    CHECK_THROWS_AS((void)min_clusters(kRef, {1024, 700.0, 0}), std::invalid_argument);
    CHECK_THROWS_AS((void)min_clusters(RuntimeModel{367.0, 0.25, 0.0}, {1024, 700.0, 32}),
                    offload::analytic::ModelError);
}

TEST_CASE("closed form agrees with the search oracle") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::uint64_t> n_dist(0, 100000);
    std::uniform_real_distribution<double> t_dist(1.0, 1e6);
    std::uniform_int_distribution<std::uint64_t> cap_dist(1, 288);
    for (int i = 0; i < 10000; ++i) {
        const DecisionQuery q{n_dist(rng), t_dist(rng), cap_dist(rng)};
        CAPTURE(q.n);
        CAPTURE(q.t_max);
        CAPTURE(q.m_cap);
        REQUIRE(min_clusters(kRef, q) == min_clusters_bruteforce(kRef, q));
    }
}

TEST_CASE("closed form agrees with the oracle near the deadline boundary") {
    // Deadlines placed right at predicted runtimes stress the rounding.
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::uint64_t> n_dist(1, 100000);
    std::uniform_int_distribution<std::uint64_t> m_dist(1, 400);
    std::uniform_real_distribution<double> t0(0.0, 1000.0), s(0.0, 1.0), p(0.01, 4.0);
    for (int i = 0; i < 5000; ++i) {
        const RuntimeModel model{t0(rng), s(rng), p(rng)};
        const auto n = n_dist(rng);
        const double t = predict_runtime(model, m_dist(rng), n);
        for (double t_max : {t, std::nextafter(t, 0.0), std::nextafter(t, 1e300)}) {
            const DecisionQuery q{n, t_max, 288};
            REQUIRE(min_clusters(model, q) == min_clusters_bruteforce(model, q));
        }
    }
}

TEST_CASE("feasible answers are minimal and monotone in the deadline") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::uint64_t> n_dist(1, 100000);
    std::uniform_real_distribution<double> t_dist(400.0, 60000.0);
    for (int i = 0; i < 2000; ++i) {
        const auto n = n_dist(rng);
        const double a = t_dist(rng), b = t_dist(rng);
        const double lo = std::min(a, b), hi = std::max(a, b);
        const auto r_lo = min_clusters(kRef, {n, lo, 288});
        const auto r_hi = min_clusters(kRef, {n, hi, 288});
        for (const auto& [r, t_max] : {std::pair{r_lo, lo}, std::pair{r_hi, hi}}) {
            if (r.outcome == Outcome::Feasible) {
                CHECK(predict_runtime(kRef, r.clusters, n) <= t_max);
                if (r.clusters > 1) CHECK(predict_runtime(kRef, r.clusters - 1, n) > t_max);
            }
        }
        // A looser deadline never needs more clusters.
        if (r_lo.outcome != Outcome::InfeasibleDeadline) {
            REQUIRE(r_hi.outcome != Outcome::InfeasibleDeadline);
            CHECK(r_hi.clusters <= r_lo.clusters);
        }
    }
}

TEST_CASE("capacity answers report the count that would be needed") {
    const auto r = min_clusters(kRef, {100000, 25367.5, 4});
    REQUIRE(r.outcome == Outcome::InfeasibleCapacity);
    CHECK(predict_runtime(kRef, r.clusters, 100000) <= 25367.5);
    CHECK(predict_runtime(kRef, r.clusters - 1, 100000) > 25367.5);
    // Barely above the asymptote: the count saturates rather than overflowing.
    const double tiny = std::nextafter(kRef.t0 + kRef.s * 1e5, 1e300);
    const auto huge = min_clusters(kRef, {100000, tiny, 288});
    CHECK(huge.outcome == Outcome::InfeasibleCapacity);
    CHECK(huge == min_clusters_bruteforce(kRef, {100000, tiny, 288}));
}

TEST_CASE("baseline optimum on the calibrated system") {
    const offload::sysmodel::SystemConfig cfg;
    const offload::sysmodel::TimingParams tp;
    const std::vector<std::uint32_t> grid{1, 2, 4, 8, 16, 32};
    const auto best = optimal_clusters_baseline(tp, cfg, 1024, grid);
    CHECK((best == 4 || best == 8));

    const std::vector<std::uint32_t> small{1, 2, 4};
    CHECK(optimal_clusters_baseline(tp, cfg, 0, small) == 1);

    auto free_dispatch = tp;
    free_dispatch.unicast_cycles_per_word = 0.0;
    free_dispatch.unicast_fixed_per_cluster = 0.0;
    CHECK(optimal_clusters_baseline(free_dispatch, cfg, 1024, grid) == 32);

    CHECK_THROWS_AS((void)optimal_clusters_baseline(tp, cfg, 1024, std::vector<std::uint32_t>{}), std::invalid_argument);
}
