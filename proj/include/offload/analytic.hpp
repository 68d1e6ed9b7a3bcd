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
 * @file analytic.hpp
 * @brief Closed-form offload runtime model t(m, n) = t0 + s*n + p*n/m.
 *
 * t0 is the fixed offload overhead, s*n the host-side serial work, and
 * p*n/m the parallel work spread over m clusters. The serial fraction
 * t0 + s*n bounds the attainable speedup (Amdahl).
 */

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace offload::analytic {

class ModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RuntimeModel {
    double t0 = 367.0;
    double s = 0.25;
    double p = 2.6 / 8.0;

    /// Coefficients read off the hardware and compiled DAXPY handler.
    static RuntimeModel reference() { return RuntimeModel{}; }

    bool operator==(const RuntimeModel&) const = default;
};

/// Throws ModelError unless t0 >= 0, s >= 0, p > 0.
void validate(const RuntimeModel& model);

struct Measurement {
    std::uint32_t m = 1;
    std::uint64_t n = 0;
    double t = 0.0;

    bool operator==(const Measurement&) const = default;
};

[[nodiscard]] double predict_runtime(const RuntimeModel& model, std::uint64_t m, std::uint64_t n);

/**
 * Mean absolute percentage error over configurations that share one
 * problem size, in percent.
 */
[[nodiscard]] double mape(const RuntimeModel& model, std::span<const Measurement> measurements);

/// Same error pooled over every measurement regardless of n. Reporting only.
[[nodiscard]] double pooled_mape(const RuntimeModel& model, std::span<const Measurement> measurements);

[[nodiscard]] double speedup(double t_base, double t_ext);

/// Ordinary least squares on the basis {1, n, n/m}.
[[nodiscard]] RuntimeModel fit_model(std::span<const Measurement> measurements);

/// CSV with header "m,n,t_cycles".
[[nodiscard]] std::vector<Measurement> parse_measurements_csv(std::string_view text);
[[nodiscard]] std::string measurements_to_csv(std::span<const Measurement> measurements);

/// JSON object {"t0": .., "s": .., "p": ..}.
[[nodiscard]] RuntimeModel parse_model_json(std::string_view text);
[[nodiscard]] std::string model_to_json(const RuntimeModel& model);

}  // namespace offload::analytic
