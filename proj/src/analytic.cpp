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

#include "offload/analytic.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <json.hpp>

namespace offload::analytic {

void validate(const RuntimeModel& model) {
    if (!(std::isfinite(model.t0) && model.t0 >= 0.0)) throw ModelError("model t0 must be >= 0");
    if (!(std::isfinite(model.s) && model.s >= 0.0)) throw ModelError("model s must be >= 0");
    if (!(std::isfinite(model.p) && model.p > 0.0)) throw ModelError("model p must be > 0");
}

double predict_runtime(const RuntimeModel& model, std::uint64_t m, std::uint64_t n) {
    if (m == 0) throw ModelError("predict_runtime: m must be >= 1");
    const double elems = static_cast<double>(n);
    return model.t0 + model.s * elems + model.p * elems / static_cast<double>(m);
}

namespace {

double mean_abs_pct(const RuntimeModel& model, std::span<const Measurement> measurements) {
    if (measurements.empty()) throw ModelError("MAPE over an empty measurement set");
    double sum = 0.0;
    for (const auto& x : measurements) {
        if (!(x.t > 0.0)) throw ModelError("MAPE needs strictly positive measured runtimes");
        sum += std::abs(x.t - predict_runtime(model, x.m, x.n)) / x.t;
    }
    return 100.0 * sum / static_cast<double>(measurements.size());
}

}  // namespace

double mape(const RuntimeModel& model, std::span<const Measurement> measurements) {
    for (const auto& x : measurements) {
        if (x.n != measurements.front().n) {
            throw ModelError("per-size MAPE expects measurements sharing one problem size");
        }
    }
    return mean_abs_pct(model, measurements);
}

double pooled_mape(const RuntimeModel& model, std::span<const Measurement> measurements) {
    return mean_abs_pct(model, measurements);
}

double speedup(double t_base, double t_ext) {
    if (!(t_ext > 0.0)) throw ModelError("speedup: extended runtime must be positive");
    return t_base / t_ext;
}

RuntimeModel fit_model(std::span<const Measurement> measurements) {
    const auto rows = static_cast<Eigen::Index>(measurements.size());
    if (rows < 3) throw ModelError("fit needs at least 3 measurements");

    Eigen::MatrixXd design(rows, 3);
    Eigen::VectorXd t(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& x = measurements[static_cast<std::size_t>(i)];
        if (x.m == 0) throw ModelError("fit: measurement with m = 0");
        const double n = static_cast<double>(x.n);
        design(i, 0) = 1.0;
        design(i, 1) = n;
        design(i, 2) = n / static_cast<double>(x.m);
        t(i) = x.t;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 3) {
        throw ModelError("fit: design is rank deficient (need independent 1, n, n/m columns)");
    }
    Eigen::Vector3d coef = qr.solve(t);
    return RuntimeModel{coef(0), coef(1), coef(2)};
}

std::vector<Measurement> parse_measurements_csv(std::string_view text) {
    std::vector<Measurement> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "m,n,t_cycles") {
                throw ModelError("measurements CSV: expected header 'm,n,t_cycles'");
            }
            header_seen = true;
            continue;
        }
        std::istringstream fields(line);
        std::string m_text, n_text, t_text, extra;
        if (!std::getline(fields, m_text, ',') || !std::getline(fields, n_text, ',') ||
            !std::getline(fields, t_text, ',') || std::getline(fields, extra, ',')) {
            throw ModelError(fmt::format("measurements CSV line {}: expected 3 fields", line_no));
        }
        Measurement x;
        auto parse_uint = [&](const std::string& s, auto& value) {
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
            if (ec != std::errc{} || ptr != s.data() + s.size()) {
                throw ModelError(fmt::format("measurements CSV line {}: bad integer '{}'", line_no, s));
            }
        };
        parse_uint(m_text, x.m);
        parse_uint(n_text, x.n);
        try {
            std::size_t used = 0;
            x.t = std::stod(t_text, &used);
            if (used != t_text.size()) throw std::invalid_argument(t_text);
        } catch (const std::exception&) {
            throw ModelError(fmt::format("measurements CSV line {}: bad runtime '{}'", line_no, t_text));
        }
        if (x.m == 0 || !(x.t >= 0.0)) {
            throw ModelError(fmt::format("measurements CSV line {}: need m >= 1 and t >= 0", line_no));
        }
        out.push_back(x);
    }
    if (!header_seen) throw ModelError("measurements CSV: missing header");
    return out;
}

std::string measurements_to_csv(std::span<const Measurement> measurements) {
    std::string out = "m,n,t_cycles\n";
    for (const auto& x : measurements) {
        out += fmt::format("{},{},{:.1f}\n", x.m, x.n, x.t);
    }
    return out;
}

RuntimeModel parse_model_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("model JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ModelError("model JSON must be an object");
    RuntimeModel model;
    for (const char* key : {"t0", "s", "p"}) {
        if (!doc.contains(key) || !doc[key].is_number()) {
            throw ModelError(std::string("model JSON: missing numeric '") + key + "'");
        }
    }
    if (doc.size() != 3) throw ModelError("model JSON: expected exactly the keys t0, s, p");
    model.t0 = doc["t0"].get<double>();
    model.s = doc["s"].get<double>();
    model.p = doc["p"].get<double>();
    validate(model);
    return model;
}

std::string model_to_json(const RuntimeModel& model) {
    nlohmann::ordered_json doc;
    doc["t0"] = model.t0;
    doc["s"] = model.s;
    doc["p"] = model.p;
    return doc.dump() + "\n";
}

}  // namespace offload::analytic
