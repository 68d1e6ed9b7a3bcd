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
 * @file sysmodel.hpp
 * @brief System description shared by the simulator and the analytic model.
 *
 * A host core offloads a job to M accelerator clusters. Each cluster has
 * cores_per_cluster cores, one of which manages the cluster and does not
 * compute; the remaining worker cores split the job's elements evenly.
 *
 * All times are in cycles. clock_hz is carried for reporting only (at the
 * default 1 GHz one cycle is one nanosecond).
 */

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace offload::sysmodel {

inline constexpr std::uint32_t kHardwareClusterLimit = 288;

/// Raised for malformed configuration documents and invariant violations.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    /// Offending field name, empty for document-level errors.
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

struct SystemConfig {
    std::uint32_t num_clusters = 32;
    std::uint32_t cores_per_cluster = 9;
    std::uint32_t worker_cores_per_cluster = 8;
    std::uint32_t max_clusters = 32;
    double clock_hz = 1e9;

    bool operator==(const SystemConfig&) const = default;
};

/**
 * Behavioral latencies of one offload. Defaults are the calibrated values
 * produced by `offload-sim calibrate`, starting from calibration_start().
 */
struct TimingParams {
    double host_serial_elems_per_cycle = 4.0;
    double compute_cycles_per_elem = 2.6;
    double descriptor_words = 5.0;
    double unicast_cycles_per_word = 1.9375;
    double unicast_fixed_per_cluster = 0.0;
    double multicast_dispatch_cycles = 1.0;
    double cluster_wakeup_cycles = 115.0;
    double sw_increment_cycles = 0.25;
    double sw_poll_interval_cycles = 1.25;
    double credit_increment_cycles = 0.5;
    double interrupt_latency_cycles = 0.5;
    double offload_setup_cycles = 250.0;

    /// Cost of delivering one descriptor to one cluster in unicast dispatch.
    [[nodiscard]] double unicast_cycles_per_cluster() const {
        return descriptor_words * unicast_cycles_per_word + unicast_fixed_per_cluster;
    }

    bool operator==(const TimingParams&) const = default;
};

/// Documented starting point of the calibration search: a 5-word descriptor
/// at 2 cycles per word, and a 367-cycle fixed multicast overhead.
[[nodiscard]] TimingParams calibration_start();

struct Config {
    SystemConfig system;
    TimingParams timing;

    bool operator==(const Config&) const = default;
};

enum class Kernel { Daxpy };
enum class Protocol { BaselineUnicast, Multicast };
enum class SyncMechanism { SoftwarePolling, CreditCounter };

struct JobRequest {
    Kernel kernel = Kernel::Daxpy;
    std::uint64_t n = 0;
    std::uint32_t m = 1;
    Protocol protocol = Protocol::Multicast;
    SyncMechanism sync = SyncMechanism::CreditCounter;
};

[[nodiscard]] std::string_view to_string(Protocol protocol);
[[nodiscard]] std::string_view to_string(SyncMechanism sync);
/// Accepts "baseline"/"unicast" and "multicast".
[[nodiscard]] Protocol parse_protocol(std::string_view text);
/// Accepts "polling"/"software" and "credit".
[[nodiscard]] SyncMechanism parse_sync(std::string_view text);

/// Throws ConfigError naming the first violated field.
void validate(const SystemConfig& cfg);
void validate(const TimingParams& tp);
void validate(const JobRequest& job, const SystemConfig& cfg);

/**
 * Parses a flat JSON object whose keys are the SystemConfig and TimingParams
 * field names. Missing keys take defaults, unknown keys are rejected. An
 * empty (or all-whitespace) document yields the defaults.
 */
[[nodiscard]] Config load_config(std::string_view text);
[[nodiscard]] Config load_config_file(const std::string& path);

/// Inverse of load_config; emits every field.
[[nodiscard]] std::string serialize_config(const Config& config);

/// Overrides one field from its textual value, then revalidates.
void set_field(Config& config, std::string_view field, std::string_view value);

/// Per-worker element counts, cluster-major: cluster c owns
/// chunk_sizes[c * workers_per_cluster, (c + 1) * workers_per_cluster).
struct Partition {
    std::vector<std::uint64_t> chunk_sizes;
    std::uint32_t clusters = 0;
    std::uint32_t workers_per_cluster = 0;

    [[nodiscard]] std::span<const std::uint64_t> cluster(std::uint32_t index) const;
    [[nodiscard]] std::uint64_t largest_chunk(std::uint32_t cluster_index) const;
};

/// Balanced block split; the first n mod (m*w) cores get one extra element.
[[nodiscard]] Partition partition_work(std::uint64_t n, std::uint32_t m, std::uint32_t w);

}  // namespace offload::sysmodel
