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

#include "offload/sysmodel.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace offload::sysmodel {

namespace {

using nlohmann::json;

struct Field {
    std::string_view name;
    std::uint32_t SystemConfig::*count = nullptr;
    double SystemConfig::*system_real = nullptr;
    double TimingParams::*timing_real = nullptr;
};

constexpr std::array kFields{
    Field{"num_clusters", &SystemConfig::num_clusters, nullptr, nullptr},
    Field{"cores_per_cluster", &SystemConfig::cores_per_cluster, nullptr, nullptr},
    Field{"worker_cores_per_cluster", &SystemConfig::worker_cores_per_cluster, nullptr, nullptr},
    Field{"max_clusters", &SystemConfig::max_clusters, nullptr, nullptr},
    Field{"clock_hz", nullptr, &SystemConfig::clock_hz, nullptr},
    Field{"host_serial_elems_per_cycle", nullptr, nullptr, &TimingParams::host_serial_elems_per_cycle},
    Field{"compute_cycles_per_elem", nullptr, nullptr, &TimingParams::compute_cycles_per_elem},
    Field{"descriptor_words", nullptr, nullptr, &TimingParams::descriptor_words},
    Field{"unicast_cycles_per_word", nullptr, nullptr, &TimingParams::unicast_cycles_per_word},
    Field{"unicast_fixed_per_cluster", nullptr, nullptr, &TimingParams::unicast_fixed_per_cluster},
    Field{"multicast_dispatch_cycles", nullptr, nullptr, &TimingParams::multicast_dispatch_cycles},
    Field{"cluster_wakeup_cycles", nullptr, nullptr, &TimingParams::cluster_wakeup_cycles},
    Field{"sw_increment_cycles", nullptr, nullptr, &TimingParams::sw_increment_cycles},
    Field{"sw_poll_interval_cycles", nullptr, nullptr, &TimingParams::sw_poll_interval_cycles},
    Field{"credit_increment_cycles", nullptr, nullptr, &TimingParams::credit_increment_cycles},
    Field{"interrupt_latency_cycles", nullptr, nullptr, &TimingParams::interrupt_latency_cycles},
    Field{"offload_setup_cycles", nullptr, nullptr, &TimingParams::offload_setup_cycles},
};

const Field* find_field(std::string_view name) {
    auto it = std::find_if(kFields.begin(), kFields.end(), [&](const Field& f) { return f.name == name; });
    return it == kFields.end() ? nullptr : &*it;
}

void assign(Config& config, const Field& field, const json& value) {
    const std::string name{field.name};
    if (!value.is_number()) {
        throw ConfigError(name, "expected a number");
    }
    if (field.count != nullptr) {
        if (value.is_number_float()) {
            double v = value.get<double>();
            if (v != std::floor(v)) {
                throw ConfigError(name, "expected an integer");
            }
        }
        if (value.is_number_integer() && !value.is_number_unsigned()) {
            if (value.get<std::int64_t>() < 0) {
                throw ConfigError(name, "must be positive");
            }
        }
        double v = value.get<double>();
        if (v > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
            throw ConfigError(name, "out of range");
        }
        config.system.*field.count = static_cast<std::uint32_t>(v);
    } else if (field.system_real != nullptr) {
        config.system.*field.system_real = value.get<double>();
    } else {
        config.timing.*field.timing_real = value.get<double>();
    }
}

void require_non_negative(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
        throw ConfigError(name, "must be a finite non-negative number of cycles");
    }
}

void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
        throw ConfigError(name, "must be positive");
    }
}

}  // namespace

TimingParams calibration_start() {
    TimingParams tp;
    tp.unicast_cycles_per_word = 2.0;
    tp.unicast_fixed_per_cluster = 0.0;
    tp.offload_setup_cycles = 250.0;
    tp.multicast_dispatch_cycles = 1.0;
    tp.cluster_wakeup_cycles = 115.0;
    tp.credit_increment_cycles = 0.5;
    tp.interrupt_latency_cycles = 0.5;
    tp.sw_increment_cycles = 0.25;
    tp.sw_poll_interval_cycles = 1.0;
    return tp;
}

std::string_view to_string(Protocol protocol) {
    return protocol == Protocol::BaselineUnicast ? "baseline" : "multicast";
}

std::string_view to_string(SyncMechanism sync) {
    return sync == SyncMechanism::SoftwarePolling ? "polling" : "credit";
}

Protocol parse_protocol(std::string_view text) {
    if (text == "baseline" || text == "unicast") return Protocol::BaselineUnicast;
    if (text == "multicast") return Protocol::Multicast;
    throw std::invalid_argument("unknown protocol '" + std::string(text) + "' (expected baseline|multicast)");
}

SyncMechanism parse_sync(std::string_view text) {
    if (text == "polling" || text == "software") return SyncMechanism::SoftwarePolling;
    if (text == "credit") return SyncMechanism::CreditCounter;
    throw std::invalid_argument("unknown sync mechanism '" + std::string(text) + "' (expected polling|credit)");
}

void validate(const SystemConfig& cfg) {
    if (cfg.cores_per_cluster == 0) throw ConfigError("cores_per_cluster", "must be positive");
    if (cfg.worker_cores_per_cluster == 0) throw ConfigError("worker_cores_per_cluster", "must be positive");
    if (cfg.worker_cores_per_cluster >= cfg.cores_per_cluster) {
        throw ConfigError("worker_cores_per_cluster", "must be smaller than cores_per_cluster (one core manages the cluster)");
    }
    if (cfg.max_clusters == 0 || cfg.max_clusters > kHardwareClusterLimit) {
        throw ConfigError("max_clusters", "must be in [1, 288]");
    }
    if (cfg.num_clusters == 0 || cfg.num_clusters > cfg.max_clusters) {
        throw ConfigError("num_clusters", "must be in [1, max_clusters]");
    }
    require_positive(cfg.clock_hz, "clock_hz");
}

void validate(const TimingParams& tp) {
    require_positive(tp.host_serial_elems_per_cycle, "host_serial_elems_per_cycle");
    require_positive(tp.compute_cycles_per_elem, "compute_cycles_per_elem");
    require_non_negative(tp.descriptor_words, "descriptor_words");
    require_non_negative(tp.unicast_cycles_per_word, "unicast_cycles_per_word");
    require_non_negative(tp.unicast_fixed_per_cluster, "unicast_fixed_per_cluster");
    require_non_negative(tp.multicast_dispatch_cycles, "multicast_dispatch_cycles");
    require_non_negative(tp.cluster_wakeup_cycles, "cluster_wakeup_cycles");
    require_non_negative(tp.sw_increment_cycles, "sw_increment_cycles");
    // A zero period would mean the host never observes the counter.
    require_positive(tp.sw_poll_interval_cycles, "sw_poll_interval_cycles");
    require_non_negative(tp.credit_increment_cycles, "credit_increment_cycles");
    require_non_negative(tp.interrupt_latency_cycles, "interrupt_latency_cycles");
    require_non_negative(tp.offload_setup_cycles, "offload_setup_cycles");
}

void validate(const JobRequest& job, const SystemConfig& cfg) {
    if (job.m == 0) throw ConfigError("m", "at least one cluster is required");
    if (job.m > cfg.num_clusters) {
        throw ConfigError("m", "requested " + std::to_string(job.m) + " clusters but only " +
                                   std::to_string(cfg.num_clusters) + " are available");
    }
}

Config load_config(std::string_view text) {
    Config config;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; })) {
        return config;
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed configuration: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("", "configuration must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
        const Field* field = find_field(key);
        if (field == nullptr) {
            throw ConfigError(key, "unknown configuration key");
        }
        assign(config, *field, value);
    }
    validate(config.system);
    validate(config.timing);
    return config;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot open configuration file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_config(buffer.str());
}

std::string serialize_config(const Config& config) {
    json doc = json::object();
    for (const Field& field : kFields) {
        const std::string name{field.name};
        if (field.count != nullptr) {
            doc[name] = config.system.*field.count;
        } else if (field.system_real != nullptr) {
            doc[name] = config.system.*field.system_real;
        } else {
            doc[name] = config.timing.*field.timing_real;
        }
    }
    return doc.dump(2) + "\n";
}

void set_field(Config& config, std::string_view name, std::string_view value) {
    const Field* field = find_field(name);
    if (field == nullptr) {
        throw ConfigError(std::string(name), "unknown configuration key");
    }
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        throw ConfigError(std::string(name), "expected a number, got '" + std::string(value) + "'");
    }
    assign(config, *field, parsed);
    validate(config.system);
    validate(config.timing);
}

std::span<const std::uint64_t> Partition::cluster(std::uint32_t index) const {
    return std::span<const std::uint64_t>(chunk_sizes).subspan(std::size_t{index} * workers_per_cluster,
                                                                workers_per_cluster);
}

std::uint64_t Partition::largest_chunk(std::uint32_t cluster_index) const {
    auto chunks = cluster(cluster_index);
    return chunks.empty() ? 0 : *std::max_element(chunks.begin(), chunks.end());
}

Partition partition_work(std::uint64_t n, std::uint32_t m, std::uint32_t w) {
    if (m == 0 || w == 0) {
        throw std::invalid_argument("partition_work: cluster and worker counts must be positive");
    }
    const std::uint64_t cores = std::uint64_t{m} * w;
    const std::uint64_t base = n / cores;
    const std::uint64_t extra = n % cores;

    Partition p;
    p.clusters = m;
    p.workers_per_cluster = w;
    p.chunk_sizes.resize(cores, base);
    std::fill_n(p.chunk_sizes.begin(), extra, base + 1);
    return p;
}

}  // namespace offload::sysmodel
