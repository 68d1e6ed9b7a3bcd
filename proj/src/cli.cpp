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

#include "offload/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "offload/analytic.hpp"
#include "offload/decision.hpp"
#include "offload/experiment.hpp"
#include "offload/simcore.hpp"
#include "offload/sysmodel.hpp"

namespace offload::cli {

namespace {

namespace fs = std::filesystem;
using sysmodel::Protocol;
using sysmodel::SyncMechanism;

/// Input/usage problems detected after CLI11 parsing (exit status 2).
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

struct ConfigOptions {
    std::string path;
    std::vector<std::string> overrides;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", path, std::string("Configuration JSON (default ") + kDefaultConfigPath + ")");
        cmd.add_option("--set", overrides, "Override one configuration field, FIELD=VALUE (repeatable)");
    }

    [[nodiscard]] sysmodel::Config load() const {
        sysmodel::Config config;
        if (!path.empty()) {
            config = sysmodel::load_config_file(path);
        } else if (fs::exists(kDefaultConfigPath)) {
            config = sysmodel::load_config_file(kDefaultConfigPath);
        }
        for (const auto& item : overrides) {
            auto eq = item.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects FIELD=VALUE, got '" + item + "'");
            sysmodel::set_field(config, item.substr(0, eq), item.substr(eq + 1));
        }
        return config;
    }
};

struct GridOptions {
    std::vector<std::uint64_t> n_values;
    std::vector<std::uint32_t> m_values;
    std::vector<std::string> protocols;
    std::string baseline_sync = "polling";
    std::string multicast_sync = "credit";

    void attach(CLI::App& cmd) {
        cmd.add_option("--n", n_values, "Problem sizes, comma separated (default 256,512,768,1024)")->delimiter(',');
        cmd.add_option("--m", m_values, "Cluster counts, comma separated (default 1,2,4,8,16,32)")->delimiter(',');
        cmd.add_option("--protocols", protocols, "Protocols: baseline,multicast (default both)")->delimiter(',');
        cmd.add_option("--baseline-sync", baseline_sync, "Sync used with baseline dispatch (polling|credit)");
        cmd.add_option("--multicast-sync", multicast_sync, "Sync used with multicast dispatch (polling|credit)");
    }

    [[nodiscard]] experiment::SweepSpec spec() const {
        experiment::SweepSpec spec;
        if (!n_values.empty()) spec.n_values = n_values;
        if (!m_values.empty()) spec.m_values = m_values;
        if (!protocols.empty()) {
            spec.protocols.clear();
            for (const auto& p : protocols) spec.protocols.push_back(sysmodel::parse_protocol(p));
        }
        spec.baseline_sync = sysmodel::parse_sync(baseline_sync);
        spec.multicast_sync = sysmodel::parse_sync(multicast_sync);
        return spec;
    }
};

double parse_bound(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("bad value for ") + what + ": '" + text + "'");
}

analytic::RuntimeModel load_model(const std::string& path) {
    return path.empty() ? analytic::RuntimeModel::reference() : analytic::parse_model_json(read_file(path));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Offload simulator for a host + many-cluster accelerator"};
    app.name("offload-sim");
    app.require_subcommand(1);

    // simulate
    ConfigOptions sim_config;
    std::uint64_t sim_n = 1024;
    std::uint32_t sim_m = 32;
    std::string sim_protocol = "multicast";
    std::string sim_sync;
    std::string sim_trace;
    auto* simulate = app.add_subcommand("simulate", "Simulate one offload and print its runtime row");
    sim_config.attach(*simulate);
    simulate->add_option("--n", sim_n, "Problem size in elements");
    simulate->add_option("--m", sim_m, "Clusters to offload to");
    simulate->add_option("--protocol", sim_protocol, "Dispatch protocol (baseline|multicast)");
    simulate->add_option("--sync", sim_sync, "Completion sync (polling|credit); default follows the protocol");
    simulate->add_option("--trace", sim_trace, "Write the event trace to this file");

    // sweep
    ConfigOptions sweep_config;
    GridOptions sweep_grid;
    std::string sweep_out = ".";
    std::string sweep_measurements;
    unsigned sweep_threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Run the (protocol, n, m) grid; writes runtime.csv and speedup.csv");
    sweep_config.attach(*sweep);
    sweep_grid.attach(*sweep);
    sweep->add_option("--out-dir", sweep_out, "Directory for runtime.csv and speedup.csv");
    sweep->add_option("--measurements", sweep_measurements, "Also write multicast m,n,t_cycles measurements here");
    sweep->add_option("--threads", sweep_threads, "Worker threads (0 = hardware concurrency)");

    // validate
    ConfigOptions validate_config;
    GridOptions validate_grid;
    std::string validate_model;
    bool validate_self = false;
    auto* validate = app.add_subcommand("validate", "Per-size MAPE of multicast runtimes against the model");
    validate_config.attach(*validate);
    validate_grid.attach(*validate);
    validate->add_option("--model", validate_model, "Model JSON {t0,s,p} (default: reference coefficients)");
    validate->add_flag("--self-check", validate_self, "Use model predictions as measurements (expects 0)");

    // fit
    std::string fit_input;
    std::string fit_out;
    auto* fit = app.add_subcommand("fit", "Least-squares fit of t0 + s*n + p*n/m to measurements");
    fit->add_option("measurements", fit_input, "CSV with header m,n,t_cycles")->required();
    fit->add_option("--out", fit_out, "Write the model JSON here instead of standard output");

    // decide
    std::string decide_model;
    std::uint64_t decide_n = 0;
    double decide_t_max = 0.0;
    std::uint64_t decide_m_cap = 32;
    auto* decide = app.add_subcommand("decide", "Minimum clusters meeting a runtime deadline");
    decide->add_option("--model", decide_model, "Model JSON {t0,s,p} (default: reference coefficients)");
    decide->add_option("--n", decide_n, "Problem size in elements")->required();
    decide->add_option("--t-max", decide_t_max, "Deadline in cycles")->required();
    decide->add_option("--m-cap", decide_m_cap, "Clusters available");

    // calibrate
    ConfigOptions calibrate_config;
    double cal_mape = 1.0;
    std::string cal_gap_min = "300", cal_gap_max = "340";
    std::string cal_speedup_min = "1.459", cal_speedup_max = "1.499";
    std::vector<std::uint32_t> cal_argmin{4, 8};
    std::size_t cal_budget = 200;
    std::string cal_out, cal_report;
    auto* calibrate = app.add_subcommand("calibrate", "Search timing parameters that meet the calibration targets");
    calibrate_config.attach(*calibrate);
    calibrate->add_option("--mape-bound", cal_mape, "Per-size MAPE bound in percent (strict)");
    calibrate->add_option("--gap-min", cal_gap_min, "Gap at n=1024, m=32: exclusive lower bound (cycles)");
    calibrate->add_option("--gap-max", cal_gap_max, "Gap at n=1024, m=32: inclusive upper bound (cycles, 'inf' ok)");
    calibrate->add_option("--speedup-min", cal_speedup_min, "Speedup at n=1024, m=32: inclusive lower bound");
    calibrate->add_option("--speedup-max", cal_speedup_max, "Speedup at n=1024, m=32: inclusive upper bound");
    calibrate->add_option("--argmin-set", cal_argmin, "Accepted baseline optimum m at n=1024")->delimiter(',');
    calibrate->add_option("--budget", cal_budget, "Maximum search passes");
    calibrate->add_option("--out", cal_out, "Write the calibrated configuration JSON here (default stdout)");
    calibrate->add_option("--report", cal_report, "Write the metrics report CSV here (default stderr)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*simulate) {
            const auto config = sim_config.load();
            sysmodel::JobRequest job;
            job.n = sim_n;
            job.m = sim_m;
            job.protocol = sysmodel::parse_protocol(sim_protocol);
            job.sync = sim_sync.empty() ? experiment::SweepSpec{}.sync_for(job.protocol) : sysmodel::parse_sync(sim_sync);
            const auto result = simcore::simulate_offload(config.system, config.timing, job);
            out << experiment::kRuntimeHeader << '\n'
                << experiment::runtime_row_csv({job.protocol, job.n, job.m, result.total_cycles, result.breakdown});
            if (!sim_trace.empty()) {
                std::string text = simcore::trace_to_text(result);
                if (!text.empty()) text += '\n';
                write_file(sim_trace, text);
            }
            return kExitOk;
        }

        if (*sweep) {
            const auto config = sweep_config.load();
            const auto result = experiment::run_sweep(config, sweep_grid.spec(), sweep_threads);
            const fs::path dir(sweep_out);
            fs::create_directories(dir);
            write_file(dir / "runtime.csv", experiment::runtime_csv(result));
            if (!result.speedup.empty()) {
                write_file(dir / "speedup.csv", experiment::speedup_csv(result));
            } else {
                err << "speedup.csv skipped: needs both baseline and multicast\n";
            }
            if (!sweep_measurements.empty()) {
                const auto rows = result.measurements(Protocol::Multicast);
                if (rows.empty()) throw UsageError("--measurements needs the multicast protocol in the sweep");
                write_file(sweep_measurements, analytic::measurements_to_csv(rows));
            }
            return kExitOk;
        }

        if (*validate) {
            const auto config = validate_config.load();
            const auto rows = experiment::validate_model(config, validate_grid.spec(), load_model(validate_model),
                                                         validate_self);
            out << experiment::mape_csv(rows);
            return kExitOk;
        }

        if (*fit) {
            const auto measurements = analytic::parse_measurements_csv(read_file(fit_input));
            const auto json = analytic::model_to_json(analytic::fit_model(measurements));
            if (fit_out.empty()) {
                out << json;
            } else {
                write_file(fit_out, json);
            }
            return kExitOk;
        }

        if (*decide) {
            const auto model = load_model(decide_model);
            const auto result = decision::min_clusters(model, {decide_n, decide_t_max, decide_m_cap});
            out << decision::to_string(result) << '\n';
            return result.outcome == decision::Outcome::Feasible ? kExitOk : kExitFailure;
        }

        if (*calibrate) {
            const auto config = calibrate_config.load();
            experiment::CalibrationTargets targets;
            targets.mape_bound_pct = cal_mape;
            targets.gap_cycles_at_1024_32 = {parse_bound(cal_gap_min, "--gap-min"),
                                             parse_bound(cal_gap_max, "--gap-max"), true, false};
            targets.speedup_at_1024_32 = {parse_bound(cal_speedup_min, "--speedup-min"),
                                          parse_bound(cal_speedup_max, "--speedup-max"), false, false};
            targets.baseline_argmin_set = cal_argmin;
            if (std::isinf(targets.gap_cycles_at_1024_32.hi)) targets.gap_cycles_at_1024_32.hi_open = true;

            const auto result = experiment::calibrate(config.system, targets, sysmodel::calibration_start(), cal_budget);
            const auto report = experiment::calibration_report_csv(result, targets);
            if (cal_report.empty()) {
                err << report;
            } else {
                write_file(cal_report, report);
            }
            if (!result.success) {
                err << "calibration failed: targets not met within budget (best achieved metrics above)\n";
                return kExitFailure;
            }
            const auto document = sysmodel::serialize_config({config.system, result.params});
            if (cal_out.empty()) {
                out << document;
            } else {
                write_file(cal_out, document);
            }
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace offload::cli
