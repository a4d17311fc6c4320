// Command-line front end: simulate, run, sweep, audit, report.
//
// Exit codes: 0 all verdicts pass, 1 verdict failures, 2 configuration error,
// 3 numerical divergence.

#include <algorithm>
#include <cstdint>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ipgobs/errors.hpp"
#include "ipgobs/experiment.hpp"
#include "ipgobs/serialize.hpp"

namespace {

enum ExitCode : int { kPass = 0, kVerdictFail = 1, kConfigError = 2, kDivergence = 3 };

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string format;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required = true) {
    auto* config = cmd->add_option("--config", opts.config, "Experiment config (JSON)");
    if (config_required) config->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "Output directory (overrides the config)");
    cmd->add_option("--seed", opts.seed, "Seed for region sampling (overrides the config)");
    cmd->add_option("--format", opts.format, "Restrict artifacts to one format")
        ->check(CLI::IsMember({"csv", "json"}));
}

void apply_overrides(ipgobs::ExperimentConfig& config, const CommonOptions& opts) {
    if (opts.seed) ipgobs::override_seed(config, *opts.seed);
    if (!opts.out.empty()) config.outputs = opts.out;
    if (!opts.format.empty()) config.formats = {opts.format};
}

ipgobs::ExperimentConfig load(const CommonOptions& opts) {
    auto config = ipgobs::load_experiment_config(opts.config);
    apply_overrides(config, opts);
    return config;
}

int exit_code(const ipgobs::ExperimentResult& r) {
    if (!r.run.completed()) return kDivergence;
    return r.all_pass() ? kPass : kVerdictFail;
}

void print_result(std::ostream& os, const ipgobs::ExperimentResult& r) {
    os << r.system_id << " / " << ipgobs::to_string(r.kind) << ": " << ipgobs::to_string(r.run.status);
    if (const auto mu = r.fitted_mu()) os << ", fitted mu " << ipgobs::format_double(*mu);
    os << '\n';
    for (const auto& v : r.verdicts) os << "  " << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
}

int cmd_simulate(const CommonOptions& opts) {
    const auto config = load(opts);
    const auto truth = ipgobs::simulate_truth(config);
    const bool json = opts.format == "json";
    if (config.outputs.empty()) {
        std::cout << (json ? ipgobs::trajectory_to_json(truth) : ipgobs::trajectory_to_csv(truth));
        return kPass;
    }
    const std::filesystem::path dir = config.outputs;
    if (config.wants("csv")) ipgobs::write_text_file(dir / "truth.csv", ipgobs::trajectory_to_csv(truth));
    if (config.wants("json")) ipgobs::write_text_file(dir / "truth.json", ipgobs::trajectory_to_json(truth));
    std::cout << "wrote " << truth.states.size() << " states to " << dir.string() << '\n';
    return kPass;
}

int cmd_run(const CommonOptions& opts) {
    const auto result = ipgobs::run_experiment(load(opts));
    print_result(std::cout, result);
    return exit_code(result);
}

int cmd_sweep(const CommonOptions& opts, unsigned jobs) {
    auto points = ipgobs::expand_sweep(ipgobs::read_text_file(opts.config));
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& config = points[i].config;
        if (opts.seed) ipgobs::override_seed(config, *opts.seed);
        if (!opts.format.empty()) config.formats = {opts.format};
        if (!opts.out.empty()) {
            char name[32];
            std::snprintf(name, sizeof(name), "run_%04zu", i);
            config.outputs = (std::filesystem::path(opts.out) / name).generic_string();
        }
    }

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::optional<ipgobs::ExperimentResult>> results(points.size());
    std::vector<std::string> errors(points.size());
    std::vector<int> error_codes(points.size(), kPass);

    // Runs share nothing; each writes only to its own directory.
    for (std::size_t begin = 0; begin < points.size(); begin += jobs) {
        const std::size_t end = std::min(points.size(), begin + jobs);
        std::vector<std::future<void>> batch;
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, [&, i] {
                try {
                    results[i] = ipgobs::run_experiment(points[i].config);
                } catch (const ipgobs::NumericalError& e) {
                    errors[i] = e.what();
                    error_codes[i] = kDivergence;
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                    error_codes[i] = kConfigError;
                }
            }));
        }
        for (auto& f : batch) f.get();
    }

    int code = kPass;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::cout << "[" << i << "] " << points[i].label << '\n';
        int c = error_codes[i];
        if (results[i]) {
            print_result(std::cout, *results[i]);
            c = exit_code(*results[i]);
        } else {
            std::cout << "  error: " << errors[i] << '\n';
        }
        code = std::max(code, c);
    }
    return code;
}

int cmd_audit(const CommonOptions& opts) {
    const auto config = load(opts);
    const auto audit = ipgobs::audit_experiment(config);
    const std::string constants = ipgobs::constants_to_json(audit.constants);
    const std::string conditions = ipgobs::conditions_to_json(audit.conditions);
    if (!config.outputs.empty()) {
        const std::filesystem::path dir = config.outputs;
        ipgobs::write_text_file(dir / "constants.json", constants);
        ipgobs::write_text_file(dir / "conditions.json", conditions);
    }
    std::cout << "constants " << constants << "conditions " << conditions;

    // Unauditable entries are reported, not counted as failures.
    bool failed = false;
    for (const auto& e : audit.conditions.conditions) {
        failed |= e.verdict == ipgobs::Verdict::fail || e.verdict == ipgobs::Verdict::failed_precondition;
    }
    return failed ? kVerdictFail : kPass;
}

int cmd_report(const std::string& dir, const std::string& out) {
    const auto summary = ipgobs::aggregate_results(dir);
    if (!out.empty()) ipgobs::write_text_file(out, summary.json);
    std::cout << summary.json;
    return summary.passing == summary.runs ? kPass : kVerdictFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IPG observer experiments"};
    app.require_subcommand(1);

    CommonOptions simulate_opts, run_opts, sweep_opts, audit_opts;
    auto* simulate = app.add_subcommand("simulate", "Simulate the truth trajectory only");
    add_common(simulate, simulate_opts);
    auto* run = app.add_subcommand("run", "Run one experiment and write trace.csv / result.json");
    add_common(run, run_opts);
    auto* sweep = app.add_subcommand("sweep", "Run every point of the config's sweep grid");
    add_common(sweep, sweep_opts);
    unsigned jobs = 0;
    sweep->add_option("--jobs", jobs, "Concurrent runs (0 = hardware concurrency)");
    auto* audit = app.add_subcommand("audit", "Constants and condition report without running the observer");
    add_common(audit, audit_opts);
    auto* report = app.add_subcommand("report", "Aggregate result.json files below a directory");
    std::string report_dir, report_out;
    report->add_option("dir", report_dir, "Directory holding run outputs")->required()->check(CLI::ExistingDirectory);
    report->add_option("--out", report_out, "Write the summary JSON here as well");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfigError;
    }

    try {
        if (*simulate) return cmd_simulate(simulate_opts);
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts, jobs);
        if (*audit) return cmd_audit(audit_opts);
        if (*report) return cmd_report(report_dir, report_out);
    } catch (const ipgobs::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
    return kConfigError;
}
