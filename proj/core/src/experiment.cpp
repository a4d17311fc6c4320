#include "ipgobs/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ipgobs/errors.hpp"
#include "ipgobs/linalg.hpp"
#include "ipgobs/serialize.hpp"
#include "json_io.hpp"

namespace ipgobs {

namespace {

using detail::ordered_json;

constexpr double kRateRatioSlack = 0.05;
constexpr double kRateFitTolerance = 0.95;
constexpr double kRatioFloor = 1e-10;
constexpr double kAutoMuCap = 100.0;

struct Setup {
    SystemModel system;
    int window_n;
    Trajectory truth;
    ConstantsReport constants;
    double beta = 0.0;
    Vector w_init;
};

int window_length(const ExperimentConfig& config, const SystemModel& system) {
    return config.window_n ? *config.window_n : natural_window(system);
}

Setup prepare(const ExperimentConfig& config) {
    Setup s{builtin_system(config.system_id, config.system_params), 0, {}, {}, 0.0, {}};
    s.window_n = window_length(config, s.system);
    if (config.horizon < s.window_n) throw ConfigError("horizon must be at least the window length N");
    s.truth = simulate_truth(config);
    const ObservabilityWindow window(s.system, s.window_n, {});
    s.constants = estimate_constants(window, config.region, &s.truth, config.audit.beta_margin);

    const auto& spec = config.observer;
    if (spec.kind == ObserverKind::ipg_beta) {
        s.beta = spec.beta ? *spec.beta : s.constants.beta_required.value_or(0.0);
    } else if (spec.kind == ObserverKind::ipg && spec.beta) {
        s.beta = *spec.beta;
    }
    s.w_init = spec.w_init.value ? *spec.w_init.value : Vector(s.truth.states.front() + spec.w_init.offset);
    return s;
}

StepSizeSchedule make_schedule(const AlphaSpec& spec, const ConstantsReport& c, double beta) {
    const double shifted = c.Lambda + beta;
    switch (spec.policy) {
        case AlphaPolicyKind::constant:
            return ConstantAlpha{spec.value};
        case AlphaPolicyKind::lambda_fraction:
            if (!(shifted > 0.0)) throw ConfigError("lambda_fraction step size needs Lambda + beta > 0");
            return ConstantAlpha{spec.value / shifted};
        case AlphaPolicyKind::theorem:
            return TheoremSchedule{shifted, c.l, *spec.rho, *spec.mu, *spec.varrho, *spec.D2};
        case AlphaPolicyKind::custom:
            return CustomAlpha{spec.values};
    }
    throw ConfigError("unknown alpha policy");
}

Matrix initial_preconditioner(const KInitSpec& spec, const ObservabilityWindow& window, const Vector& x_start) {
    const int n = window.n();
    switch (spec.kind) {
        case KInitKind::scaled_identity:
            return spec.scale * Matrix::Identity(n, n);
        case KInitKind::matrix:
            return spec.matrix;
        case KInitKind::inverse_jacobian: {
            auto inv = linalg::checked_inverse(window.jacobian(x_start));
            if (!inv) throw ConfigError("K_init inverse_jacobian: H_x(x_1) is singular");
            return *inv;
        }
    }
    throw ConfigError("unknown K_init kind");
}

// The largest mu allowed by rho and the initialization condition, backed off by 10% towards 1.
double auto_mu(double rho, double init_lhs) {
    double mu_max = kAutoMuCap;
    if (rho > 0.0) mu_max = std::min(mu_max, 1.0 / rho);
    if (init_lhs > 0.0) mu_max = std::min(mu_max, 1.0 / (2.0 * init_lhs));
    return 1.0 + 0.9 * (mu_max - 1.0);
}

ConditionReport audit_conditions(const ConstantsReport& c, const AuditSpec& audit, int d, int window_n,
                                 std::vector<double> alphas, std::optional<double> K0_error, double rho,
                                 double rho_N, double delta, std::optional<double> delta_bar) {
    TheoremInputs in;
    in.d = d;
    in.window_n = window_n;
    in.alphas = std::move(alphas);
    in.K0_error = K0_error;
    in.rho = rho;
    in.rho_N = rho_N;
    in.delta = delta;
    in.delta_bar = delta_bar;

    const double eg = c.eta * c.gamma;
    const double init_lhs = 0.5 * eg * delta + c.l * K0_error.value_or(0.0);
    in.mu = audit.mu ? *audit.mu : auto_mu(rho, init_lhs);
    in.varrho = audit.varrho ? *audit.varrho : 0.5 * (1.0 - rho);
    if (audit.D2) {
        in.D2 = *audit.D2;
    } else {
        double upper = std::numeric_limits<double>::quiet_NaN();
        if (delta_bar && delta > 0.0 && c.l > 0.0) upper = eg * (1.0 - c.L * *delta_bar / delta) / (2.0 * c.l);
        in.D2 = upper > 0.0 ? 0.5 * upper : 1e-6;
    }
    return check_theorem_conditions(c, in);
}

bool rate_conditions_hold(const ConditionReport& r) {
    const auto pre_ok = [&](const char* id) {
        for (const auto& e : r.preconditions) {
            if (e.id == id) return e.verdict == Verdict::pass;
        }
        return false;
    };
    return pre_ok("mu_range") && pre_ok("rho_below_one") && r.condition("i").verdict == Verdict::pass &&
           r.condition("ii").verdict == Verdict::pass;
}

std::optional<double> first_delta_bar(const RunTrace& trace) {
    for (const auto* row : trace.summaries()) return row->err_w;
    return std::nullopt;
}

std::string fmt(double v) { return format_double(v); }

void add_verdicts(ExperimentResult& r) {
    r.verdicts.push_back({"run_completed", r.run.completed(),
                          r.run.completed() ? "all instants processed"
                                            : std::string(to_string(r.run.status)) + ": " + r.run.message});

    if (r.rho) {
        r.verdicts.push_back({"contraction_below_one", r.rho->rho < 1.0, "measured rho = " + fmt(r.rho->rho)});
    }

    const std::vector<double> errors = r.run.trace.estimate_errors();
    const bool conditions_hold = r.conditions && rate_conditions_hold(*r.conditions);

    if (conditions_hold) {
        const double bound = 1.0 / r.conditions->mu + kRateRatioSlack;
        double worst = 0.0;
        for (std::size_t j = 0; j + 1 < errors.size() && errors[j] > kRatioFloor; ++j) {
            worst = std::max(worst, errors[j + 1] / errors[j]);
        }
        r.verdicts.push_back({"rate_ratio", worst <= bound,
                              "max per-instant error ratio " + fmt(worst) + " vs 1/mu + 0.05 = " + fmt(bound)});
    }

    if (!r.run.completed()) {
        r.verdicts.push_back({"rate_consistency", false, "run did not complete"});
    } else if (!r.fit) {
        const bool converged = !errors.empty() && errors.back() <= kRateFitFloor;
        r.verdicts.push_back({"rate_consistency", converged,
                              converged ? "errors reached the fit floor immediately; " + r.fit_note : r.fit_note});
    } else if (conditions_hold) {
        const double need = kRateFitTolerance * r.conditions->mu;
        r.verdicts.push_back({"rate_consistency", r.fit->mu_hat >= need,
                              "mu_hat = " + fmt(r.fit->mu_hat) + " vs 0.95 mu = " + fmt(need)});
    } else {
        r.verdicts.push_back({"rate_consistency", r.fit->mu_hat > 1.0,
                              "mu_hat = " + fmt(r.fit->mu_hat) + " vs 1 (theorem conditions not met)"});
    }
}

ordered_json verdicts_json(const std::vector<VerdictEntry>& verdicts) {
    ordered_json out = ordered_json::array();
    for (const auto& v : verdicts) out.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    return out;
}

ordered_json result_json(const ExperimentResult& r, const ExperimentConfig& config) {
    ordered_json j;
    j["system"] = r.system_id;
    j["observer"] = to_string(r.kind);
    j["window_n"] = r.window_n;
    j["horizon"] = config.horizon;
    j["seed"] = config.seed;
    j["status"] = to_string(r.run.status);
    j["message"] = r.run.message;
    j["failed_k"] = r.run.failed_k ? ordered_json(*r.run.failed_k) : ordered_json(nullptr);
    j["failed_i"] = r.run.failed_i ? ordered_json(*r.run.failed_i) : ordered_json(nullptr);
    j["beta"] = detail::number(r.beta);
    ordered_json alphas = ordered_json::array();
    for (double a : r.alphas) alphas.push_back(detail::number(a));
    j["alphas"] = alphas;
    j["delta"] = detail::number(r.delta);
    j["constants"] = detail::constants_json(r.constants);
    j["rho"] = r.rho ? detail::rho_json(*r.rho) : ordered_json(nullptr);
    j["conditions"] = r.conditions ? detail::conditions_json(*r.conditions) : ordered_json(nullptr);
    j["fitted_mu"] = r.fit ? detail::number(r.fit->mu_hat) : ordered_json(nullptr);
    j["r_squared"] = r.fit ? detail::number(r.fit->r_squared) : ordered_json(nullptr);
    j["fit_points"] = r.fit ? r.fit->used : 0;
    j["fit_note"] = r.fit_note;
    j["verdicts"] = verdicts_json(r.verdicts);
    j["all_pass"] = r.all_pass();
    ordered_json estimates = ordered_json::array();
    for (const auto& e : r.run.estimates) estimates.push_back({{"k", e.k}, {"x_hat", detail::vector_json(e.x_hat)}});
    j["estimates"] = estimates;
    return j;
}

}  // namespace

bool ExperimentResult::all_pass() const {
    return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.pass; });
}

std::optional<double> ExperimentResult::fitted_mu() const {
    if (!fit) return std::nullopt;
    return fit->mu_hat;
}

Trajectory simulate_truth(const ExperimentConfig& config) {
    const SystemModel system = builtin_system(config.system_id, config.system_params);
    if (config.horizon < 1) throw ConfigError("horizon must be >= 1");
    return simulate(system, config.truth_x0, {}, config.horizon - 1);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    Setup s = prepare(config);
    const auto& spec = config.observer;
    const ObservabilityWindow window(s.system, s.window_n, {});
    const Vector& x_start = s.truth.states.front();

    ExperimentResult r;
    r.system_id = config.system_id;
    r.kind = spec.kind;
    r.window_n = s.window_n;
    r.truth = s.truth;
    r.constants = s.constants;
    r.beta = s.beta;
    r.delta = (s.w_init - x_start).norm();

    std::optional<double> K0_error;
    if (spec.kind == ObserverKind::newton) {
        NewtonConfig nc;
        nc.d = spec.d;
        nc.w_init = s.w_init;
        nc.damping = spec.damping;
        r.run = run_newton_observer(s.system, s.window_n, s.truth.outputs, {}, nc, &s.truth);
    } else {
        IpgConfig ic;
        ic.d = spec.d;
        ic.alpha = make_schedule(spec.alpha, s.constants, s.beta);
        ic.delta_step = spec.delta_step;
        ic.beta = s.beta;
        ic.w_init = s.w_init;
        ic.K_init = initial_preconditioner(spec.K_init, window, x_start);
        for (int i = 0; i < ic.d; ++i) r.alphas.push_back(ic.alpha(i));
        K0_error = initial_preconditioner_error(window, x_start, ic.K_init);
        r.run = run_ipg_observer(s.system, s.window_n, s.truth.outputs, {}, ic, &s.truth);
    }

    if (spec.kind != ObserverKind::newton) {
        const bool has_inner_rows = std::any_of(r.run.trace.rows.begin(), r.run.trace.rows.end(),
                                                [](const TraceRow& row) { return row.i >= 0; });
        if (has_inner_rows) {
            r.rho = measure_rho(r.run.trace);
            r.conditions = audit_conditions(r.constants, config.audit, spec.d, s.window_n, r.alphas, K0_error,
                                            r.rho->rho, r.rho->rho_N, r.delta, first_delta_bar(r.run.trace));
        }
    }

    const std::vector<double> errors = r.run.trace.estimate_errors();
    try {
        r.fit = fit_linear_rate(errors);
        r.fit_note = "fit over " + std::to_string(r.fit->used) + " instants above the floor";
    } catch (const InsufficientDataError& e) {
        r.fit_note = e.what();
    } catch (const PreconditionError& e) {
        r.fit_note = e.what();
    }

    add_verdicts(r);
    if (!config.outputs.empty()) write_result_artifacts(r, config, config.outputs);
    return r;
}

AuditResult audit_experiment(const ExperimentConfig& config) {
    Setup s = prepare(config);
    const auto& spec = config.observer;
    const ObservabilityWindow window(s.system, s.window_n, {});
    const Vector& x_start = s.truth.states.front();

    const StepSizeSchedule schedule = make_schedule(spec.alpha, s.constants, s.beta);
    std::vector<double> alphas;
    for (int i = 0; i < spec.d; ++i) alphas.push_back(schedule(i));
    const Matrix K0 = initial_preconditioner(spec.K_init, window, x_start);

    AuditResult a;
    a.constants = s.constants;
    a.beta = s.beta;
    a.rho_prior = prior_rho(window, config.region, alphas, s.beta);
    a.conditions = audit_conditions(s.constants, config.audit, spec.d, s.window_n, alphas,
                                    initial_preconditioner_error(window, x_start, K0), a.rho_prior, a.rho_prior,
                                    (s.w_init - x_start).norm(), config.audit.delta_bar);
    return a;
}

void write_result_artifacts(const ExperimentResult& result, const ExperimentConfig& config,
                            const std::filesystem::path& dir) {
    if (config.wants("csv")) {
        write_text_file(dir / "trace.csv", trace_to_csv(result.run.trace));
        write_text_file(dir / "truth.csv", trajectory_to_csv(result.truth));
    }
    if (config.wants("json")) write_text_file(dir / "result.json", result_json(result, config).dump(2) + "\n");
}

ReportSummary aggregate_results(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "result.json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    ReportSummary summary;
    ordered_json runs = ordered_json::array();
    for (const auto& path : files) {
        ordered_json doc;
        try {
            doc = ordered_json::parse(read_text_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("malformed result file '" + path.string() + "': " + e.what());
        }
        const bool pass = doc.value("all_pass", false);
        ordered_json row;
        row["path"] = std::filesystem::relative(path.parent_path(), dir).generic_string();
        row["system"] = doc.value("system", "");
        row["observer"] = doc.value("observer", "");
        row["status"] = doc.value("status", "");
        row["all_pass"] = pass;
        row["fitted_mu"] = doc.contains("fitted_mu") ? doc["fitted_mu"] : ordered_json(nullptr);
        const auto& cond = doc.contains("conditions") ? doc["conditions"] : ordered_json(nullptr);
        row["mu"] = cond.is_object() && cond.contains("mu") ? cond["mu"] : ordered_json(nullptr);
        row["verdicts"] = doc.contains("verdicts") ? doc["verdicts"] : ordered_json::array();
        runs.push_back(std::move(row));
        ++summary.runs;
        if (pass) ++summary.passing;
    }
    ordered_json out;
    out["runs"] = summary.runs;
    out["passing"] = summary.passing;
    out["results"] = runs;
    summary.json = out.dump(2) + "\n";
    return summary;
}

}  // namespace ipgobs
