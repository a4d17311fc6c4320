#include "ipgobs/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ipgobs/errors.hpp"
#include "ipgobs/linalg.hpp"
#include "ipgobs/rng.hpp"

namespace ipgobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Total grid points allowed for the nearest-neighbour pass.
constexpr std::size_t kGridBudget = 4096;
constexpr int kMaxGridPerAxis = 65;

int grid_points_per_axis(int n) {
    int g = static_cast<int>(std::floor(std::pow(static_cast<double>(kGridBudget), 1.0 / n) + 1e-9));
    g = std::min(g, kMaxGridPerAxis);
    if (g < 2) return 0;
    return g;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

struct PointData {
    Vector F;
    Vector H;
    Matrix H_x;
    std::optional<Matrix> H_x_inv;
};

Vector nominal_input(const ObservabilityWindow& window) {
    if (!window.inputs().empty()) return window.inputs().front();
    return Vector::Zero(window.system().m());
}

}  // namespace

void Region::validate(int n) const {
    if (lower.size() != n || upper.size() != n) throw DimensionError("region bounds must have length n");
    if (!lower.allFinite() || !upper.allFinite()) throw ConfigError("region bounds must be finite");
    if ((lower.array() > upper.array()).any()) throw ConfigError("region: lower must be <= upper componentwise");
    if (samples < 2) throw ConfigError("region: samples must be >= 2");
}

RegionSamples sample_region(const Region& region) {
    const int n = static_cast<int>(region.lower.size());
    region.validate(n);

    RegionSamples out;
    PortableRng rng(region.seed);
    for (int s = 0; s < region.samples; ++s) {
        Vector x(n);
        for (int j = 0; j < n; ++j) x(j) = rng.uniform(region.lower(j), region.upper(j));
        out.points.push_back(std::move(x));
    }
    out.random_count = out.points.size();
    for (std::size_t a = 0; a < out.random_count; ++a) {
        for (std::size_t b = a + 1; b < out.random_count; ++b) out.pairs.emplace_back(a, b);
    }

    const int g = grid_points_per_axis(n);
    if (g == 0) return out;
    std::size_t total = 1;
    for (int j = 0; j < n; ++j) total *= static_cast<std::size_t>(g);

    const std::size_t base = out.points.size();
    std::vector<int> index(n, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int j = 0; j < n; ++j) {
            index[j] = static_cast<int>(rem % g);
            rem /= g;
        }
        Vector x(n);
        for (int j = 0; j < n; ++j) {
            const double t = static_cast<double>(index[j]) / (g - 1);
            x(j) = region.lower(j) + t * (region.upper(j) - region.lower(j));
        }
        out.points.push_back(std::move(x));
        std::size_t stride = 1;
        for (int j = 0; j < n; ++j) {
            if (index[j] + 1 < g) out.pairs.emplace_back(base + flat, base + flat + stride);
            stride *= static_cast<std::size_t>(g);
        }
    }
    return out;
}

ConstantsReport estimate_constants(const ObservabilityWindow& window, const Region& region, const Trajectory* reference,
                                   double beta_margin) {
    const SystemModel& system = window.system();
    region.validate(system.n());
    const RegionSamples samples = sample_region(region);
    const Vector u = nominal_input(window);

    ConstantsReport report;
    report.Lambda = -kInf;
    report.lambda_min = kInf;

    std::vector<PointData> data;
    data.reserve(samples.points.size());
    for (const auto& x : samples.points) {
        PointData pd;
        pd.F = system.step(x, u);
        pd.H = window.evaluate(x);
        pd.H_x = window.jacobian(x);
        if (!pd.F.allFinite() || !pd.H.allFinite() || !pd.H_x.allFinite()) {
            throw NumericalError("estimate_constants: non-finite model evaluation inside the region");
        }
        pd.H_x_inv = linalg::checked_inverse(pd.H_x);
        if (!pd.H_x_inv) ++report.singular_samples;

        // Local derivative norms are also lower bounds of the Lipschitz constants on a convex set.
        report.L = std::max(report.L, linalg::spectral_norm(system.dynamics_jacobian(x, u)));
        report.l = std::max(report.l, linalg::spectral_norm(pd.H_x));

        const auto eig = linalg::eigen_summary(pd.H_x);
        report.Lambda = std::max(report.Lambda, eig.max_real);
        report.lambda_min = std::min(report.lambda_min, eig.min_real);
        report.complex_eigenvalues = report.complex_eigenvalues || eig.has_complex;

        const Matrix H_x_next = window.jacobian(pd.F);
        if (const auto inv_next = linalg::checked_inverse(H_x_next)) {
            report.eta = std::max(report.eta, linalg::spectral_norm(*inv_next));
        } else {
            ++report.singular_samples;
        }
        data.push_back(std::move(pd));
    }
    report.points_evaluated = data.size();

    for (const auto& [a, b] : samples.pairs) {
        const double dx = (samples.points[a] - samples.points[b]).norm();
        if (dx == 0.0) continue;
        const PointData& pa = data[a];
        const PointData& pb = data[b];
        report.L = std::max(report.L, ratio((pa.F - pb.F).norm(), dx));
        report.l = std::max(report.l, ratio((pa.H - pb.H).norm(), dx));
        report.gamma = std::max(report.gamma, ratio(linalg::spectral_norm(pa.H_x - pb.H_x), dx));
        if (pa.H_x_inv && pb.H_x_inv) {
            report.L2 = std::max(report.L2, ratio(linalg::spectral_norm(*pa.H_x_inv - *pb.H_x_inv), dx));
        }
        ++report.pairs_evaluated;
    }

    report.inverse_constants_reliable = report.singular_samples == 0;
    report.observability_rank_ok = report.singular_samples == 0;
    report.eigenvalues_positive = report.lambda_min > 0.0;
    if (report.lambda_min <= 0.0) report.beta_required = std::max(0.0, -report.lambda_min) + beta_margin;

    if (reference != nullptr) {
        for (std::size_t k = 0; k + 1 < reference->states.size(); ++k) {
            report.C_seq.push_back((reference->states[k] - reference->states[k + 1]).norm());
        }
    }
    return report;
}

RhoMeasurement measure_rho(const RunTrace& trace) {
    RhoMeasurement out;
    bool any = false;
    int first_instant = 0;
    for (const auto& row : trace.rows) {
        if (row.i < 0 || !row.alpha || row.jacobian.size() == 0) continue;
        if (!any) first_instant = row.k;
        any = true;
        const double c = linalg::contraction_factor(row.jacobian, *row.alpha, trace.beta);
        out.rho = std::max(out.rho, c);
        if (row.k == first_instant) out.rho_N = std::max(out.rho_N, c);
        ++out.samples;
    }
    if (!any) throw PreconditionError("measure_rho: trace holds no inner iterations with step sizes and Jacobians");
    out.contraction_holds = out.rho < 1.0;
    return out;
}

double prior_rho(const ObservabilityWindow& window, const Region& region, std::span<const double> alphas,
                 double beta) {
    if (alphas.empty()) throw PreconditionError("prior_rho: no step sizes given");
    region.validate(window.n());
    const RegionSamples samples = sample_region(region);
    double rho = 0.0;
    for (const auto& x : samples.points) {
        const Matrix H_x = window.jacobian(x);
        for (double a : alphas) rho = std::max(rho, linalg::contraction_factor(H_x, a, beta));
    }
    return rho;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass:
            return "pass";
        case Verdict::fail:
            return "fail";
        case Verdict::failed_precondition:
            return "failed_precondition";
        case Verdict::unauditable:
            return "unauditable";
    }
    return "unknown";
}

const ConditionEntry& ConditionReport::condition(const std::string& id) const {
    for (const auto& c : conditions) {
        if (c.id == id) return c;
    }
    throw PreconditionError("no condition named '" + id + "'");
}

bool ConditionReport::all_pass() const {
    auto ok = [](const ConditionEntry& e) { return e.verdict == Verdict::pass; };
    return std::all_of(conditions.begin(), conditions.end(), ok) &&
           std::all_of(preconditions.begin(), preconditions.end(), ok);
}

namespace {

ConditionEntry less_than(std::string id, std::string text, double lhs, double rhs) {
    return {std::move(id), std::move(text), lhs, rhs, lhs < rhs ? Verdict::pass : Verdict::fail, {}};
}

ConditionEntry unauditable(std::string id, std::string text, std::string note) {
    return {std::move(id), std::move(text), std::nan(""), std::nan(""), Verdict::unauditable, std::move(note)};
}

const ConditionEntry* find(const std::vector<ConditionEntry>& v, const std::string& id) {
    for (const auto& e : v) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

}  // namespace

ConditionReport check_theorem_conditions(const ConstantsReport& c, const TheoremInputs& in) {
    ConditionReport r;
    r.delta = in.delta;
    r.delta_bar = in.delta_bar;
    r.rho = in.rho;
    r.rho_N = in.rho_N;
    r.mu = in.mu;
    r.mu_upper = in.rho > 0.0 ? 1.0 / in.rho : kInf;
    r.varrho = in.varrho;
    r.D2 = in.D2;

    const double eg = c.eta * c.gamma;
    const double L = c.L;
    const double l = c.l;
    const int d = in.d;
    const bool mu_valid = in.mu > 1.0;
    r.D1_bound = 0.5 * eg * in.varrho;

    // Preconditions.
    {
        ConditionEntry e{"mu_range", "1 < mu < 1/rho", in.mu, r.mu_upper, Verdict::fail, {}};
        if (mu_valid && in.mu < r.mu_upper) e.verdict = Verdict::pass;
        r.preconditions.push_back(e);
    }
    r.preconditions.push_back(less_than("rho_below_one", "rho < 1", in.rho, 1.0));
    {
        ConditionEntry e = less_than("varrho_bound", "0 < varrho < 1 - rho", in.varrho, 1.0 - in.rho);
        if (!(in.varrho > 0.0)) e.verdict = Verdict::fail;
        r.preconditions.push_back(e);
    }
    r.preconditions.push_back(less_than("mu_varrho", "1/mu < 1 - varrho", mu_valid ? 1.0 / in.mu : kInf,
                                        1.0 - in.varrho));
    if (in.delta_bar) {
        const double db = *in.delta_bar;
        r.preconditions.push_back(less_than("delta_bar_bound", "delta_bar < delta / L", db,
                                            L > 0.0 ? in.delta / L : kInf));
        r.D2_upper = in.delta > 0.0 ? eg * (1.0 - L * db / in.delta) / (2.0 * l) : std::nan("");
        ConditionEntry e = less_than("D2_bound", "0 < D2 < eta gamma (1 - L delta_bar/delta) / (2 l)", in.D2,
                                     r.D2_upper);
        if (!(in.D2 > 0.0) || std::isnan(r.D2_upper)) e.verdict = Verdict::fail;
        r.preconditions.push_back(e);
    } else {
        r.D2_upper = std::nan("");
        r.preconditions.push_back(unauditable("delta_bar_bound", "delta_bar < delta / L", "delta_bar requires a run"));
        r.preconditions.push_back(unauditable("D2_bound", "0 < D2 < eta gamma (1 - L delta_bar/delta) / (2 l)",
                                              "delta_bar requires a run"));
    }

    // (i) iteration count.
    {
        double d_min = 1.0;
        if (mu_valid) {
            const double log_mu_L = std::log(L) / std::log(in.mu);
            d_min = std::max(d_min, 1.0 + log_mu_L);
            if (in.window_n > 1) d_min = std::max(d_min, (in.window_n - 1) * log_mu_L);
        } else {
            d_min = kInf;
        }
        r.d_min = d_min;
        r.d_required = std::isfinite(d_min) ? static_cast<int>(std::ceil(d_min - 1e-12)) : -1;
        ConditionEntry e{"i", "d >= max{1, 1 + log_mu L, (N-1) log_mu L}", static_cast<double>(d), d_min,
                         d >= d_min ? Verdict::pass : Verdict::fail, {}};
        if (!mu_valid) {
            e.verdict = Verdict::failed_precondition;
            e.note = "log base mu must exceed 1";
        } else if (e.verdict == Verdict::fail) {
            e.note = "requires d >= " + std::to_string(r.d_required);
        }
        r.conditions.push_back(e);
    }

    // (ii) initialization.
    if (in.K0_error) {
        const double lhs = 0.5 * eg * in.delta + l * (*in.K0_error);
        const double rhs = mu_valid ? 1.0 / (2.0 * in.mu) : std::nan("");
        ConditionEntry e{"ii", "eta gamma delta / 2 + l ||K0 - H_x(x1)^-1|| <= 1/(2 mu)", lhs, rhs,
                         lhs <= rhs ? Verdict::pass : Verdict::fail, {}};
        if (!mu_valid) e.verdict = Verdict::failed_precondition;
        r.conditions.push_back(e);
    } else {
        r.conditions.push_back(unauditable("ii", "eta gamma delta / 2 + l ||K0 - H_x(x1)^-1|| <= 1/(2 mu)",
                                           "needs ground truth x1"));
    }

    // (iii) step sizes, with its preamble.
    {
        ConditionEntry e{"iii",
                         "alpha_i < min{1/Lambda, min{varrho, D2} mu^i (1 - mu rho) / (2 l (1 - (mu rho)^{i+1}))}",
                         std::nan(""), std::nan(""), Verdict::pass, {}};
        if (static_cast<int>(in.alphas.size()) < d) {
            e.verdict = Verdict::failed_precondition;
            e.note = "need one step size per inner iteration";
        } else {
            const double mr = in.mu * in.rho;
            double worst_slack = kInf;
            for (int i = 0; i < d; ++i) {
                const double second = std::min(in.varrho, in.D2) * std::pow(in.mu, i) * (1.0 - mr) /
                                      (2.0 * l * (1.0 - std::pow(mr, i + 1)));
                const double bound = std::min(c.Lambda > 0.0 ? 1.0 / c.Lambda : kInf, second);
                const double slack = std::isnan(bound) ? -kInf : bound - in.alphas[i];
                if (slack < worst_slack) {
                    worst_slack = slack;
                    e.lhs = in.alphas[i];
                    e.rhs = bound;
                    e.note = "tightest at i = " + std::to_string(i);
                }
                if (!(in.alphas[i] < bound)) e.verdict = Verdict::fail;
            }
            if (e.verdict == Verdict::pass) {
                for (const char* id : {"varrho_bound", "mu_varrho", "delta_bar_bound", "D2_bound"}) {
                    const ConditionEntry* p = find(r.preconditions, id);
                    if (p->verdict == Verdict::fail) {
                        e.verdict = Verdict::failed_precondition;
                        e.note += "; preamble " + std::string(id) + " fails";
                    } else if (p->verdict == Verdict::unauditable && e.verdict == Verdict::pass) {
                        e.verdict = Verdict::unauditable;
                        e.note += "; preamble " + std::string(id) + " needs a run";
                    }
                }
            }
        }
        r.conditions.push_back(e);
    }

    // (iv) k >= 1.
    {
        const std::string text =
            "l C_k L2 / (L delta_bar) <= (1 - rho^d) / (2 mu L delta_bar) + mu^{-(k-1)} (rho^d eta gamma/2 - varrho "
            "eta gamma/2 - eta gamma/(2 mu))";
        if (!in.delta_bar) {
            r.conditions.push_back(unauditable("iv", text, "delta_bar requires a run"));
        } else if (c.C_seq.size() < 2) {
            r.conditions.push_back(unauditable("iv", text, "needs a reference trajectory with C_k for k >= 1"));
        } else if (!(*in.delta_bar > 0.0) || !(L > 0.0) || !mu_valid) {
            r.conditions.push_back({"iv", text, std::nan(""), std::nan(""), Verdict::failed_precondition,
                                    "needs delta_bar > 0, L > 0 and mu > 1"});
        } else {
            const double db = *in.delta_bar;
            const double rho_d = std::pow(in.rho, d);
            ConditionEntry e{"iv", text, std::nan(""), std::nan(""), Verdict::pass, {}};
            double worst = -kInf;
            for (std::size_t k = 1; k < c.C_seq.size(); ++k) {
                const double lhs = l * c.C_seq[k] * c.L2 / (L * db);
                const double rhs = (1.0 - rho_d) / (2.0 * in.mu * L * db) +
                                   std::pow(in.mu, -(static_cast<double>(k) - 1.0)) *
                                       (rho_d * eg / 2.0 - in.varrho * eg / 2.0 - eg / (2.0 * in.mu));
                if (lhs - rhs > worst) {
                    worst = lhs - rhs;
                    e.lhs = lhs;
                    e.rhs = rhs;
                    e.note = "tightest at k = " + std::to_string(k);
                }
                if (!(lhs <= rhs)) e.verdict = Verdict::fail;
            }
            r.conditions.push_back(e);
        }
    }

    // (v) k = 0.
    {
        const std::string text =
            "l C_0 L2 <= (1 - rho_N^d)(1/(2 mu) - eta gamma delta/2) + delta (eta gamma/2 - eta gamma L delta_bar/(2 "
            "delta) - l D2)";
        if (!in.delta_bar) {
            r.conditions.push_back(unauditable("v", text, "delta_bar requires a run"));
        } else if (c.C_seq.empty()) {
            r.conditions.push_back(unauditable("v", text, "needs a reference trajectory for C_0"));
        } else if (!mu_valid) {
            r.conditions.push_back(
                {"v", text, std::nan(""), std::nan(""), Verdict::failed_precondition, "needs mu > 1"});
        } else {
            const double db = *in.delta_bar;
            const double lhs = l * c.C_seq[0] * c.L2;
            // delta * (eta gamma L delta_bar / (2 delta)) written without the division so delta = 0 stays finite.
            const double rhs = (1.0 - std::pow(in.rho_N, d)) * (1.0 / (2.0 * in.mu) - eg * in.delta / 2.0) +
                               in.delta * (eg / 2.0 - l * in.D2) - eg * L * db / 2.0;
            r.conditions.push_back({"v", text, lhs, rhs, lhs <= rhs ? Verdict::pass : Verdict::fail, {}});
        }
    }
    return r;
}

ConditionReport check_theorem_conditions(const ConstantsReport& constants, const IpgConfig& config, int window_n,
                                         TheoremInputs inputs) {
    inputs.d = config.d;
    inputs.window_n = window_n;
    inputs.alphas.clear();
    for (int i = 0; i < config.d; ++i) inputs.alphas.push_back(config.alpha(i));
    return check_theorem_conditions(constants, inputs);
}

std::optional<double> initial_preconditioner_error(const ObservabilityWindow& window, const Vector& x1,
                                                   const Matrix& K0) {
    const auto inv = linalg::checked_inverse(window.jacobian(x1));
    if (!inv) return std::nullopt;
    return linalg::spectral_norm(K0 - *inv);
}

}  // namespace ipgobs
