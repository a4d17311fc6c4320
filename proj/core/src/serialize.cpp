#include "ipgobs/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ipgobs/errors.hpp"
#include "json_io.hpp"

namespace ipgobs {

namespace detail {

ordered_json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

ordered_json number(const std::optional<double>& v) { return v ? number(*v) : ordered_json(nullptr); }

ordered_json vector_json(const Vector& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index j = 0; j < v.size(); ++j) out.push_back(number(v(j)));
    return out;
}

ordered_json matrix_json(const Matrix& m) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
    return out;
}

ordered_json constants_json(const ConstantsReport& c) {
    ordered_json j;
    j["L"] = number(c.L);
    j["l"] = number(c.l);
    j["gamma"] = number(c.gamma);
    j["Lambda"] = number(c.Lambda);
    j["lambda_min"] = number(c.lambda_min);
    j["eta"] = number(c.eta);
    j["L2"] = number(c.L2);
    ordered_json cs = ordered_json::array();
    for (double v : c.C_seq) cs.push_back(number(v));
    j["C_seq"] = cs;
    j["method"] = c.method;
    j["points_evaluated"] = c.points_evaluated;
    j["pairs_evaluated"] = c.pairs_evaluated;
    j["singular_samples"] = c.singular_samples;
    j["inverse_constants_reliable"] = c.inverse_constants_reliable;
    j["observability_rank_ok"] = c.observability_rank_ok;
    j["eigenvalues_positive"] = c.eigenvalues_positive;
    j["complex_eigenvalues"] = c.complex_eigenvalues;
    j["beta_required"] = number(c.beta_required);
    return j;
}

namespace {

ordered_json entry_json(const ConditionEntry& e) {
    ordered_json j;
    j["id"] = e.id;
    j["inequality"] = e.inequality;
    j["lhs"] = number(e.lhs);
    j["rhs"] = number(e.rhs);
    j["verdict"] = to_string(e.verdict);
    if (!e.note.empty()) j["note"] = e.note;
    return j;
}

}  // namespace

ordered_json conditions_json(const ConditionReport& r) {
    ordered_json j;
    j["delta"] = number(r.delta);
    j["delta_bar"] = number(r.delta_bar);
    j["rho"] = number(r.rho);
    j["rho_N"] = number(r.rho_N);
    j["mu"] = number(r.mu);
    j["mu_range"] = ordered_json::array({1.0, number(r.mu_upper)});
    j["varrho"] = number(r.varrho);
    j["D2"] = number(r.D2);
    j["D2_upper"] = number(r.D2_upper);
    j["D1_bound"] = number(r.D1_bound);
    j["d_min"] = number(r.d_min);
    j["d_required"] = r.d_required;
    ordered_json pre = ordered_json::array();
    for (const auto& e : r.preconditions) pre.push_back(entry_json(e));
    j["preconditions"] = pre;
    ordered_json conds = ordered_json::array();
    for (const auto& e : r.conditions) conds.push_back(entry_json(e));
    j["conditions"] = conds;
    j["all_pass"] = r.all_pass();
    return j;
}

ordered_json rho_json(const RhoMeasurement& rho) {
    ordered_json j;
    j["rho_N"] = number(rho.rho_N);
    j["rho"] = number(rho.rho);
    j["contraction_holds"] = rho.contraction_holds;
    j["samples"] = rho.samples;
    return j;
}

}  // namespace detail

std::string format_double(double value) {
    if (std::isnan(value)) return {};
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

void put(std::ostringstream& os, const std::optional<double>& v) {
    os << ',';
    if (v) os << format_double(*v);
}

}  // namespace

std::string trace_to_csv(const RunTrace& trace) {
    std::ostringstream os;
    os << kTraceCsvHeader << '\n';
    for (const auto& row : trace.rows) {
        os << row.k << ',' << row.i;
        put(os, row.alpha);
        put(os, row.err_w);
        put(os, row.err_xhat);
        put(os, row.precond_residual);
        put(os, row.err_K);
        os << '\n';
    }
    return os.str();
}

std::string trajectory_to_csv(const Trajectory& t) {
    std::ostringstream os;
    os << 'k';
    const auto n = t.states.empty() ? 0 : t.states.front().size();
    const auto p = t.outputs.empty() ? 0 : t.outputs.front().size();
    for (Eigen::Index j = 0; j < n; ++j) os << ",x" << j;
    for (Eigen::Index j = 0; j < p; ++j) os << ",y" << j;
    os << '\n';
    for (std::size_t k = 0; k < t.states.size(); ++k) {
        os << k;
        for (Eigen::Index j = 0; j < n; ++j) os << ',' << format_double(t.states[k](j));
        for (Eigen::Index j = 0; j < p; ++j) os << ',' << format_double(t.outputs[k](j));
        os << '\n';
    }
    return os.str();
}

std::string trajectory_to_json(const Trajectory& t) {
    detail::ordered_json j;
    j["states"] = detail::ordered_json::array();
    for (const auto& x : t.states) j["states"].push_back(detail::vector_json(x));
    j["inputs"] = detail::ordered_json::array();
    for (const auto& u : t.inputs) j["inputs"].push_back(detail::vector_json(u));
    j["outputs"] = detail::ordered_json::array();
    for (const auto& y : t.outputs) j["outputs"].push_back(detail::vector_json(y));
    return j.dump(2) + "\n";
}

std::string constants_to_json(const ConstantsReport& report) { return detail::constants_json(report).dump(2) + "\n"; }

std::string conditions_to_json(const ConditionReport& report) {
    return detail::conditions_json(report).dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace ipgobs
