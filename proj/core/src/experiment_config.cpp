#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>

#include "ipgobs/errors.hpp"
#include "ipgobs/experiment.hpp"
#include "ipgobs/serialize.hpp"
#include "json_io.hpp"

namespace ipgobs {

namespace {

using detail::ordered_json;

// Reads one closed JSON object: every key must be consumed by a getter before finish().
class Section {
   public:
    Section(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    const ordered_json& raw(const char* key) {
        seen_.emplace_back(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError("missing required key " + where(key));
        return *it;
    }

    double number(const char* key) {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(where(key) + " must be finite");
        return x;
    }

    double number(const char* key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

    std::optional<double> optional_number(const char* key) {
        if (!has(key)) return mark(key, std::optional<double>{});
        return number(key);
    }

    std::int64_t integer(const char* key) {
        const auto& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
        return v.get<std::int64_t>();
    }

    std::uint64_t unsigned_integer(const char* key) {
        const auto& v = raw(key);
        if (!v.is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const char* key) {
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
        return v.get<std::string>();
    }

    Vector vector(const char* key) {
        const auto& v = raw(key);
        if (!v.is_array() || v.empty()) throw ConfigError(where(key) + " must be a non-empty array of numbers");
        Vector out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (!v[j].is_number() || !std::isfinite(v[j].get<double>())) {
                throw ConfigError(where(key) + " must contain finite numbers");
            }
            out(static_cast<Eigen::Index>(j)) = v[j].get<double>();
        }
        return out;
    }

    Matrix matrix(const char* key) {
        const auto& v = raw(key);
        if (!v.is_array() || v.empty() || !v[0].is_array()) throw ConfigError(where(key) + " must be an array of rows");
        const std::size_t cols = v[0].size();
        Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < v.size(); ++r) {
            if (!v[r].is_array() || v[r].size() != cols) throw ConfigError(where(key) + " rows must have equal length");
            for (std::size_t c = 0; c < cols; ++c) {
                if (!v[r][c].is_number()) throw ConfigError(where(key) + " must contain numbers");
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
            }
        }
        return out;
    }

    Section child(const char* key) { return Section(raw(key), path_.empty() ? key : path_ + "." + key); }

    void ignore(const char* key) { seen_.emplace_back(key); }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end()) {
                throw ConfigError("unknown key " + where(item.key().c_str()));
            }
        }
    }

   private:
    template <class T>
    T mark(const char* key, T value) {
        seen_.emplace_back(key);
        return value;
    }

    std::string where(const char* key = nullptr) const {
        std::string p = path_;
        if (key != nullptr) p = p.empty() ? key : p + "." + key;
        return "'" + (p.empty() ? std::string("<root>") : p) + "'";
    }

    const ordered_json& j_;
    std::string path_;
    std::vector<std::string> seen_;
};

template <class Enum>
Enum parse_enum(const std::string& text, std::initializer_list<std::pair<const char*, Enum>> options,
                const char* what) {
    std::string valid;
    for (const auto& [name, value] : options) {
        if (text == name) return value;
        valid += valid.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError("unknown " + std::string(what) + " '" + text + "' (valid: " + valid + ")");
}

AlphaSpec parse_alpha(Section s) {
    AlphaSpec a;
    if (s.has("policy")) {
        a.policy = parse_enum<AlphaPolicyKind>(s.string("policy"),
                                               {{"constant", AlphaPolicyKind::constant},
                                                {"lambda_fraction", AlphaPolicyKind::lambda_fraction},
                                                {"theorem", AlphaPolicyKind::theorem},
                                                {"custom", AlphaPolicyKind::custom}},
                                               "alpha policy");
    } else {
        s.ignore("policy");
    }
    a.value = s.number("value", a.value);
    if (s.has("values")) {
        const Vector v = s.vector("values");
        a.values.assign(v.data(), v.data() + v.size());
    } else {
        s.ignore("values");
    }
    a.rho = s.optional_number("rho");
    a.mu = s.optional_number("mu");
    a.varrho = s.optional_number("varrho");
    a.D2 = s.optional_number("D2");
    s.finish();

    if (a.policy == AlphaPolicyKind::custom && a.values.empty()) {
        throw ConfigError("'observer.alpha.values' is required for the custom policy");
    }
    if (a.policy == AlphaPolicyKind::theorem && !(a.rho && a.mu && a.varrho && a.D2)) {
        throw ConfigError("the theorem alpha policy needs rho, mu, varrho and D2 (measure rho in a first run)");
    }
    if ((a.policy == AlphaPolicyKind::constant || a.policy == AlphaPolicyKind::lambda_fraction) && !(a.value > 0.0)) {
        throw ConfigError("'observer.alpha.value' must be > 0");
    }
    return a;
}

ObserverSpec parse_observer(Section s) {
    ObserverSpec o;
    o.kind = parse_enum<ObserverKind>(
        s.string("kind"), {{"ipg", ObserverKind::ipg}, {"ipg_beta", ObserverKind::ipg_beta}, {"newton", ObserverKind::newton}},
        "observer kind");
    if (s.has("d")) {
        const auto d = s.integer("d");
        if (d < 1 || d > 100000) throw ConfigError("'observer.d' must be in [1, 100000]");
        o.d = static_cast<int>(d);
    } else {
        s.ignore("d");
    }
    if (s.has("alpha")) {
        o.alpha = parse_alpha(s.child("alpha"));
    } else {
        s.ignore("alpha");
    }
    o.delta_step = s.number("delta_step", o.delta_step);
    if (!(o.delta_step > 0.0)) throw ConfigError("'observer.delta_step' must be > 0");
    o.beta = s.optional_number("beta");
    if (o.beta && !(*o.beta >= 0.0)) throw ConfigError("'observer.beta' must be >= 0");
    if (o.beta && o.kind == ObserverKind::ipg && *o.beta != 0.0) {
        throw ConfigError("'observer.beta' is only meaningful for kind ipg_beta");
    }

    if (s.has("w_init")) {
        Section w = s.child("w_init");
        if (w.has("value")) o.w_init.value = w.vector("value");
        else w.ignore("value");
        if (w.has("offset")) o.w_init.offset = w.vector("offset");
        else w.ignore("offset");
        w.finish();
        if (o.w_init.value && o.w_init.offset.size() > 0) {
            throw ConfigError("'observer.w_init' takes either value or offset, not both");
        }
    } else {
        s.ignore("w_init");
    }

    if (s.has("K_init")) {
        Section k = s.child("K_init");
        o.K_init.kind = parse_enum<KInitKind>(k.string("kind"),
                                              {{"scaled_identity", KInitKind::scaled_identity},
                                               {"matrix", KInitKind::matrix},
                                               {"inverse_jacobian", KInitKind::inverse_jacobian}},
                                              "K_init kind");
        o.K_init.scale = k.number("scale", o.K_init.scale);
        if (o.K_init.kind == KInitKind::matrix) o.K_init.matrix = k.matrix("matrix");
        else k.ignore("matrix");
        k.finish();
    } else {
        s.ignore("K_init");
    }

    o.damping = s.number("damping", o.damping);
    if (!(o.damping > 0.0 && o.damping <= 1.0)) throw ConfigError("'observer.damping' must lie in (0, 1]");
    s.finish();
    return o;
}

void validate(const ExperimentConfig& c) {
    const SystemModel system = builtin_system(c.system_id, c.system_params);
    const int n = system.n();
    const int N = c.window_n ? *c.window_n : natural_window(system);
    // Constructing the window rejects non-square maps.
    const ObservabilityWindow window(system, N, {});
    if (c.horizon < N) {
        throw ConfigError("horizon (" + std::to_string(c.horizon) + ") must be at least the window length N = " +
                          std::to_string(N));
    }
    if (c.truth_x0.size() != n) throw ConfigError("'truth_x0' must have length n = " + std::to_string(n));
    c.region.validate(n);
    const auto& w = c.observer.w_init;
    if (w.value && w.value->size() != n) throw ConfigError("'observer.w_init.value' must have length n");
    if (w.offset.size() != n) throw ConfigError("'observer.w_init.offset' must have length n");
    const auto& K = c.observer.K_init;
    if (K.kind == KInitKind::matrix && (K.matrix.rows() != n || K.matrix.cols() != n)) {
        throw ConfigError("'observer.K_init.matrix' must be n x n");
    }
}

ordered_json parse_document(std::string_view json_text) {
    try {
        return ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

ExperimentConfig parse_document_config(const ordered_json& doc) {
    Section root(doc, "");
    ExperimentConfig c;

    Section sys = root.child("system");
    c.system_id = sys.string("id");
    if (sys.has("params")) {
        const auto& params = sys.raw("params");
        if (!params.is_object()) throw ConfigError("'system.params' must be an object");
        for (const auto& item : params.items()) {
            if (!item.value().is_number()) throw ConfigError("'system.params." + item.key() + "' must be a number");
            c.system_params[item.key()] = item.value().get<double>();
        }
    } else {
        sys.ignore("params");
    }
    sys.finish();

    if (root.has("window_n")) {
        const auto N = root.integer("window_n");
        if (N < 1 || N > 1000) throw ConfigError("'window_n' must be in [1, 1000]");
        c.window_n = static_cast<int>(N);
    } else {
        root.ignore("window_n");
    }

    const auto horizon = root.integer("horizon");
    if (horizon < 1 || horizon > 10000000) throw ConfigError("'horizon' must be in [1, 1e7]");
    c.horizon = static_cast<int>(horizon);
    c.truth_x0 = root.vector("truth_x0");

    c.seed = root.has("seed") ? root.unsigned_integer("seed") : 0;
    if (!root.has("seed")) root.ignore("seed");

    Section region = root.child("region");
    c.region.lower = region.vector("lower");
    c.region.upper = region.vector("upper");
    if (region.has("samples")) {
        const auto s = region.integer("samples");
        if (s < 1 || s > 1000000) throw ConfigError("'region.samples' must be in [1, 1e6]");
        c.region.samples = static_cast<int>(s);
    } else {
        region.ignore("samples");
    }
    c.region.seed = region.has("seed") ? region.unsigned_integer("seed") : c.seed;
    if (!region.has("seed")) region.ignore("seed");
    region.finish();

    c.observer = parse_observer(root.child("observer"));

    if (root.has("audit")) {
        Section a = root.child("audit");
        c.audit.mu = a.optional_number("mu");
        c.audit.varrho = a.optional_number("varrho");
        c.audit.D2 = a.optional_number("D2");
        c.audit.delta_bar = a.optional_number("delta_bar");
        c.audit.beta_margin = a.number("beta_margin", c.audit.beta_margin);
        if (!(c.audit.beta_margin > 0.0)) throw ConfigError("'audit.beta_margin' must be > 0");
        a.finish();
    } else {
        root.ignore("audit");
    }

    c.outputs = root.has("outputs") ? root.string("outputs") : std::string{};
    if (c.outputs.empty()) root.ignore("outputs");

    if (root.has("formats")) {
        const auto& f = root.raw("formats");
        if (!f.is_array()) throw ConfigError("'formats' must be an array");
        c.formats.clear();
        for (const auto& item : f) {
            if (!item.is_string() || (item != "csv" && item != "json")) {
                throw ConfigError("'formats' entries must be \"csv\" or \"json\"");
            }
            c.formats.push_back(item.get<std::string>());
        }
    } else {
        root.ignore("formats");
    }

    root.ignore("sweep");
    root.finish();

    if (c.observer.w_init.offset.size() == 0) c.observer.w_init.offset = Vector::Zero(c.truth_x0.size());
    validate(c);
    return c;
}

std::string label_value(const ordered_json& v) {
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

}  // namespace

bool ExperimentConfig::wants(std::string_view format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
    return parse_document_config(parse_document(json_text));
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(read_text_file(path));
}

std::vector<SweepPoint> expand_sweep(std::string_view json_text) {
    ordered_json doc = parse_document(json_text);
    if (!doc.is_object() || !doc.contains("sweep")) {
        return {SweepPoint{"base", parse_document_config(doc)}};
    }
    const ordered_json sweep = doc["sweep"];
    doc.erase("sweep");
    if (!sweep.is_object() || sweep.empty()) throw ConfigError("'sweep' must be a non-empty object");

    std::vector<std::pair<nlohmann::json_pointer<std::string>, ordered_json>> axes;
    for (const auto& item : sweep.items()) {
        if (!item.value().is_array() || item.value().empty()) {
            throw ConfigError("sweep axis '" + item.key() + "' must be a non-empty array");
        }
        try {
            axes.emplace_back(nlohmann::json_pointer<std::string>(item.key()), item.value());
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("sweep axis '" + item.key() + "' is not a JSON pointer: " + e.what());
        }
    }

    std::size_t total = 1;
    for (const auto& axis : axes) {
        total *= axis.second.size();
        if (total > 100000) throw ConfigError("sweep expands to more than 100000 runs");
    }

    const std::filesystem::path base_out = doc.value("outputs", std::string{});
    std::vector<SweepPoint> points;
    points.reserve(total);
    for (std::size_t index = 0; index < total; ++index) {
        ordered_json point = doc;
        std::string label;
        std::size_t rest = index;
        // Last axis varies fastest.
        std::vector<std::size_t> picks(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            picks[a] = rest % axes[a].second.size();
            rest /= axes[a].second.size();
        }
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const auto& value = axes[a].second[picks[a]];
            try {
                point[axes[a].first] = value;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("cannot apply sweep axis '" + axes[a].first.to_string() + "': " + e.what());
            }
            if (!label.empty()) label += ',';
            label += axes[a].first.to_string() + "=" + label_value(value);
        }
        if (!base_out.empty()) {
            char name[32];
            std::snprintf(name, sizeof(name), "run_%04zu", index);
            point["outputs"] = (base_out / name).generic_string();
        }
        points.push_back({label, parse_document_config(point)});
    }
    return points;
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
    config.seed = seed;
    config.region.seed = seed;
}

const char* to_string(ObserverKind kind) {
    switch (kind) {
        case ObserverKind::ipg: return "ipg";
        case ObserverKind::ipg_beta: return "ipg_beta";
        case ObserverKind::newton: return "newton";
    }
    return "unknown";
}

}  // namespace ipgobs
