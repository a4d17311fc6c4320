#include <filesystem>
#include <string>

#include "doctest.h"
#include "ipgobs/errors.hpp"
#include "ipgobs/experiment.hpp"
#include "ipgobs/serialize.hpp"
#include "json.hpp"

using namespace ipgobs;
using nlohmann::json;

namespace {

const std::filesystem::path kData = IPGOBS_TEST_DATA_DIR;

json base_doc() {
    return json::parse(R"({
      "system": {"id": "scalar_linear", "params": {"a": 0.5}},
      "horizon": 20,
      "truth_x0": [2.0],
      "seed": 3,
      "region": {"lower": [-3.0], "upper": [3.0], "samples": 50},
      "observer": {
        "kind": "ipg", "d": 2,
        "alpha": {"policy": "constant", "value": 0.5},
        "w_init": {"offset": [0.5]},
        "K_init": {"kind": "scaled_identity", "scale": 0.6}
      }
    })");
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ipgobs_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing fills defaults") {
    const auto c = parse_experiment_config(base_doc().dump());
    CHECK(c.system_id == "scalar_linear");
    CHECK(c.system_params.at("a") == 0.5);
    CHECK(c.horizon == 20);
    CHECK(c.region.samples == 50);
    CHECK(c.region.seed == 3);
    CHECK(c.observer.kind == ObserverKind::ipg);
    CHECK(c.observer.d == 2);
    CHECK(c.observer.delta_step == 1.0);
    CHECK(c.wants("csv"));
    CHECK(c.wants("json"));
    CHECK(c.outputs.empty());
}

TEST_CASE("config parsing is fail-closed") {
    auto doc = base_doc();
    doc["observer"]["gain"] = 1.0;
    CHECK_THROWS_WITH_AS(parse_experiment_config(doc.dump()), doctest::Contains("observer.gain"), ConfigError);

    doc = base_doc();
    doc["colour"] = "blue";
    CHECK_THROWS_AS(parse_experiment_config(doc.dump()), ConfigError);

    doc = base_doc();
    doc["system"]["id"] = "pendulum";
    CHECK_THROWS_WITH_AS(parse_experiment_config(doc.dump()), doctest::Contains("planar_linear"), ConfigError);

    doc = base_doc();
    doc["horizon"] = 0;
    CHECK_THROWS_AS(parse_experiment_config(doc.dump()), ConfigError);

    doc = base_doc();
    doc["truth_x0"] = json::array({1.0, 2.0});
    CHECK_THROWS_AS(parse_experiment_config(doc.dump()), ConfigError);

    doc = base_doc();
    doc["observer"]["alpha"]["policy"] = "theorem";
    CHECK_THROWS_AS(parse_experiment_config(doc.dump()), ConfigError);

    doc = base_doc();
    doc["formats"] = json::array({"xml"});
    CHECK_THROWS_AS(parse_experiment_config(doc.dump()), ConfigError);

    doc = base_doc();
    doc["observer"]["d"] = 1.5;
    CHECK_THROWS_AS(parse_experiment_config(doc.dump()), ConfigError);

    CHECK_THROWS_AS(parse_experiment_config("{ not json"), ConfigError);
}

TEST_CASE("horizon shorter than the window is rejected") {
    auto doc = base_doc();
    doc["system"] = {{"id", "planar_mild_nonlinear"}};
    doc["truth_x0"] = json::array({0.8, -0.5});
    doc["region"]["lower"] = json::array({-1.0, -1.0});
    doc["region"]["upper"] = json::array({1.0, 1.0});
    doc["observer"]["w_init"]["offset"] = json::array({0.1, 0.1});
    doc["horizon"] = 1;
    CHECK_THROWS_WITH_AS(parse_experiment_config(doc.dump()), doctest::Contains("window length"), ConfigError);
    doc["horizon"] = 2;
    CHECK_NOTHROW(parse_experiment_config(doc.dump()));
}

TEST_CASE("scalar linear pipeline passes its verdicts") {
    const auto result = run_experiment(parse_experiment_config(base_doc().dump()));
    CHECK(result.run.completed());
    REQUIRE_FALSE(result.verdicts.empty());
    for (const auto& v : result.verdicts) {
        CAPTURE(v.name);
        CAPTURE(v.detail);
        CHECK(v.pass);
    }
    REQUIRE(result.fitted_mu().has_value());
    CHECK(*result.fitted_mu() > 1.0);
    REQUIRE(result.rho.has_value());
    CHECK(result.rho->rho == doctest::Approx(0.5));
    REQUIRE(result.conditions.has_value());
    CHECK(result.truth.states.size() == 20);
}

TEST_CASE("beta shift rescues the indefinite system") {
    const auto plain = run_experiment(load_experiment_config(kData / "indefinite_plain.json"));
    const bool plain_failed = !plain.run.completed() || !(plain.rho && plain.rho->rho < 1.0);
    CHECK(plain_failed);

    const auto shifted = run_experiment(load_experiment_config(kData / "indefinite_beta.json"));
    CHECK(shifted.run.completed());
    REQUIRE(shifted.constants.beta_required.has_value());
    CHECK(shifted.beta == doctest::Approx(*shifted.constants.beta_required));
    CHECK(shifted.run.trace.estimate_errors().back() < 1e-6);
}

TEST_CASE("newton experiment") {
    auto doc = base_doc();
    doc["observer"] = {{"kind", "newton"}, {"d", 1}, {"w_init", {{"offset", {0.5}}}}};
    const auto r = run_experiment(parse_experiment_config(doc.dump()));
    CHECK(r.run.completed());
    CHECK_FALSE(r.rho.has_value());
    CHECK_FALSE(r.conditions.has_value());
    CHECK(r.all_pass());
}

TEST_CASE("artifacts follow the schema and are deterministic") {
    auto doc = base_doc();
    const auto dir = scratch("artifacts");
    doc["outputs"] = dir.string();
    const auto config = parse_experiment_config(doc.dump());
    run_experiment(config);
    const std::string trace1 = read_text_file(dir / "trace.csv");
    const std::string result1 = read_text_file(dir / "result.json");
    run_experiment(config);
    CHECK(read_text_file(dir / "trace.csv") == trace1);
    CHECK(read_text_file(dir / "result.json") == result1);

    CHECK(trace1.rfind("k,i,alpha,err_w,err_xhat,precond_residual,err_K\n", 0) == 0);
    const auto j = json::parse(result1);
    for (const char* key : {"L", "l", "gamma", "Lambda", "lambda_min", "eta", "L2"}) {
        CHECK(j["constants"].contains(key));
    }
    for (const char* key : {"rho", "rho_N", "mu", "varrho", "D2", "delta", "delta_bar", "d_min"}) {
        CHECK(j["conditions"].contains(key));
    }
    CHECK(j["verdicts"].is_array());
    CHECK(j["all_pass"] == true);
    CHECK(std::filesystem::exists(dir / "truth.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("formats restrict the artifacts") {
    auto doc = base_doc();
    const auto dir = scratch("formats");
    doc["outputs"] = dir.string();
    doc["formats"] = json::array({"json"});
    run_experiment(parse_experiment_config(doc.dump()));
    CHECK(std::filesystem::exists(dir / "result.json"));
    CHECK_FALSE(std::filesystem::exists(dir / "trace.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("divergent runs still write partial artifacts") {
    const auto dir = scratch("diverged");
    auto config = load_experiment_config(kData / "indefinite_plain.json");
    config.outputs = dir.string();
    const auto r = run_experiment(config);
    CHECK(r.run.status == RunStatus::diverged);
    const auto j = json::parse(read_text_file(dir / "result.json"));
    CHECK(j["status"] == "diverged");
    CHECK(j["failed_k"].is_number_integer());
    CHECK(read_text_file(dir / "trace.csv").size() > 100);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep expansion is a cartesian product") {
    auto doc = nlohmann::ordered_json::parse(base_doc().dump());
    doc["outputs"] = "sweep_out";
    doc["sweep"] = nlohmann::ordered_json::object();
    doc["sweep"]["/observer/d"] = {1, 2, 3};
    doc["sweep"]["/observer/alpha/value"] = {0.25, 0.5};
    const auto points = expand_sweep(doc.dump());
    REQUIRE(points.size() == 6);
    CHECK(points[0].config.observer.d == 1);
    CHECK(points[0].config.observer.alpha.value == 0.25);
    CHECK(points[1].config.observer.alpha.value == 0.5);
    CHECK(points[5].config.observer.d == 3);
    CHECK(points[5].label == "/observer/d=3,/observer/alpha/value=0.5");
    CHECK(points[2].config.outputs == "sweep_out/run_0002");

    doc["sweep"] = {{"/observer/bogus", {1}}};
    CHECK_THROWS_AS(expand_sweep(doc.dump()), ConfigError);
    doc["sweep"] = {{"/observer/d", nlohmann::ordered_json::array()}};
    CHECK_THROWS_AS(expand_sweep(doc.dump()), ConfigError);

    doc.erase("sweep");
    CHECK(expand_sweep(doc.dump()).size() == 1);
}

TEST_CASE("seed override reaches the region") {
    auto c = parse_experiment_config(base_doc().dump());
    override_seed(c, 77);
    CHECK(c.seed == 77);
    CHECK(c.region.seed == 77);
}

TEST_CASE("audit reports constants and conditions without a run") {
    const auto a = audit_experiment(load_experiment_config(kData / "planar_rate.json"));
    CHECK(a.constants.Lambda == doctest::Approx(1.0));
    CHECK(a.rho_prior == doctest::Approx(0.9));
    CHECK(a.conditions.condition("i").verdict == Verdict::pass);
    CHECK(a.conditions.condition("ii").verdict == Verdict::pass);
    CHECK(a.conditions.condition("iv").verdict == Verdict::unauditable);
}

TEST_CASE("report aggregates result files") {
    const auto dir = scratch("report");
    auto doc = base_doc();
    doc["outputs"] = (dir / "a").string();
    run_experiment(parse_experiment_config(doc.dump()));
    auto bad = json::parse(read_text_file(kData / "indefinite_plain.json"));
    bad["outputs"] = (dir / "b").string();
    run_experiment(parse_experiment_config(bad.dump()));

    const auto summary = aggregate_results(dir);
    CHECK(summary.runs == 2);
    CHECK(summary.passing == 1);
    const auto j = json::parse(summary.json);
    CHECK(j["results"][0]["path"] == "a");
    CHECK(j["results"][1]["status"] == "diverged");
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(aggregate_results(dir), ConfigError);
}
