#include <catch2/catch_amalgamated.hpp>

#include "bjlab/config.hpp"
#include "bjlab/report.hpp"

using namespace bjlab;
using Catch::Approx;

namespace {

const char* kMinimalAmo = R"(
[spec]
l = 1
lambda = 10
omega = goldenmean
annulus_r = 0.1
W = 0 1 1 1 0
F = 1 1 1 1 0
F = -1 1 1 1 0

[campaign]
N = 8
seed = 7
)";

}  // namespace

TEST_CASE("minimal AMO config loads") {
    ConfigResult r = parse_config_text(kMinimalAmo);
    REQUIRE(r.ok());
    const CampaignConfig& cfg = *r.config;
    REQUIRE(cfg.l == 1);
    REQUIRE(cfg.lambda == 10.0);
    REQUIRE(cfg.omega == Approx(golden_mean));
    REQUIRE(cfg.N == 8);
    REQUIRE(cfg.seed == 7);
    REQUIRE(cfg.spec.has_value());
    REQUIRE(cfg.spec->F.eval_torus(0.0)(0, 0) == Approx(2.0));
    REQUIRE(cfg.spec->W.eval_torus(0.3)(0, 0) == Approx(1.0));
}

TEST_CASE("zero coupling is rejected with a clear message") {
    std::string text = kMinimalAmo;
    text.replace(text.find("lambda = 10"), 11, "lambda = 0 ");
    ConfigResult r = parse_config_text(text);
    REQUIRE_FALSE(r.ok());
    bool mentioned = false;
    for (const auto& e : r.errors)
        if (e.find("nonzero") != std::string::npos) mentioned = true;
    REQUIRE(mentioned);
}

TEST_CASE("unknown keys are rejected by name") {
    std::string text = std::string(kMinimalAmo) + "banana = 3\n";
    ConfigResult r = parse_config_text(text);
    REQUIRE_FALSE(r.ok());
    bool mentioned = false;
    for (const auto& e : r.errors)
        if (e.find("banana") != std::string::npos) mentioned = true;
    REQUIRE(mentioned);
}

TEST_CASE("reality violations in Fourier tables are rejected") {
    std::string text = kMinimalAmo;
    // drop the conjugate partner
    text.replace(text.find("F = -1 1 1 1 0"), 14, "              ");
    ConfigResult r = parse_config_text(text);
    REQUIRE_FALSE(r.ok());
}

TEST_CASE("errors are collected, not fail-fast") {
    std::string text = R"(
[spec]
l = 1
lambda = 0
omega = nonsense
annulus_r = 7
mystery = 1
)";
    ConfigResult r = parse_config_text(text);
    REQUIRE_FALSE(r.ok());
    REQUIRE(r.errors.size() >= 4);
}

TEST_CASE("duplicate Fourier entries are rejected") {
    std::string text = std::string(kMinimalAmo) + "\n[spec]\nF = 1 1 1 0.5 0\n";
    ConfigResult r = parse_config_text(text);
    REQUIRE_FALSE(r.ok());
}

TEST_CASE("campaign validation covers module preconditions") {
    std::string text = std::string(kMinimalAmo) + "quadrature = 300\nhorizon = 2000000\n";
    ConfigResult r = parse_config_text(text);
    REQUIRE_FALSE(r.ok());
    REQUIRE(r.errors.size() == 2);
}

TEST_CASE("config digest is stable and content-sensitive") {
    ConfigResult a = parse_config_text(kMinimalAmo);
    ConfigResult b = parse_config_text(kMinimalAmo);
    REQUIRE(a.config->digest == b.config->digest);
    ConfigResult c = parse_config_text(std::string(kMinimalAmo) + "# trailing comment\n");
    REQUIRE(a.config->digest != c.config->digest);
}

TEST_CASE("l=2 table round trip") {
    const char* text = R"(
[spec]
l = 2
lambda = 20
omega = 0.37
annulus_r = 0.05
W = 0 1 1 1 0
W = 0 2 2 1 0
R = 0 1 2 1 0
R = 0 2 1 1 0
F = 1 1 1 1 0
F = -1 1 1 1 0
F = 1 2 2 -0.30901699437494734 0.9510565162951536
F = -1 2 2 -0.30901699437494734 -0.9510565162951536
)";
    ConfigResult r = parse_config_text(text);
    REQUIRE(r.ok());
    const OperatorSpec& spec = *r.config->spec;
    REQUIRE(spec.l == 2);
    Mat f0 = spec.F.eval_torus(0.0);
    REQUIRE(f0(0, 0) == Approx(2.0));
    REQUIRE(f0(1, 1) == Approx(2.0 * std::cos(two_pi * 0.3)).margin(1e-12));
    Mat r0 = spec.R.eval_torus(0.2);
    REQUIRE(r0(0, 1) == Approx(1.0));
}

TEST_CASE("report json embeds verdict, thresholds and provenance") {
    BoundReport rep;
    rep.campaign = "unit";
    rep.verdict = Verdict::Warn;
    rep.summary["value"] = 1.5;
    rep.thresholds["value_max"] = 2.0;
    rep.config_digest = "deadbeefdeadbeef";
    rep.seed = 99;
    nlohmann::json j = rep.to_json();
    REQUIRE(j["verdict"] == "WARN");
    REQUIRE(j["summary"]["value"] == 1.5);
    REQUIRE(j["thresholds"]["value_max"] == 2.0);
    REQUIRE(j["provenance"]["config_digest"] == "deadbeefdeadbeef");
    REQUIRE(j["provenance"]["seed"] == 99);
    REQUIRE(j["provenance"]["version"] == version);

    // identical content serializes identically
    BoundReport rep2 = rep;
    REQUIRE(rep.to_json().dump(2) == rep2.to_json().dump(2));
}

TEST_CASE("csv table renders rows in order") {
    CsvTable t;
    t.header = {"a", "b"};
    t.rows = {{"1", "2"}, {"3", "4"}};
    REQUIRE(t.to_string() == "a,b\n1,2\n3,4\n");
}

TEST_CASE("fnv digest matches a known vector") {
    REQUIRE(fnv1a_digest("") == "cbf29ce484222325");
    REQUIRE(fnv1a_digest("a") == "af63dc4c8601ec8c");
}
