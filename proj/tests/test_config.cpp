#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "mixdyn/config.hpp"
#include "mixdyn/errors.hpp"

using namespace mixdyn;

TEST_CASE("model documents round-trip through their canonical form") {
    for (const char* name : {"eurusd_2003.json", "two_component.json", "normal_mixture.json"}) {
        const auto a = load_model_config(fixtures::data(name));
        const auto text = model_config_json(a.spec, a.curve);
        const auto b = parse_model_config(text);
        CHECK(model_config_json(b.spec, b.curve) == text);
        CHECK(config_hash(a) == config_hash(b));
    }
}

TEST_CASE("piecewise vols and flat curves parse") {
    const auto c = parse_model_config(R"({"s0": 1.2, "weights": [0.5, 0.5],
        "vols": [0.1, {"pieces": [{"end": 1, "level": 0.2}, {"level": 0.3}]}],
        "curve": {"flat": {"domestic": 0.02, "foreign": 0.01}}})");
    CHECK(c.spec.variance_rate(1, 0.5) == doctest::Approx(0.04));
    CHECK(c.spec.variance_rate(1, 3.0) == doctest::Approx(0.09));
    CHECK(c.curve.integrated_carry(0, 2) == doctest::Approx(0.02));
}

TEST_CASE("hash distinguishes models") {
    const auto a = load_model_config(fixtures::data("eurusd_2003.json"));
    const auto b = load_model_config(fixtures::data("eurusd_2003_as_printed.json"));
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("malformed model documents are input errors") {
    const char* bad[] = {
        "{",
        "[]",
        R"({"schema": "other/9", "s0": 1, "weights": [1], "vols": [0.1], "curve": {"flat": {"domestic": 0, "foreign": 0}}})",
        R"({"s0": 1, "weights": [1], "vols": [0.1, 0.2], "curve": {"flat": {"domestic": 0, "foreign": 0}}})",
        R"({"s0": 1, "weights": [1], "vols": ["x"], "curve": {"flat": {"domestic": 0, "foreign": 0}}})",
        R"({"s0": 1, "weights": [0.5, 0.6], "vols": [0.1, 0.2], "curve": {"flat": {"domestic": 0, "foreign": 0}}})",
        R"({"s0": -1, "weights": [1], "vols": [0.1], "curve": {"flat": {"domestic": 0, "foreign": 0}}})",
        R"({"s0": 1, "weights": [1], "vols": [0.1]})",
        R"({"mode": "cubic", "s0": 1, "weights": [1], "vols": [0.1], "curve": {"flat": {"domestic": 0, "foreign": 0}}})",
    };
    for (const char* text : bad) CHECK_THROWS_AS(parse_model_config(text), InputError);
    CHECK_THROWS_AS(load_model_config("/nonexistent/model.json"), InputError);
}

TEST_CASE("quotes CSV") {
    const auto q = parse_quotes_csv("# smile\nK,T,implied_vol\n1.0,1,0.1\n 1.1 , 1 , 0.12\n");
    REQUIRE(q.size() == 2);
    CHECK(q[1].strike == 1.1);
    CHECK(q[1].maturity == 1.0);
    CHECK(q[1].implied_vol == 0.12);
    CHECK_THROWS_AS(parse_quotes_csv("T,K\n1,1\n"), InputError);
    CHECK_THROWS_AS(parse_quotes_csv("T,K,implied_vol\n1,abc,0.1\n"), InputError);
    CHECK_THROWS_AS(parse_quotes_csv("T,K,implied_vol\n1,1\n"), InputError);
    CHECK_THROWS_AS(parse_quotes_csv(""), InputError);
}
