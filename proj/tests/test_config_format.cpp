#include <doctest.h>

#include "plsim/config_format.hpp"
#include "plsim/trace_io.hpp"

#include <sstream>

using namespace plsim;

TEST_CASE("config parsing: sections, comments, repeated keys") {
    std::istringstream is(R"(# comment
version 1

[config]
delta = 4
kappa = 1/2

[environment]
inject = 1 a t1 a b 1
inject = 2 b t2 b c 1
)");
    auto parsed = fmt::parse_config(is);
    REQUIRE(std::holds_alternative<fmt::ConfigFile>(parsed));
    const auto& cfg = std::get<fmt::ConfigFile>(parsed);
    CHECK(cfg.version == 1);
    CHECK(cfg.get("config", "delta") == std::string("4"));
    CHECK(cfg.get_all("environment", "inject").size() == 2);
    CHECK(!cfg.get("config", "missing").has_value());
    auto r = fmt::parse_rational(*cfg.get("config", "kappa"));
    REQUIRE(r.has_value());
    CHECK(r->num == 1);
    CHECK(r->den == 2);
}

TEST_CASE("config parsing: errors carry line numbers") {
    {
        std::istringstream is("delta = 4\n");
        auto parsed = fmt::parse_config(is);
        REQUIRE(std::holds_alternative<fmt::ParseError>(parsed));
        CHECK(std::get<fmt::ParseError>(parsed).line == 1);
    }
    {
        std::istringstream is("version 1\n[config\ndelta = 4\n");
        auto parsed = fmt::parse_config(is);
        REQUIRE(std::holds_alternative<fmt::ParseError>(parsed));
        CHECK(std::get<fmt::ParseError>(parsed).line == 2);
    }
    {
        std::istringstream is("version 1\n[config]\nnonsense\n");
        auto parsed = fmt::parse_config(is);
        REQUIRE(std::holds_alternative<fmt::ParseError>(parsed));
        CHECK(std::get<fmt::ParseError>(parsed).line == 3);
    }
    {
        std::istringstream is("version 2\n");
        auto parsed = fmt::parse_config(is);
        REQUIRE(std::holds_alternative<fmt::ParseError>(parsed));
    }
}

TEST_CASE("scenario lookup from config") {
    std::istringstream is("version 1\n[scenario]\nname = payment-circle\nn = 3\n");
    auto parsed = fmt::parse_config(is);
    auto spec_or = fmt::scenario_from_config(std::get<fmt::ConfigFile>(parsed));
    REQUIRE(std::holds_alternative<scen::ScenarioSpec>(spec_or));
    const auto& spec = std::get<scen::ScenarioSpec>(spec_or);
    CHECK(spec.name == "payment-circle");
    auto outcome = spec.run(1);
    CHECK(scen::matches(outcome, spec.expected).ok);

    std::istringstream bad("version 1\n[scenario]\nname = nonexistent\n");
    auto parsed2 = fmt::parse_config(bad);
    auto spec2 = fmt::scenario_from_config(std::get<fmt::ConfigFile>(parsed2));
    CHECK(std::holds_alternative<fmt::ParseError>(spec2));
}

TEST_CASE("expect section overrides defaults") {
    std::istringstream is(
        "version 1\n[scenario]\nname = payment-circle\nn = 2\n[expect]\nfull-set-benign = pass\n");
    auto parsed = fmt::parse_config(is);
    auto spec_or = fmt::scenario_from_config(std::get<fmt::ConfigFile>(parsed));
    const auto& spec = std::get<scen::ScenarioSpec>(spec_or);
    REQUIRE(spec.expected.size() == 1);
    CHECK(spec.expected[0].property == "full-set-benign");
    CHECK(spec.expected[0].expect_pass);
}

TEST_CASE("trace round-trip preserves verdict-relevant content") {
    // Run a small staked-quorum scenario, save, load, and compare verdicts.
    auto spec = scen::scenario_positive_qp(2, {1, 1}, 0, scen::QpAdversary::None);
    auto outcome = spec.run(5);
    const auto& tr = outcome.traces.at("run");

    std::ostringstream os;
    trace_io::save_trace(tr, os);
    std::istringstream is(os.str());
    auto loaded = trace_io::load_trace(is);

    CHECK(loaded.trace_hash == tr.trace_hash);
    CHECK(loaded.player_count() == tr.player_count());
    CHECK(loaded.config.seed == tr.config.seed);

    auto v1 = verdicts::check_consistency(tr);
    auto v2 = verdicts::check_consistency(loaded);
    CHECK(v1.pass == v2.pass);
    Timeslot ell = (24 * 4 + 8) * 2;
    CHECK(verdicts::check_liveness(tr, ell).pass == verdicts::check_liveness(loaded, ell).pass);
    CHECK(settings::check_quasi_permissionless(tr, {}).pass ==
          settings::check_quasi_permissionless(loaded, {}).pass);
    CHECK(settings::check_dynamically_available(loaded).pass);
    CHECK(settings::check_rho_bounded_execution(loaded, {1, 3}).pass);

    // Activity and corruption metadata survive.
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        for (Timeslot t = 1; t <= tr.duration(); t += 7)
            CHECK(loaded.activity_at(p, t) == tr.activity_at(p, t));
    }
}

TEST_CASE("trace loader rejects malformed input") {
    std::istringstream empty("");
    CHECK_THROWS_AS(trace_io::load_trace(empty), trace_io::LoadError);
    std::istringstream garbage("not json\n");
    CHECK_THROWS_AS(trace_io::load_trace(garbage), trace_io::LoadError);
    std::istringstream headerless(R"({"event_kind":"output","t":1,"player":0,"value":1})"
                                  "\n");
    CHECK_THROWS_AS(trace_io::load_trace(headerless), trace_io::LoadError);
}
