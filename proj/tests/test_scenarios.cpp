#include <doctest.h>

#include "plsim/scenarios.hpp"

using namespace plsim;
using namespace plsim::scen;

namespace {

void expect_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    auto outcome = spec.run(seed);
    auto match = matches(outcome, spec.expected);
    CAPTURE(spec.name);
    CAPTURE(seed);
    CAPTURE(match.detail);
    CHECK(match.ok);
}

} // namespace

TEST_CASE("partition") { expect_scenario(scenario_partition(), 1); }

TEST_CASE("responsiveness split") { expect_scenario(scenario_responsiveness_split(), 1); }

TEST_CASE("payment circle n=2..4") {
    for (int n = 2; n <= 4; ++n) expect_scenario(scenario_payment_circle(n), 1);
}

TEST_CASE("fresh churn") { expect_scenario(scenario_fresh_churn(), 1); }

TEST_CASE("committee reactivity") { expect_scenario(scenario_committee_reactivity(), 1); }

TEST_CASE("da agreement, faultless and faulty") {
    expect_scenario(scenario_positive_da(5, false), 2);
    expect_scenario(scenario_positive_da(5, true), 2);
}

TEST_CASE("qp staked quorum, honest synchronous") {
    expect_scenario(scenario_positive_qp(2, {1, 1}, 0, QpAdversary::None), 3);
}

TEST_CASE("qp staked quorum, withholding under partial synchrony") {
    expect_scenario(scenario_positive_qp(2, {1, 1}, 50, QpAdversary::Withhold), 4);
}

TEST_CASE("qp staked quorum, equivocation with drift") {
    expect_scenario(scenario_positive_qp(2, {1, 2}, 0, QpAdversary::Equivocate), 5);
}

TEST_CASE("responsive qp") { expect_scenario(scenario_responsive_qp(), 6); }

TEST_CASE("accountable fork") { expect_scenario(scenario_accountable_fork(), 7); }

TEST_CASE("long range, undefended and defended") {
    expect_scenario(scenario_long_range(false), 8);
    expect_scenario(scenario_long_range(true), 8);
}

TEST_CASE("split brain") { expect_scenario(scenario_split_brain(), 9); }
