#pragma once

#include "plsim/scenario.hpp"
#include "plsim/scenarios_basic.hpp"
#include "plsim/scenarios_hotstuff.hpp"

#include <vector>

namespace plsim::scen {

// Built-in scenario registry with default parameterizations; the CLI and
// the suite runner look scenarios up here.
inline std::vector<ScenarioSpec> builtin_scenarios() {
    std::vector<ScenarioSpec> out;
    out.push_back(scenario_partition());
    out.push_back(scenario_responsiveness_split());
    out.push_back(scenario_payment_circle(4));
    out.push_back(scenario_fresh_churn());
    out.push_back(scenario_committee_reactivity());
    out.push_back(scenario_positive_da(5, true));
    out.push_back(scenario_positive_qp());
    out.push_back(scenario_responsive_qp());
    out.push_back(scenario_accountable_fork());
    out.push_back(scenario_long_range(false));
    out.push_back(scenario_long_range(true));
    out.push_back(scenario_split_brain());
    return out;
}

inline const ScenarioSpec* find_scenario(const std::vector<ScenarioSpec>& all,
                                         const std::string& name) {
    for (const auto& s : all)
        if (s.name == name) return &s;
    return nullptr;
}

} // namespace plsim::scen
