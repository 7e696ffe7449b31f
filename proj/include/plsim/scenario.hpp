#pragma once

#include "plsim/engine.hpp"
#include "plsim/settings.hpp"
#include "plsim/trace.hpp"
#include "plsim/verdicts.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace plsim::scen {

// A named, parameterized reproduction of one execution family: builds its
// instances, runs them, and adjudicates every relevant property. Outcomes
// carry the traces so suites can run further cross-instance assertions.

struct ScenarioOutcome {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<verdicts::Verdict> verdicts;
    std::map<std::string, ExecutionTrace> traces;

    void add(verdicts::Verdict v) { verdicts.push_back(std::move(v)); }
    void assert_that(const std::string& property, bool ok, const std::string& witness = {}) {
        verdicts::Verdict v;
        v.property = property;
        v.pass = ok;
        if (!ok) v.witness = witness;
        verdicts.push_back(std::move(v));
    }

    const verdicts::Verdict* find(const std::string& property) const {
        for (const auto& v : verdicts)
            if (v.property == property) return &v;
        return nullptr;
    }
};

struct Expectation {
    std::string property;
    bool expect_pass = true;
};

struct ScenarioSpec {
    std::string name;
    std::string summary;
    std::map<std::string, std::string> params;
    std::vector<Expectation> expected;
    std::function<ScenarioOutcome(std::uint64_t seed)> run;
};

// Did every expected property resolve the expected way?
struct MatchResult {
    bool ok = true;
    std::string detail;
};

inline MatchResult matches(const ScenarioOutcome& outcome, const std::vector<Expectation>& exp) {
    MatchResult r;
    for (const auto& e : exp) {
        const verdicts::Verdict* v = outcome.find(e.property);
        if (!v) {
            r.ok = false;
            r.detail += e.property + ": missing; ";
            continue;
        }
        if (v->pass != e.expect_pass) {
            r.ok = false;
            r.detail += e.property + ": expected " + (e.expect_pass ? "pass" : "fail") + ", got " +
                        (v->pass ? "pass" : "fail") + " (" + v->witness + "); ";
        }
    }
    return r;
}

// --- setup helpers ----------------------------------------------------------

inline PlayerSetup make_player(std::string name, std::vector<Identifier> ids,
                               std::shared_ptr<Behavior> behavior,
                               std::function<Activity(Timeslot)> activity =
                                   [](Timeslot) { return Activity::Active; },
                               bool byzantine = false, int input = -1) {
    PlayerSetup ps;
    ps.info.name = std::move(name);
    ps.info.identifiers = std::move(ids);
    ps.info.initially_byzantine = byzantine;
    ps.behavior = std::move(behavior);
    ps.activity = std::move(activity);
    ps.protocol_input = input;
    return ps;
}

// Timing rule scripted as a function; returns nullopt for never-delivered.
class FnTimingRule final : public TimingRule {
public:
    using Fn = std::function<std::optional<Timeslot>(PlayerIdx, PlayerIdx,
                                                     const DisseminationEvent&, KeyedRng&)>;
    explicit FnTimingRule(Fn fn) : fn_(std::move(fn)) {}
    std::optional<Timeslot> deliver_at(PlayerIdx from, PlayerIdx to, const DisseminationEvent& d,
                                       const ExecutionConfig&, KeyedRng& rng) override {
        return fn_(from, to, d, rng);
    }

private:
    Fn fn_;
};

// Prefix indistinguishability for a player between two instances.
inline bool same_view_prefix(const ExecutionTrace& a, const ExecutionTrace& b, PlayerIdx p,
                             Timeslot through) {
    return view_prefix_digest(a, p, through) == view_prefix_digest(b, p, through);
}

} // namespace plsim::scen
