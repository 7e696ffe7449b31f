#include <doctest.h>

#include "plsim/env_checks.hpp"
#include "plsim/settings.hpp"

using namespace plsim;
using namespace plsim::settings;

namespace {

ExecutionTrace skeleton(Timeslot d, StakeState s0, int players) {
    ExecutionTrace tr;
    tr.config.delta = 2;
    tr.config.duration = d;
    tr.stake0 = std::move(s0);
    for (int i = 0; i < players; ++i) {
        PlayerInfo info;
        info.name = "p" + std::to_string(i);
        info.identifiers = {"p" + std::to_string(i)};
        tr.players.push_back(info);
        tr.protocol_inputs.push_back(-1);
        tr.activity.emplace_back(static_cast<std::size_t>(d) + 2, Activity::Active);
        tr.activity.back()[0] = Activity::Inactive;
    }
    return tr;
}

void deactivate(ExecutionTrace& tr, PlayerIdx p, Timeslot from, Timeslot to) {
    for (Timeslot t = from; t <= to; ++t)
        tr.activity[p][static_cast<std::size_t>(t)] = Activity::Inactive;
}

} // namespace

TEST_CASE("dynamically available: one active stakeholder suffices") {
    auto s = StakeState{{{"p0", 1}, {"p1", 1}}};
    auto tr = skeleton(10, s, 3); // p2 unstaked observer
    tr.players[2].identifiers = {"p2"};
    deactivate(tr, 1, 1, 10); // p1 never active; p0 carries the setting
    CHECK(check_dynamically_available(tr).pass);
    // Now both stakeholders nap at t=5 while the observer stays active.
    deactivate(tr, 0, 5, 5);
    CHECK(!check_dynamically_available(tr).pass);
}

TEST_CASE("quasi-permissionless: every staked honest player must be active") {
    auto s = StakeState{{{"p0", 1}, {"p1", 1}}};
    auto tr = skeleton(10, s, 2);
    CHECK(check_quasi_permissionless(tr, OnChainResources{}).pass);
    // Waiting still counts as active.
    tr.activity[1][4] = Activity::Waiting;
    CHECK(check_quasi_permissionless(tr, OnChainResources{}).pass);
    deactivate(tr, 1, 6, 6);
    CHECK(!check_quasi_permissionless(tr, OnChainResources{}).pass);
    // The hierarchy: the same trace still satisfies dynamic availability.
    CHECK(check_dynamically_available(tr).pass);
}

TEST_CASE("rho-bounded execution: active-stake shares") {
    auto s = StakeState{{{"p0", 1}, {"p1", 1}, {"p2", 1}}};
    auto tr = skeleton(10, s, 3);
    tr.players[0].initially_byzantine = true;
    CHECK(check_rho_bounded_execution(tr, {1, 3}).pass); // 1/3 exactly
    CHECK(!check_rho_bounded_execution(tr, {1, 4}).pass);
    // Deactivating an honest stakeholder raises the byzantine active share.
    deactivate(tr, 1, 5, 5);
    CHECK(!check_rho_bounded_execution(tr, {1, 3}).pass);
}

TEST_CASE("reactive: stake-only is vacuous") {
    auto s = StakeState{{{"p0", 1}}};
    auto tr = skeleton(10, s, 1);
    CHECK(check_reactive(tr, 2, OnChainResources{}).pass);
}

TEST_CASE("env checks on scripted traces") {
    auto s = StakeState{{{"p0", 1}, {"p1", 1}, {"p2", 1}, {"p3", 1}}};
    auto tr = skeleton(10, s, 4);
    tr.config.rho = {1, 3};
    tr.players[0].initially_byzantine = true;
    // Honest p1 transfers to honest p2, prerequisite-free, issued to p1.
    auto t1 = transfer_tx(s, TxSet{}, "p1", "p2", 1, "t1");
    tr.env_injections.push_back({2, 1, t1});
    tr.confirm_snapshots.push_back({1, 1, TxSet{}});
    auto ok = env_is_rho_bounded(tr, {1, 3});
    CHECK(ok.holds);
    auto okm = env_is_maximally_rho_bounded(tr, {1, 3}, 10);
    CHECK(okm.holds);

    // A dependent transaction issued before its prerequisite confirms.
    auto t2 = make_tx("t2", {UtxoRef{"t1", 0}}, {TxOutput{"p3", 1}});
    tr.env_injections.push_back({3, 2, t2});
    CHECK(!env_is_rho_bounded(tr, {1, 3}).holds);

    // First sent only to the byzantine player: not maximally bounded.
    auto tr2 = skeleton(10, s, 4);
    tr2.players[0].initially_byzantine = true;
    auto t3 = transfer_tx(s, TxSet{}, "p1", "p0", 1, "t3");
    tr2.env_injections.push_back({2, 0, t3});
    CHECK(!env_is_maximally_rho_bounded(tr2, {1, 3}, 10).holds);
}
