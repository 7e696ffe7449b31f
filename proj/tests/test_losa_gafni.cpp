#include <doctest.h>

#include "plsim/losa_gafni.hpp"

using namespace plsim;
using namespace plsim::lg;

namespace {

StakeState coins_n(int n) {
    std::map<Identifier, Stake> init;
    for (int i = 0; i < n; ++i) init["p" + std::to_string(i)] = 1;
    return StakeState{init};
}

BaParams params_for(const StakeState& s, const Identifier& id, int input) {
    BaParams p{CoinLedger{s}};
    p.delta = 2;
    p.my_coins = p.ledger.coins_of.at(id);
    p.input = input;
    return p;
}

ExecutionSetup ba_setup(const StakeState& s, std::map<Identifier, int> inputs, Timeslot duration,
                        std::uint64_t seed) {
    ExecutionSetup setup;
    setup.config.delta = 2;
    setup.config.duration = duration;
    setup.config.seed = seed;
    setup.stake0 = s;
    setup.authenticated = false; // the unauthenticated setting
    setup.players_know_time = true;
    for (const auto& [id, stake] : s.initial()) {
        PlayerSetup ps;
        ps.info.name = id;
        ps.info.identifiers = {id};
        ps.behavior = std::make_shared<BaBehavior>(params_for(s, id, inputs.at(id)));
        ps.activity = [](Timeslot) { return Activity::Active; };
        ps.protocol_input = inputs.at(id);
        setup.players.push_back(std::move(ps));
    }
    return setup;
}

} // namespace

TEST_CASE("round step: round-1 expansion") {
    auto s2 = StakeState{{{"a", 2}, {"b", 1}, {"c", 1}}};
    auto p2 = params_for(s2, "a", 1);
    REQUIRE(p2.my_coins == std::vector<int>{1, 2});

    BaView view;
    std::array<bool, 2> attested{false, false};
    auto msgs = ba_round_step(p2, 1, view, attested);
    // (1,1,active), (2,1,active), (1,1,1), (2,1,1)
    REQUIRE(msgs.size() == 4);
    CHECK(attested[1]);
    CHECK(!attested[0]);
    int acts = 0, atts = 0;
    for (const auto& m : msgs) {
        if (wire::decode_activity(m[0])) ++acts;
        if (auto a = wire::decode_attestation(m[0])) {
            ++atts;
            CHECK(a->bit == 1);
            CHECK(a->length() == 1);
        }
    }
    CHECK(acts == 2);
    CHECK(atts == 2);
}

TEST_CASE("round step: once-per-bit rule") {
    auto s = coins_n(4);
    auto p = params_for(s, "p1", 0);
    BaView view;
    std::array<bool, 2> attested{true, false}; // already attested to 0
    Attestation base;
    base.coins = {1};
    base.bit = 0;
    view.attestations.push_back(base);
    auto msgs = ba_round_step(p, 2, view, attested);
    // Only activity, since the one pending attestation is to an
    // already-attested bit.
    for (const auto& m : msgs) CHECK(wire::decode_activity(m[0]).has_value());
}

TEST_CASE("round step: no activity after the final round") {
    auto s = coins_n(4); // N*=3
    auto p = params_for(s, "p0", 0);
    BaView view;
    std::array<bool, 2> attested{false, false};
    CHECK(ba_round_step(p, p.ledger.final_round() + 1, view, attested).empty());
}

TEST_CASE("attestation extension skips own coins already present") {
    auto s = StakeState{{{"a", 2}, {"b", 1}, {"c", 1}}};
    auto p = params_for(s, "a", 0);
    BaView view;
    Attestation base;
    base.coins = {1}; // a's first coin
    base.bit = 1;
    view.attestations.push_back(base);
    std::array<bool, 2> attested{true, false};
    auto msgs = ba_round_step(p, 2, view, attested);
    int extensions = 0;
    for (const auto& m : msgs) {
        if (auto a = wire::decode_attestation(m[0])) {
            ++extensions;
            CHECK(a->length() == 2);
            CHECK(a->outer_coin() == 2); // only the coin not already inside
        }
    }
    CHECK(extensions == 1);
}

TEST_CASE("convinced: unanimity, boundary, and V-vs-A membership") {
    auto s = coins_n(4);
    CoinLedger ledger{s};
    const int n_star = ledger.final_round();

    BaView unanimous;
    for (int c = 1; c <= 4; ++c) {
        unanimous.active_coins[1].insert(c);
        Attestation a;
        a.coins = {c};
        a.bit = 1;
        unanimous.attestations.push_back(a);
    }
    CHECK(convinced(unanimous, 1, n_star));
    CHECK(!convinced(unanimous, 0, n_star));
    CHECK(ba_output(unanimous, n_star) == 1);

    BaView half;
    for (int c = 1; c <= 4; ++c) half.active_coins[1].insert(c);
    for (int c = 1; c <= 2; ++c) {
        Attestation a;
        a.coins = {c};
        a.bit = 1;
        half.attestations.push_back(a);
    }
    CHECK(!convinced(half, 1, n_star)); // exactly half is not a strict majority

    // A coin can appear in V_{2,b} via a length-2 attestation while absent
    // from A_2.
    BaView crossed;
    crossed.active_coins[2] = {2, 3, 4};
    Attestation deep;
    deep.coins = {3, 1}; // outer coin 3, extending coin 1's attestation
    deep.bit = 1;
    crossed.attestations.push_back(deep);
    Attestation own3;
    own3.coins = {4, 1};
    own3.bit = 1;
    crossed.attestations.push_back(own3);
    // V_{2,1} = {3, 4}; A_2 = {2,3,4}; overlap 2 of 3 : strict majority.
    CHECK(convinced(crossed, 1, n_star));

    // Convinced of both (or neither) falls back to the default 0.
    BaView both = unanimous;
    for (int c = 1; c <= 4; ++c) {
        Attestation a;
        a.coins = {c};
        a.bit = 0;
        both.attestations.push_back(a);
    }
    CHECK(ba_output(both, n_star) == 0);
    BaView neither;
    CHECK(ba_output(neither, n_star) == 0);
}

TEST_CASE("all-honest runs agree and satisfy validity") {
    for (int n : {4, 5}) {
        auto s = coins_n(n);
        std::map<Identifier, int> inputs;
        int i = 0;
        for (const auto& [id, st] : s.initial()) inputs[id] = (i++ % 2);
        CoinLedger ledger{s};
        Timeslot horizon = (ledger.final_round() + 2) * 2;
        auto trace = run_execution(ba_setup(s, inputs, horizon, 77));
        REQUIRE(trace.outputs.size() == static_cast<std::size_t>(n));
        int first = trace.outputs[0].value;
        for (const auto& o : trace.outputs) CHECK(o.value == first);
    }
    // Unanimous inputs force that output.
    auto s = coins_n(5);
    std::map<Identifier, int> ones;
    for (const auto& [id, st] : s.initial()) ones[id] = 1;
    CoinLedger ledger{s};
    auto trace = run_execution(ba_setup(s, ones, (ledger.final_round() + 2) * 2, 3));
    for (const auto& o : trace.outputs) CHECK(o.value == 1);
}

TEST_CASE("crash and delay faults below one half leave agreement intact") {
    auto s = coins_n(5);
    std::map<Identifier, int> inputs{{"p0", 1}, {"p1", 0}, {"p2", 1}, {"p3", 0}, {"p4", 1}};
    CoinLedger ledger{s};
    Timeslot horizon = (ledger.final_round() + 4) * 2;

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto setup = ba_setup(s, inputs, horizon, seed);
        // Two faulty coins of five: one crashes, one delays.
        KeyedRng rng(seed, "fault");
        BaParams pc = params_for(s, "p0", inputs["p0"]);
        pc.crash_at_round = 1 + static_cast<int>(rng.next_below(ledger.final_round()));
        setup.players[0].behavior = std::make_shared<BaBehavior>(pc);
        BaParams pd = params_for(s, "p1", inputs["p1"]);
        for (int r = 1; r <= ledger.final_round(); ++r)
            pd.delay_by_round[r] = static_cast<Timeslot>(rng.next_below(5));
        setup.players[1].behavior = std::make_shared<BaBehavior>(pd);

        auto trace = run_execution(std::move(setup));
        // All honest players (p2..p4) output the same value.
        std::optional<int> agreed;
        for (const auto& o : trace.outputs) {
            if (o.player < 2) continue;
            if (!agreed) agreed = o.value;
            CHECK(*agreed == o.value);
        }
        CHECK(agreed.has_value());
    }
}
