#pragma once

#include "plsim/adversaries.hpp"
#include "plsim/baselines.hpp"
#include "plsim/env_checks.hpp"
#include "plsim/losa_gafni.hpp"
#include "plsim/permitters.hpp"
#include "plsim/scenario.hpp"

#include <algorithm>
#include <memory>
#include <string>

namespace plsim::scen {

// ---------------------------------------------------------------------------
// Partition: naive majority agreement splits under partial synchrony.
// ---------------------------------------------------------------------------

// Three instances over a two-sided player split. In the synchronous
// single-side instances the majority baseline decides the side's input; in
// the partitioned instance with GST beyond the decision point, the two
// sides decide differently and Agreement fails. The per-side views of the
// partitioned instance are mechanically indistinguishable from the
// single-side instances until GST.
inline ScenarioSpec scenario_partition(int n0 = 2, int n1 = 2) {
    ScenarioSpec spec;
    spec.name = "partition";
    spec.summary = "naive majority-vote agreement under a pre-GST network partition";
    spec.params = {{"n0", std::to_string(n0)}, {"n1", std::to_string(n1)}};
    spec.expected = {{"i1-outputs-zero", true},  {"i2-outputs-one", true},
                     {"i0-ba-agreement", false}, {"prefix-side0", true},
                     {"prefix-side1", true},     {"i0-dynamically-available", true},
                     {"i1-dynamically-available", true}, {"i1-quasi-permissionless", false},
                     {"timing-valid", true}};
    spec.run = [n0, n1, name = spec.name](std::uint64_t seed) {
        const int n = n0 + n1;
        const Timeslot delta = 2;
        const Timeslot decide_at = 4 * delta;
        const Timeslot gst0 = 10 * delta;
        std::map<Identifier, Stake> init;
        for (int i = 0; i < n; ++i) init["p" + std::to_string(i)] = 1;
        StakeState s0{init};

        auto build = [&](int instance) {
            ExecutionSetup setup;
            setup.config.delta = delta;
            setup.config.duration = instance == 0 ? gst0 + 4 : decide_at + 4;
            setup.config.gst = instance == 0 ? gst0 : 0;
            setup.config.seed = seed;
            setup.stake0 = s0;
            setup.players_know_time = true;
            for (int i = 0; i < n; ++i) {
                bool side0 = i < n0;
                int input = instance == 0 ? (side0 ? 0 : 1) : (instance == 1 ? 0 : 1);
                bool active = instance == 0 || (instance == 1 ? side0 : !side0);
                Identifier id = "p" + std::to_string(i);
                setup.players.push_back(make_player(
                    id, {id},
                    std::make_shared<baselines::MajorityVoteBa>(s0, std::vector<Identifier>{id},
                                                                input, decide_at),
                    [active](Timeslot) { return active ? Activity::Active : Activity::Inactive; },
                    false, input));
            }
            if (instance == 0) {
                setup.timing = std::make_shared<FnTimingRule>(
                    [n0, gst0](PlayerIdx from, PlayerIdx to, const DisseminationEvent& d,
                               KeyedRng&) -> std::optional<Timeslot> {
                        bool same_side = (from < static_cast<PlayerIdx>(n0)) ==
                                         (to < static_cast<PlayerIdx>(n0));
                        return same_side ? d.t + 1 : std::max(d.t + 1, gst0);
                    });
            }
            return setup;
        };

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["i0"] = run_execution(build(0));
        out.traces["i1"] = run_execution(build(1));
        out.traces["i2"] = run_execution(build(2));
        const auto& i0 = out.traces["i0"];
        const auto& i1 = out.traces["i1"];
        const auto& i2 = out.traces["i2"];

        bool all_zero = true, all_one = true;
        for (const auto& o : i1.outputs)
            if (o.player < static_cast<PlayerIdx>(n0) && o.value != 0) all_zero = false;
        for (const auto& o : i2.outputs)
            if (o.player >= static_cast<PlayerIdx>(n0) && o.value != 1) all_one = false;
        out.assert_that("i1-outputs-zero", all_zero);
        out.assert_that("i2-outputs-one", all_one);

        auto ba = verdicts::check_ba(i0);
        ba.agreement.property = "i0-ba-agreement";
        out.add(ba.agreement);

        bool pre0 = true, pre1 = true;
        for (PlayerIdx p = 0; p < static_cast<PlayerIdx>(n0); ++p)
            pre0 = pre0 && same_view_prefix(i0, i1, p, gst0 - 1);
        for (PlayerIdx p = static_cast<PlayerIdx>(n0); p < static_cast<PlayerIdx>(n0 + n1); ++p)
            pre1 = pre1 && same_view_prefix(i0, i2, p, gst0 - 1);
        out.assert_that("prefix-side0", pre0);
        out.assert_that("prefix-side1", pre1);

        auto da0 = settings::check_dynamically_available(i0);
        da0.property = "i0-dynamically-available";
        out.add(da0);
        auto da1 = settings::check_dynamically_available(i1);
        da1.property = "i1-dynamically-available";
        out.add(da1);
        auto qp1 = settings::check_quasi_permissionless(i1, settings::OnChainResources{});
        qp1.property = "i1-quasi-permissionless";
        out.add(qp1);

        out.assert_that("timing-valid", !validate_timing_rule(i0).has_value() &&
                                            !validate_timing_rule(i1).has_value() &&
                                            !validate_timing_rule(i2).has_value());
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Responsiveness split: a fast confirmer double-confirms under a delay split.
// ---------------------------------------------------------------------------

// Warm-up until delta*, then a two-sided activity/delay split with
// conflicting transactions injected at delta*+1. The fast-confirming
// baseline confirms each side's transaction at network speed in the
// single-side instances; in the split instance the sides confirm the
// conflicting pair before the cross-traffic lands.
inline ScenarioSpec scenario_responsiveness_split() {
    ScenarioSpec spec;
    spec.name = "responsiveness-split";
    spec.summary = "fast confirmation under a post-warmup delay split";
    spec.expected = {{"i0-confirms-tr0", true}, {"i1-confirms-tr1", true},
                     {"i2-consistency", false}, {"prefix-side0", true},
                     {"prefix-side1", true},    {"i0-dynamically-available", true}};
    spec.run = [name = spec.name](std::uint64_t seed) {
        const Timeslot delta = 12;
        const Timeslot warmup = delta;           // grace period
        const Timeslot d = warmup + 2 * delta;
        const int n0 = 2, n1 = 2, n = 4;
        std::map<Identifier, Stake> init;
        for (int i = 0; i < n; ++i) init["p" + std::to_string(i)] = 1;
        StakeState s0{init};
        auto tr0 = make_tx("tr0", {UtxoRef{std::string(kGenesisTxId) + ":p0", 0}},
                           {TxOutput{"p1", 1}});
        auto tr1 = make_tx("tr1", {UtxoRef{std::string(kGenesisTxId) + ":p0", 0}},
                           {TxOutput{"p2", 1}});

        auto build = [&](int instance) {
            ExecutionSetup setup;
            setup.config.delta = delta;
            setup.config.duration = d;
            setup.config.gst = 0;
            setup.config.seed = seed;
            setup.stake0 = s0;
            setup.players_know_time = false;
            for (int i = 0; i < n; ++i) {
                bool side0 = i < n0;
                bool active_late = instance == 2 || (instance == 0 ? side0 : !side0);
                Identifier id = "p" + std::to_string(i);
                setup.players.push_back(make_player(
                    id, {id}, std::make_shared<baselines::TimedConfirmer>(s0, 3),
                    [active_late, warmup](Timeslot t) {
                        return (t <= warmup || active_late) ? Activity::Active
                                                            : Activity::Inactive;
                    }));
            }
            auto env = std::make_shared<ScriptedEnvironment>();
            if (instance == 0 || instance == 2)
                for (int i = 0; i < n0; ++i) env->add(warmup + 1, i, tr0);
            if (instance == 1 || instance == 2)
                for (int i = n0; i < n; ++i) env->add(warmup + 1, i, tr1);
            setup.environment = env;
            setup.timing = std::make_shared<FnTimingRule>(
                [instance, warmup, delta, n0](PlayerIdx from, PlayerIdx to,
                                              const DisseminationEvent& ev,
                                              KeyedRng&) -> std::optional<Timeslot> {
                    if (ev.t <= warmup) return ev.t + 1;
                    bool same_side = (from < static_cast<PlayerIdx>(n0)) ==
                                     (to < static_cast<PlayerIdx>(n0));
                    if (same_side) return ev.t + 1;
                    return instance == 2 ? std::optional<Timeslot>(ev.t + delta) : std::nullopt;
                });
            return setup;
        };

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["i0"] = run_execution(build(0));
        out.traces["i1"] = run_execution(build(1));
        out.traces["i2"] = run_execution(build(2));
        const auto& i0 = out.traces["i0"];
        const auto& i1 = out.traces["i1"];
        const auto& i2 = out.traces["i2"];

        SnapshotIndex idx0(i0), idx1(i1);
        bool c0 = true, c1 = true;
        for (PlayerIdx p = 0; p < static_cast<PlayerIdx>(n0); ++p)
            c0 = c0 && idx0.at(p, warmup + delta).contains("tr0");
        for (PlayerIdx p = static_cast<PlayerIdx>(n0); p < static_cast<PlayerIdx>(n); ++p)
            c1 = c1 && idx1.at(p, warmup + delta).contains("tr1");
        out.assert_that("i0-confirms-tr0", c0);
        out.assert_that("i1-confirms-tr1", c1);

        auto cons = verdicts::check_consistency(i2);
        cons.property = "i2-consistency";
        out.add(cons);

        bool pre0 = true, pre1 = true;
        for (PlayerIdx p = 0; p < static_cast<PlayerIdx>(n0); ++p)
            pre0 = pre0 && same_view_prefix(i0, i2, p, warmup + delta);
        for (PlayerIdx p = static_cast<PlayerIdx>(n0); p < static_cast<PlayerIdx>(n); ++p)
            pre1 = pre1 && same_view_prefix(i1, i2, p, warmup + delta);
        out.assert_that("prefix-side0", pre0);
        out.assert_that("prefix-side1", pre1);

        auto da = settings::check_dynamically_available(i0);
        da.property = "i0-dynamically-available";
        out.add(da);
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Payment circle
// ---------------------------------------------------------------------------

// n players with one unit each; n rounds of circular one-unit transfers,
// each sent only to its spender, with p0 Byzantine and silent. The unique
// maximal valid set of honestly received transactions hands p0 the whole
// supply, even though the full transaction set is balance-neutral.
struct PaymentCircle {
    StakeState s0;
    std::vector<std::vector<TransactionPtr>> tx; // tx[i][r-1]
    TxSet all;
    TxSet adversarial; // first i transfers of each p_i

    static std::string pname(int i) { return "p" + std::to_string(i); }

    explicit PaymentCircle(int n) {
        std::map<Identifier, Stake> init;
        for (int i = 0; i < n; ++i) init[pname(i)] = 1;
        s0 = StakeState{init};
        tx.resize(static_cast<std::size_t>(n));
        for (int r = 1; r <= n; ++r) {
            for (int i = 0; i < n; ++i) {
                UtxoRef input =
                    r == 1 ? UtxoRef{std::string(kGenesisTxId) + ":" + pname(i), 0}
                           : UtxoRef{tx[static_cast<std::size_t>((i - 1 + n) % n)][r - 2]->tx_id, 0};
                auto t = make_tx("c" + std::to_string(i) + "r" + std::to_string(r), {input},
                                 {TxOutput{pname((i + 1) % n), 1}});
                tx[static_cast<std::size_t>(i)].push_back(t);
                all.insert(t);
            }
        }
        for (int i = 0; i < n; ++i)
            for (int r = 1; r <= i; ++r) adversarial.insert(tx[static_cast<std::size_t>(i)][r - 1]);
    }
};

inline ScenarioSpec scenario_payment_circle(int n = 4) {
    ScenarioSpec spec;
    spec.name = "payment-circle";
    spec.summary = "circular transfers whose maximal honest subset concentrates all stake";
    spec.params = {{"n", std::to_string(n)}};
    spec.expected = {{"t-prime-concentrates", true},
                     {"full-set-benign", true},
                     {"t-prime-unique-maximal", true},
                     {"env-maximally-rho-bounded", false},
                     {"env-rho-bounded", false}};
    spec.run = [n, name = spec.name](std::uint64_t seed) {
        PaymentCircle circle(n);
        ExecutionSetup setup;
        setup.config.delta = 2;
        setup.config.duration = n + 6;
        setup.config.seed = seed;
        setup.config.rho = {1, 4};
        setup.stake0 = circle.s0;
        setup.players_know_time = false;
        for (int i = 0; i < n; ++i) {
            bool byz = i == 0;
            auto behavior = byz ? std::shared_ptr<Behavior>(std::make_shared<adversaries::Silent>())
                                : std::shared_ptr<Behavior>(std::make_shared<baselines::TxGossip>());
            setup.players.push_back(make_player(PaymentCircle::pname(i),
                                                {PaymentCircle::pname(i)}, behavior,
                                                [](Timeslot) { return Activity::Active; }, byz));
        }
        auto env = std::make_shared<ScriptedEnvironment>();
        for (int r = 1; r <= n; ++r)
            for (int i = 0; i < n; ++i)
                env->add(r, static_cast<PlayerIdx>(i), circle.tx[static_cast<std::size_t>(i)][r - 1]);
        setup.environment = env;

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["run"] = run_execution(std::move(setup));
        const auto& tr = out.traces["run"];

        bool concentrated = is_valid_set(circle.adversarial, circle.s0) &&
                            stake(circle.s0, circle.adversarial, PaymentCircle::pname(0)) == n;
        for (int i = 1; i < n; ++i)
            concentrated =
                concentrated && stake(circle.s0, circle.adversarial, PaymentCircle::pname(i)) == 0;
        out.assert_that("t-prime-concentrates", concentrated);

        bool benign = is_valid_set(circle.all, circle.s0);
        for (int r = 1; r <= n && benign; ++r) {
            TxSet prefix;
            for (int i = 0; i < n; ++i)
                for (int rr = 1; rr <= r; ++rr)
                    prefix.insert(circle.tx[static_cast<std::size_t>(i)][rr - 1]);
            for (int i = 0; i < n; ++i)
                benign = benign && stake(circle.s0, prefix, PaymentCircle::pname(i)) == 1;
        }
        out.assert_that("full-set-benign", benign);

        // Brute-force oracle: the honestly received transactions (everything
        // except p0's own transfers) have a unique maximal valid subset, and
        // it is exactly the adversarial one.
        TxSet honest_received;
        for (const auto& e : tr.env_injections) {
            if (tr.honest_at(e.player, e.t)) honest_received.insert(e.tx);
        }
        auto maximal = maximal_valid_sets(honest_received, circle.s0, 40);
        bool unique = !maximal.refused && maximal.sets.size() == 1 &&
                      maximal.sets[0] == circle.adversarial;
        out.assert_that("t-prime-unique-maximal", unique);

        auto maxb = env_is_maximally_rho_bounded(tr, {1, 4}, tr.duration(), 40);
        out.assert_that("env-maximally-rho-bounded", maxb.holds, maxb.witness);
        auto rb = env_is_rho_bounded(tr, {1, 4});
        out.assert_that("env-rho-bounded", rb.holds, rb.witness);
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Fresh-player churn
// ---------------------------------------------------------------------------

// s fresh players from disjoint pools enter at every timeslot, flood one
// message, query one unit of the PoW permitter, and leave. Scripted crash
// and delayed-dissemination faults, at most one faulty entrant per slot,
// and a one-unit-per-entrant resource allocation that stays rho-bounded for
// s >= max(1/rho, 3).
inline ScenarioSpec scenario_fresh_churn(int s = 4, Timeslot horizon = 10) {
    ScenarioSpec spec;
    spec.name = "fresh-churn";
    spec.summary = "per-timeslot player churn with unit resource allocations";
    spec.params = {{"s", std::to_string(s)}, {"horizon", std::to_string(horizon)}};
    spec.expected = {{"allocation-rho-bounded", true}, {"honest-floods-once", true},
                     {"crash-missing-one", true},      {"delay-arrives-late", true},
                     {"budget-sound", true},           {"timing-valid", true}};
    spec.run = [s, horizon, name = spec.name](std::uint64_t seed) {
        auto build = [&](int mode) { // 0 honest, 1 one crash, 2 one delay
            // Entrants arrive at every timeslot through the horizon, keeping
            // every per-timeslot resource total at s (within [1, R_max]).
            ExecutionSetup setup;
            setup.config.delta = 2;
            setup.config.duration = horizon;
            setup.config.seed = seed;
            setup.config.rho = {1, 3};
            setup.config.r_max = s;
            setup.stake0 = StakeState{};
            setup.players_know_time = true;
            setup.oracles.push_back(std::make_shared<PowOracle>());
            auto spawn_slots = std::make_shared<std::vector<Timeslot>>();
            setup.resources["pow"] = ResourceAllocation{
                [spawn_slots](PlayerIdx p, Timeslot t) -> std::int64_t {
                    if (p >= spawn_slots->size()) return 0;
                    return (*spawn_slots)[p] == t ? 1 : 0;
                }};
            setup.spawner = [s, horizon, mode, spawn_slots](Timeslot t) {
                std::vector<PlayerSetup> out;
                if (t > horizon) return out;
                for (int k = 0; k < s; ++k) {
                    Identifier id = "pool" + std::to_string(k) + "_t" + std::to_string(t);
                    bool crash = mode == 1 && t == 3 && k == 0;
                    Timeslot delay = (mode == 2 && t == 4 && k == 1) ? 2 : 0;
                    bool byz = crash || delay > 0;
                    Timeslot exit = t + delay;
                    PlayerSetup ps = make_player(
                        id, {id},
                        std::make_shared<baselines::FloodOnce>(id, "pow", crash, delay),
                        [t, exit](Timeslot tt) {
                            return (tt >= t && tt <= exit) ? Activity::Active : Activity::Inactive;
                        },
                        byz);
                    spawn_slots->push_back(t);
                    out.push_back(std::move(ps));
                }
                return out;
            };
            return run_execution(std::move(setup));
        };

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["honest"] = build(0);
        out.traces["crash"] = build(1);
        out.traces["delay"] = build(2);
        const auto& honest = out.traces["honest"];
        const auto& crash = out.traces["crash"];
        const auto& delay = out.traces["delay"];

        // Allocation rho-boundedness over the realized schedules.
        bool rho_ok = true;
        for (const auto& tr : {&honest, &crash, &delay}) {
            auto v = settings::check_rho_bounded_execution(*tr, {1, 3});
            rho_ok = rho_ok && v.pass;
        }
        out.assert_that("allocation-rho-bounded", rho_ok);

        auto floods_at = [](const ExecutionTrace& tr, Timeslot t) {
            int count = 0;
            for (const auto& d : tr.disseminations)
                if (d.t == t) ++count;
            return count;
        };
        bool honest_ok = true;
        for (Timeslot t = 1; t <= horizon; ++t) honest_ok = honest_ok && floods_at(honest, t) == s;
        out.assert_that("honest-floods-once", honest_ok);
        out.assert_that("crash-missing-one",
                        floods_at(crash, 3) == s - 1 &&
                            crash.disseminations.size() == honest.disseminations.size() - 1);
        out.assert_that("delay-arrives-late",
                        floods_at(delay, 4) == s - 1 && floods_at(delay, 6) == s + 1);

        bool budgets = true;
        for (const auto& tr : {&honest, &crash, &delay}) {
            for (const auto& f : tr->flags)
                if (f.kind == "budget-violation") budgets = false;
        }
        out.assert_that("budget-sound", budgets);
        out.assert_that("timing-valid", !validate_timing_rule(honest).has_value() &&
                                            !validate_timing_rule(crash).has_value() &&
                                            !validate_timing_rule(delay).has_value());
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Committee reactivity
// ---------------------------------------------------------------------------

// A beacon-granted committee resource held by a stakeless player: the
// static-grant variant is essentially permissioned and fails the reactivity
// check; the rolling-grant variant expires and passes.
inline ScenarioSpec scenario_committee_reactivity(int rolling_window = 3) {
    ScenarioSpec spec;
    spec.name = "committee-reactivity";
    spec.summary = "static versus rolling committee grants under the reactivity checker";
    spec.params = {{"rolling_window", std::to_string(rolling_window)}};
    spec.expected = {{"reactive-static", false},
                     {"reactive-rolling", true},
                     {"qp-implies-da", true}};
    spec.run = [rolling_window, name = spec.name](std::uint64_t seed) {
        const Timeslot delta = 2;
        const Timeslot d = (rolling_window + 6) * delta;
        const Timeslot ell_star = (rolling_window + 2) * delta;
        StakeState s0{{{"clock", 1}}};

        auto build = [&](bool rolling) {
            ExecutionSetup setup;
            setup.config.delta = delta;
            setup.config.duration = d;
            setup.config.seed = seed;
            setup.stake0 = s0;
            setup.players_know_time = true;
            auto make_cfg = [&](bool is_clock) {
                baselines::CommitteeProtocol::Config cfg;
                cfg.delta = delta;
                cfg.is_clock = is_clock;
                cfg.clock_id = "clock";
                cfg.committee = {"member"};
                if (rolling) cfg.rolling_window = rolling_window;
                return cfg;
            };
            setup.players.push_back(make_player(
                "clock", {"clock"}, std::make_shared<baselines::CommitteeProtocol>(make_cfg(true))));
            setup.players.push_back(
                make_player("member", {"member"},
                            std::make_shared<baselines::CommitteeProtocol>(make_cfg(false))));
            setup.players.push_back(
                make_player("observer", {"observer"},
                            std::make_shared<baselines::CommitteeProtocol>(make_cfg(false))));
            return run_execution(std::move(setup));
        };

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["static"] = build(false);
        out.traces["rolling"] = build(true);

        settings::OnChainResources res;
        res.stake = true;
        res.protocol_defined = {"committee"};
        auto vs = settings::check_reactive(out.traces["static"], ell_star, res);
        vs.property = "reactive-static";
        out.add(vs);
        auto vr = settings::check_reactive(out.traces["rolling"], ell_star, res);
        vr.property = "reactive-rolling";
        out.add(vr);

        bool hierarchy = true;
        for (const auto& [k, tr] : out.traces) {
            bool qp = settings::check_quasi_permissionless(tr, res).pass;
            bool da = settings::check_dynamically_available(tr).pass;
            if (qp && !da) hierarchy = false;
        }
        out.assert_that("qp-implies-da", hierarchy);
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Dynamically available agreement suite
// ---------------------------------------------------------------------------

// Coin-attestation agreement under randomized crash/delay schedules with a
// faulty-coin share strictly below one half, plus intermittent off-round
// honest activity. Termination, Agreement, and Validity hold on every run.
inline ScenarioSpec scenario_positive_da(int n_coins = 5, bool faulty = true) {
    ScenarioSpec spec;
    spec.name = "da-agreement";
    spec.summary = "coin-attestation agreement under crash/delay faults";
    spec.params = {{"coins", std::to_string(n_coins)}, {"faulty", faulty ? "1" : "0"}};
    spec.expected = {{"ba-termination", true},
                     {"ba-agreement", true},
                     {"ba-validity", true},
                     {"dynamically-available", true},
                     {"timing-valid", true}};
    spec.run = [n_coins, faulty, name = spec.name](std::uint64_t seed) {
        const Timeslot delta = 2;
        std::map<Identifier, Stake> init;
        for (int i = 0; i < n_coins; ++i) init["p" + std::to_string(i)] = 1;
        StakeState s0{init};
        lg::CoinLedger ledger{s0};
        const int n_star = ledger.final_round();
        const Timeslot d = (n_star + 3) * delta;
        const int n_faulty = faulty ? (n_coins + 1) / 2 - 1 : 0;

        KeyedRng rng(seed, "da-agreement");
        ExecutionSetup setup;
        setup.config.delta = delta;
        setup.config.duration = d;
        setup.config.seed = seed;
        setup.config.rho = {n_faulty, n_coins};
        setup.stake0 = s0;
        setup.authenticated = false;
        setup.players_know_time = true;

        int idx = 0;
        for (const auto& [id, st] : s0.initial()) {
            lg::BaParams p{lg::CoinLedger{s0}};
            p.delta = delta;
            p.my_coins = p.ledger.coins_of.at(id);
            p.input = static_cast<int>(rng.next_below(2));
            bool is_faulty = idx < n_faulty;
            if (is_faulty) {
                if (rng.next_below(2) == 0) {
                    p.crash_at_round = 1 + static_cast<int>(rng.next_below(n_star));
                } else {
                    for (int r = 1; r <= n_star; ++r)
                        p.delay_by_round[r] = static_cast<Timeslot>(rng.next_below(2 * delta));
                }
            }
            // Honest players nap at seeded non-round timeslots.
            std::uint64_t nap_key = rng.next_u64();
            auto activity = [delta, nap_key, is_faulty](Timeslot t) {
                if (t % delta == 0) return Activity::Active;
                if (is_faulty) return Activity::Active;
                return (splitmix64(nap_key ^ static_cast<std::uint64_t>(t)) & 1)
                           ? Activity::Active
                           : Activity::Inactive;
            };
            int input = p.input;
            setup.players.push_back(make_player(id, {id}, std::make_shared<lg::BaBehavior>(p),
                                                activity, is_faulty, input));
            ++idx;
        }

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["run"] = run_execution(std::move(setup));
        const auto& tr = out.traces["run"];
        auto ba = verdicts::check_ba(tr);
        out.add(ba.termination);
        out.add(ba.agreement);
        out.add(ba.validity);
        auto da = settings::check_dynamically_available(tr);
        out.add(da);
        out.assert_that("timing-valid", !validate_timing_rule(tr).has_value());
        return out;
    };
    return spec;
}

} // namespace plsim::scen
