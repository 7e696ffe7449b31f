#pragma once

#include "plsim/adversaries.hpp"
#include "plsim/baselines.hpp"
#include "plsim/env_checks.hpp"
#include "plsim/hotstuff.hpp"
#include "plsim/scenario.hpp"

#include <memory>
#include <string>

namespace plsim::scen {

namespace hs_detail {

inline hotstuff::NodeParams node_params(const StakeState& s0, std::vector<Identifier> ids,
                                        Timeslot delta, Rational kappa, bool ephemeral = false,
                                        Timeslot allowance = 0) {
    hotstuff::NodeParams p;
    p.stake0 = s0;
    p.delta = delta;
    p.kappa = kappa;
    p.my_ids = std::move(ids);
    p.ephemeral_votes = ephemeral;
    p.height_allowance = allowance;
    return p;
}

// Liveness parameter of the staked-quorum protocol, per its analysis.
inline Timeslot liveness_ell(Stake n, Timeslot delta, const Rational& kappa) {
    return (24 * n + 8) * ceil_div_rational_sq(delta, kappa);
}

// Alternating waiting schedule meeting the kappa floor exactly for
// kappa = num/den: participating on num of every den slots.
inline std::function<Activity(Timeslot)> drift_activity(const Rational& kappa, int phase) {
    std::int64_t num = kappa.num, den = kappa.den;
    return [num, den, phase](Timeslot t) {
        return ((t + phase) % den) < num ? Activity::Active : Activity::Waiting;
    };
}

} // namespace hs_detail

// ---------------------------------------------------------------------------
// Positive quasi-permissionless suite
// ---------------------------------------------------------------------------

enum class QpAdversary { None, Equivocate, Withhold };

inline const char* qp_adversary_name(QpAdversary a) {
    switch (a) {
        case QpAdversary::None: return "none";
        case QpAdversary::Equivocate: return "equivocate";
        case QpAdversary::Withhold: return "withhold";
    }
    return "?";
}

// Four unit stakeholders, one optionally Byzantine, seeded delivery jitter
// within the model bound, stake churn via environment transfers. Safety and
// the deterministic liveness bound hold on every run.
inline ScenarioSpec scenario_positive_qp(Timeslot delta = 2, Rational kappa = {1, 1},
                                         Timeslot gst = 0,
                                         QpAdversary adversary = QpAdversary::None,
                                         int duration_mult = 1) {
    ScenarioSpec spec;
    spec.name = "qp-staked-quorum";
    spec.summary = "stake-weighted three-stage quorum protocol in the QP setting";
    spec.params = {{"delta", std::to_string(delta)},
                   {"kappa", std::to_string(kappa.num) + "/" + std::to_string(kappa.den)},
                   {"gst", std::to_string(gst)},
                   {"adversary", qp_adversary_name(adversary)},
                   {"duration_mult", std::to_string(duration_mult)}};
    spec.expected = {{"consistency", true},
                     {"liveness", true},
                     {"quasi-permissionless", true},
                     {"dynamically-available", true},
                     {"rho-bounded-execution", true},
                     {"env-rho-bounded", true},
                     {"timing-valid", true}};
    spec.run = [=, name = spec.name](std::uint64_t seed) {
        StakeState s0{{{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}}};
        const Stake n_total = s0.total();
        const Timeslot ell = hs_detail::liveness_ell(n_total, delta, kappa);
        // Every injected transaction's deadline max{GST, t} + ell lands
        // within the horizon.
        const Timeslot d = (gst + ell + 6 * delta + 2) * duration_mult;

        ExecutionSetup setup;
        setup.config.delta = delta;
        setup.config.kappa = kappa;
        setup.config.gst = gst;
        setup.config.duration = d;
        setup.config.seed = seed;
        setup.config.rho = {1, 3};
        setup.stake0 = s0;
        setup.players_know_time = false;

        int phase = 0;
        int byz_index = 1; // player "b" misbehaves when an adversary is on
        int idx = 0;
        for (const auto& [id, stake] : s0.initial()) {
            bool byz = adversary != QpAdversary::None && idx == byz_index;
            std::shared_ptr<Behavior> behavior;
            auto params = hs_detail::node_params(s0, {id}, delta, kappa);
            if (!byz) {
                behavior = std::make_shared<hotstuff::NodeBehavior>(params);
            } else if (adversary == QpAdversary::Equivocate) {
                behavior = std::make_shared<adversaries::EquivocatingNode>(params);
            } else {
                behavior = std::make_shared<adversaries::Silent>();
            }
            // Byzantine players run without waiting slots; honest players
            // follow the drift schedule.
            auto activity = byz ? std::function<Activity(Timeslot)>(
                                      [](Timeslot) { return Activity::Active; })
                                : hs_detail::drift_activity(kappa, phase++);
            setup.players.push_back(make_player(id, {id}, behavior, activity, byz));
            ++idx;
        }

        // Independent transfers, each prerequisite-free, so the environment
        // stays rho-bounded for every confirmation pattern.
        // Transfers avoid the (potentially Byzantine) player "b", so the
        // adversary share stays one quarter under every confirmation pattern.
        auto env = std::make_shared<ScriptedEnvironment>();
        env->add(2, 0, transfer_tx(s0, TxSet{}, "a", "c", 1, "move-ac"));
        env->add(gst + 3, 2, transfer_tx(s0, TxSet{}, "c", "d", 1, "move-cd"));
        env->add(gst + 5 * delta, 3, transfer_tx(s0, TxSet{}, "d", "a", 1, "move-da"));
        setup.environment = env;

        // Seeded jitter: equivocation variants split receivers by routing
        // class 2 with an extra delay for half the players.
        setup.timing = std::make_shared<FnTimingRule>(
            [delta, gst, kappa = kappa](PlayerIdx, PlayerIdx to, const DisseminationEvent& ev,
                                        KeyedRng& rng) -> std::optional<Timeslot> {
                ExecutionConfig c;
                c.delta = delta;
                c.gst = gst;
                c.kappa = kappa;
                Timeslot lo = ev.t + 1;
                Timeslot hi = std::max(lo, c.delivery_bound(ev.t));
                if (ev.delivery_class != 0) {
                    // Deliver one equivocation variant early to even players
                    // and late to odd players, within the bound.
                    bool early = (to % 2 == 0) == (ev.delivery_class == 1);
                    return early ? lo : hi;
                }
                return lo + static_cast<Timeslot>(
                                rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
            });

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["run"] = run_execution(std::move(setup));
        const auto& tr = out.traces["run"];

        auto cons = verdicts::check_consistency(tr);
        out.add(cons);
        auto live = verdicts::check_liveness(tr, ell);
        out.add(live);
        auto qp = settings::check_quasi_permissionless(tr, settings::OnChainResources{});
        out.add(qp);
        auto da = settings::check_dynamically_available(tr);
        out.add(da);
        auto rb = settings::check_rho_bounded_execution(tr, {1, 3});
        out.add(rb);
        auto envrb = env_is_rho_bounded(tr, {1, 3});
        out.assert_that("env-rho-bounded", envrb.holds, envrb.witness);
        out.assert_that("timing-valid", !validate_timing_rule(tr).has_value());
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Optimistic responsiveness
// ---------------------------------------------------------------------------

// All-honest, realized delay one, worst-case bound one hundred: the staked
// quorum protocol confirms within (10N+9) * ceil(delta_realized / kappa) of
// receipt with zero grace, while the fixed-wait baseline misses the same
// bound (and still satisfies plain liveness).
inline ScenarioSpec scenario_responsive_qp() {
    ScenarioSpec spec;
    spec.name = "responsive-qp";
    spec.summary = "network-speed confirmation with a large worst-case delay bound";
    spec.expected = {{"optimistic-responsiveness", true},
                     {"baseline-optimistic-responsiveness", false},
                     {"baseline-liveness", true},
                     {"consistency", true}};
    spec.run = [name = spec.name](std::uint64_t seed) {
        const Timeslot delta = 100;
        StakeState s0{{{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}}};
        const Stake n_total = s0.total();
        const Timeslot d = 320;

        auto build = [&](bool baseline) {
            ExecutionSetup setup;
            setup.config.delta = delta;
            setup.config.duration = d;
            setup.config.seed = seed;
            setup.stake0 = s0;
            setup.players_know_time = false;
            for (const auto& [id, stake] : s0.initial()) {
                std::shared_ptr<Behavior> b;
                if (baseline) {
                    b = std::make_shared<baselines::TimedConfirmer>(s0, delta);
                } else {
                    b = std::make_shared<hotstuff::NodeBehavior>(
                        hs_detail::node_params(s0, {id}, delta, {1, 1}));
                }
                setup.players.push_back(make_player(id, {id}, std::move(b)));
            }
            auto env = std::make_shared<ScriptedEnvironment>();
            env->add(5, 0, transfer_tx(s0, TxSet{}, "a", "b", 1, "m1"));
            env->add(60, 1, transfer_tx(s0, TxSet{}, "b", "c", 1, "m2"));
            env->add(130, 2, transfer_tx(s0, TxSet{}, "c", "d", 1, "m3"));
            setup.environment = env;
            return run_execution(std::move(setup)); // next-timeslot rule: delta_realized = 1
        };

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["protocol"] = build(false);
        out.traces["baseline"] = build(true);

        auto ell_of = [n_total](Timeslot realized) { return (10 * n_total + 9) * realized; };
        auto orv = verdicts::check_optimistic_responsiveness(out.traces["protocol"], ell_of, 0);
        out.add(orv);
        auto orb = verdicts::check_optimistic_responsiveness(out.traces["baseline"], ell_of, 0);
        orb.property = "baseline-optimistic-responsiveness";
        out.add(orb);
        auto lb = verdicts::check_liveness(out.traces["baseline"], delta + 10);
        lb.property = "baseline-liveness";
        out.add(lb);
        out.add(verdicts::check_consistency(out.traces["protocol"]));
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Accountability fork
// ---------------------------------------------------------------------------

// A two-thirds-stake identifier runs two protocol brains across a scripted
// partition, driving both sides to full epoch confirmation of conflicting
// transactions. The blame function over the disseminated messages returns
// exactly the double-voting identifier, whose stake exceeds one third.
inline ScenarioSpec scenario_accountable_fork() {
    ScenarioSpec spec;
    spec.name = "accountable-fork";
    spec.summary = "double-voting stake forces a fork; blame recovers the culprit";
    spec.expected = {{"consistency", false},
                     {"blame-exactly-culprit", true},
                     {"blame-weight-third", true},
                     {"rho-bounded-execution", false}};
    spec.run = [name = spec.name](std::uint64_t seed) {
        const Timeslot delta = 2;
        const Timeslot fork_step = 6; // after the first height confirms, before view 1
        const Timeslot d = 90;
        StakeState s0{{{"b", 2}, {"h1", 1}, {"h2", 1}}};

        ExecutionSetup setup;
        setup.config.delta = delta;
        setup.config.duration = d;
        setup.config.gst = d; // partition for the whole horizon
        setup.config.seed = seed;
        setup.stake0 = s0;
        setup.players_know_time = false;

        adversaries::TwoBrainNode::Config cfg;
        cfg.params = hs_detail::node_params(s0, {"b"}, delta, {1, 1});
        cfg.fork_at_step = fork_step;
        cfg.route_external = [](PlayerIdx sender, Timeslot) {
            if (sender == 1) return 1; // h1 is side A
            if (sender == 2) return 2; // h2 is side B
            return 0;
        };
        setup.players.push_back(
            make_player("b", {"b"}, std::make_shared<adversaries::TwoBrainNode>(cfg),
                        [](Timeslot) { return Activity::Active; }, true));
        setup.players.push_back(make_player(
            "h1", {"h1"},
            std::make_shared<hotstuff::NodeBehavior>(hs_detail::node_params(s0, {"h1"}, delta, {1, 1}))));
        setup.players.push_back(make_player(
            "h2", {"h2"},
            std::make_shared<hotstuff::NodeBehavior>(hs_detail::node_params(s0, {"h2"}, delta, {1, 1}))));

        // Conflicting spends of b's double coin, one per side.
        auto tr_a = make_tx("side-a", {UtxoRef{std::string(kGenesisTxId) + ":b", 0}},
                            {TxOutput{"h1", 2}});
        auto tr_b = make_tx("side-b", {UtxoRef{std::string(kGenesisTxId) + ":b", 0}},
                            {TxOutput{"h2", 2}});
        auto env = std::make_shared<ScriptedEnvironment>();
        env->add(fork_step, 1, tr_a);
        env->add(fork_step, 2, tr_b);
        setup.environment = env;

        setup.timing = std::make_shared<FnTimingRule>(
            [fork_step](PlayerIdx from, PlayerIdx to, const DisseminationEvent& ev,
                        KeyedRng& rng) -> std::optional<Timeslot> {
                auto side = [](PlayerIdx p, int klass) {
                    if (p == 1 || klass == 1) return 1;
                    if (p == 2 || klass == 2) return 2;
                    return 0; // pre-fork byzantine traffic
                };
                if (ev.t < fork_step) return ev.t + 1;
                int s_from = side(from, ev.delivery_class);
                int s_to = side(to, 0);
                if (to == 0 || s_from == 0 || s_from == s_to) {
                    return ev.t + 1 + static_cast<Timeslot>(rng.next_below(2));
                }
                return std::nullopt; // cross-side: blocked until GST
            });

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["run"] = run_execution(std::move(setup));
        const auto& tr = out.traces["run"];

        out.add(verdicts::check_consistency(tr));
        auto blamed = verdicts::blame(verdicts::disseminated_messages(tr));
        out.assert_that("blame-exactly-culprit",
                        blamed == std::set<Identifier>{"b"},
                        blamed.empty() ? "blame set empty" : *blamed.begin());
        auto weight = verdicts::weight_at_least(blamed, {1, 3}, tr, {TxSet{}});
        out.assert_that("blame-weight-third", weight.at_least, weight.witness);
        out.add(settings::check_rho_bounded_execution(tr, {1, 3}));
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Long-range attack
// ---------------------------------------------------------------------------

// Coupled executions: the first history transfers all stake away from the
// genesis holders; after they cash out, a corruption event hands their keys
// to the adversary, which replays an alternative history built in a coupled
// run. With only time-malleable machinery (plain signatures), the replay
// produces an incompatible epoch boundary and confirmed transactions flip;
// with ephemeral vote tags, the expired keys make the replayed history
// unusable.
inline ScenarioSpec scenario_long_range(bool ephemeral_defense) {
    ScenarioSpec spec;
    spec.name = ephemeral_defense ? "long-range-ephemeral" : "long-range";
    spec.summary = "post-cashout key corruption and history replay";
    spec.params = {{"defense", ephemeral_defense ? "ephemeral" : "none"}};
    spec.expected = {{"oracles-time-malleable", !ephemeral_defense},
                     {"i1-liveness", true},
                     {"honest-tags-live", true},
                     {"cashed-out-precondition", true},
                     {"prefix-honest", true},
                     {"consistency", ephemeral_defense},
                     {"confirmation-flip", !ephemeral_defense},
                     {"replay-dropped", ephemeral_defense}};
    spec.run = [ephemeral_defense, name = spec.name](std::uint64_t seed) {
        const Timeslot delta = 2;
        const Rational kappa{1, 1};
        const Timeslot allowance = 12; // ephemeral deadline per block height
        StakeState s0{{{"o1", 1}, {"o2", 1}, {"o3", 1}, {"o4", 1}}};
        const Stake n_total = s0.total();

        std::vector<Identifier> id0{"o1", "o2", "o3", "o4"};
        std::vector<Identifier> id1{"m1", "m2", "m3", "m4"};
        std::vector<Identifier> id2{"n1", "n2", "n3", "n4"};

        auto transfers = [&](const std::vector<Identifier>& dst, const std::string& tag) {
            std::vector<TransactionPtr> txs;
            for (std::size_t i = 0; i < id0.size(); ++i) {
                txs.push_back(make_tx(tag + std::to_string(i + 1),
                                      {UtxoRef{std::string(kGenesisTxId) + ":" + id0[i], 0}},
                                      {TxOutput{dst[i], 1}}));
            }
            return txs;
        };
        auto t1 = transfers(id1, "t1-");
        auto t2 = transfers(id2, "t2-");

        auto node_for = [&](const Identifier& id) {
            return std::make_shared<hotstuff::NodeBehavior>(hs_detail::node_params(
                s0, {id}, delta, kappa, ephemeral_defense, allowance));
        };
        auto add_oracle = [&](ExecutionSetup& setup) {
            if (ephemeral_defense) setup.oracles.push_back(std::make_shared<EphemeralKeyOracle>());
        };

        // Instance builder for the two honest histories: owners plus one of
        // the successor groups, all active, next-timeslot delivery.
        auto build_honest = [&](const std::vector<Identifier>& others,
                                const std::vector<TransactionPtr>& txs, Timeslot d) {
            ExecutionSetup setup;
            setup.config.delta = delta;
            setup.config.duration = d;
            setup.config.seed = seed;
            setup.stake0 = s0;
            setup.players_know_time = false;
            add_oracle(setup);
            for (const auto& id : id0) setup.players.push_back(make_player(id, {id}, node_for(id)));
            for (const auto& id : others)
                setup.players.push_back(make_player(id, {id}, node_for(id)));
            auto env = std::make_shared<ScriptedEnvironment>();
            for (PlayerIdx p = 0; p < static_cast<PlayerIdx>(setup.players.size()); ++p)
                for (const auto& tx : txs) env->add(1, p, tx);
            setup.environment = env;
            return setup;
        };

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;

        // Probe the first history to find when the cash-out confirms.
        Timeslot probe_d = 90;
        out.traces["i1"] = run_execution(build_honest(id1, t1, probe_d));
        const auto& i1 = out.traces["i1"];
        SnapshotIndex idx1(i1);
        Timeslot t_conf = -1;
        for (Timeslot t = 1; t <= probe_d && t_conf < 0; ++t) {
            bool all = true;
            for (PlayerIdx p = 0; p < i1.player_count(); ++p) {
                const TxSet& conf = idx1.at(p, t);
                for (const auto& tx : t1)
                    if (!conf.contains(tx->tx_id)) all = false;
            }
            if (all) t_conf = t;
        }
        out.assert_that("i1-t1-confirmed", t_conf > 0);
        const Timeslot t_c =
            std::max<Timeslot>(t_conf + 2, static_cast<Timeslot>(n_total) * allowance + delta + 1);

        {
            // Confirmation of the cash-out within the liveness bound, stated
            // directly since the probe horizon is deliberately short.
            Timeslot ell = hs_detail::liveness_ell(n_total, delta, kappa);
            out.assert_that("i1-liveness", t_conf > 0 && t_conf <= 1 + ell,
                            "confirmed at t=" + std::to_string(t_conf));
            bool expired = false;
            for (const auto& f : i1.flags)
                if (f.kind == "ephemeral-expired") expired = true;
            out.assert_that("honest-tags-live", !expired);
        }

        // Coupled second history, run through t_c.
        out.traces["i2"] = run_execution(build_honest(id2, t2, t_c));
        const auto& i2 = out.traces["i2"];

        // Replay scripts per player name: everything each of the owner and
        // successor-two players disseminated in the coupled history.
        std::map<std::string, std::vector<Message>> script;
        for (const auto& d : i2.disseminations) {
            script[i2.players[d.sender].name].push_back(d.message);
        }

        // The attack instance.
        ExecutionSetup setup;
        setup.config.delta = delta;
        setup.config.duration = t_c + 8;
        setup.config.seed = seed;
        setup.stake0 = s0;
        setup.players_know_time = false;
        add_oracle(setup);
        for (const auto& id : id0) setup.players.push_back(make_player(id, {id}, node_for(id)));
        for (const auto& id : id1) setup.players.push_back(make_player(id, {id}, node_for(id)));
        for (const auto& id : id2) {
            adversaries::ReplayFromScript::Config rc;
            rc.replay_at_step = t_c;
            rc.script = script.count(id) ? script[id] : std::vector<Message>{};
            if (ephemeral_defense) rc.reissue_oracle = "ephemeral";
            setup.players.push_back(make_player(
                id, {id}, std::make_shared<adversaries::ReplayFromScript>(rc),
                [](Timeslot) { return Activity::Active; }, true));
        }
        auto env = std::make_shared<ScriptedEnvironment>();
        for (PlayerIdx p = 0; p < 12; ++p)
            for (const auto& tx : t1) env->add(1, p, tx);
        for (PlayerIdx p = 0; p < 12; ++p) {
            if (p >= 4 && p < 8) continue; // successors-one do not see the late batch
            for (const auto& tx : t2) env->add(t_c, p, tx);
        }
        setup.environment = env;
        CorruptionScript corr;
        corr.t_c = t_c;
        for (PlayerIdx p = 0; p < 4; ++p) corr.players.push_back(p);
        corr.replace = [&script, ephemeral_defense, this_names = id0](PlayerIdx p) {
            adversaries::ReplayFromScript::Config rc;
            rc.replay_at_step = 1; // fire at the corruption timeslot
            const std::string& nm = this_names[p];
            auto it = script.find(nm);
            if (it != script.end()) rc.script = it->second;
            if (ephemeral_defense) rc.reissue_oracle = "ephemeral";
            return std::make_shared<adversaries::ReplayFromScript>(rc);
        };
        setup.corruption = corr;

        bool precondition_ok = true;
        try {
            out.traces["i3"] = run_execution(std::move(setup));
        } catch (const std::exception& e) {
            precondition_ok = false;
            out.assert_that("cashed-out-precondition", false, e.what());
        }
        if (precondition_ok) out.assert_that("cashed-out-precondition", true);

        bool malleable_only = true;
        if (ephemeral_defense) {
            EphemeralKeyOracle eph;
            malleable_only = is_time_malleable(eph, seed).time_malleable;
        }
        out.assert_that("oracles-time-malleable", malleable_only,
                        "ephemeral oracle is not time malleable");

        if (precondition_ok) {
            const auto& i3 = out.traces["i3"];
            out.add(verdicts::check_consistency(i3));

            // Prefix equality for the honest population through t_c - 1.
            bool prefix = true;
            for (PlayerIdx p = 0; p < 8; ++p)
                prefix = prefix && same_view_prefix(i1, i3, p, t_c - 1);
            out.assert_that("prefix-honest", prefix);

            // The observable flip: a first-history transaction confirmed at
            // t_c and unconfirmed one timeslot later, for a successor-one
            // player.
            SnapshotIndex idx3(i3);
            bool flip = false;
            for (PlayerIdx p = 4; p < 8 && !flip; ++p) {
                for (const auto& tx : t1) {
                    if (idx3.at(p, t_c).contains(tx->tx_id) &&
                        !idx3.at(p, t_c + 2).contains(tx->tx_id)) {
                        flip = true;
                        break;
                    }
                }
            }
            out.assert_that("confirmation-flip", flip);

            int drops = 0;
            for (const auto& f : i3.flags)
                if (f.kind == "permission-drop") ++drops;
            out.assert_that("replay-dropped", drops > 0,
                            "no replayed message was blocked");
        }
        return out;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Split brain
// ---------------------------------------------------------------------------

// The two-phase construction against the staked-quorum protocol under a
// maximally rho-bounded environment: phase one confirms transfers that hand
// the adversary the whole stake; phase two runs two protocol brains over an
// odd/even delivery split, confirming conflicting transactions for the two
// halves of the remaining honest stakeholders.
inline ScenarioSpec scenario_split_brain() {
    ScenarioSpec spec;
    spec.name = "split-brain";
    spec.summary = "stake capture then a two-brain odd/even split";
    spec.expected = {{"i0-liveness", true},
                     {"i0-stake-captured", true},
                     {"i0-reactive", true},
                     {"i4-tr1-confirmed", true},
                     {"i5-tr2-confirmed", true},
                     {"i4-quasi-permissionless", true},
                     {"prefix-i1-i4", true},
                     {"prefix-y", true},
                     {"prefix-z", true},
                     {"env-maximally-rho-bounded", true},
                     {"env-rho-bounded", false},
                     {"consistency", false}};
    spec.run = [name = spec.name](std::uint64_t seed) {
        const Timeslot delta = 2;
        const Rational kappa{1, 1};
        StakeState s0{{{"b", 1}, {"y", 1}, {"z", 1}}};
        const Stake n_total = s0.total();
        const Timeslot ell = hs_detail::liveness_ell(n_total, delta, kappa); // 160
        const Timeslot ell_star = delta;
        const Timeslot t_star = ell + ell_star + 1;
        const Timeslot d = t_star + ell + 30;

        // T-prime: both honest coins to b; T: plus the refunds out of those
        // very outputs; tr1/tr2: conflicting self-spends of b's own coin.
        auto ty = make_tx("ty", {UtxoRef{std::string(kGenesisTxId) + ":y", 0}}, {TxOutput{"b", 1}});
        auto tz = make_tx("tz", {UtxoRef{std::string(kGenesisTxId) + ":z", 0}}, {TxOutput{"b", 1}});
        auto tyb = make_tx("tyb", {UtxoRef{"ty", 0}}, {TxOutput{"y", 1}});
        auto tzb = make_tx("tzb", {UtxoRef{"tz", 0}}, {TxOutput{"z", 1}});
        auto tr1 = make_tx("tr1", {UtxoRef{std::string(kGenesisTxId) + ":b", 0}}, {TxOutput{"b", 1}});
        auto tr2 = make_tx("tr2", {UtxoRef{std::string(kGenesisTxId) + ":b", 0}}, {TxOutput{"b", 1}});

        auto node_for = [&](const Identifier& id) {
            return std::make_shared<hotstuff::NodeBehavior>(
                hs_detail::node_params(s0, {id}, delta, kappa));
        };

        // Instances 0/1/2/4/5 share a five-role layout but only b, y, z
        // participate; w (knows the refund set) and x (external resources)
        // appear in the attack instance.
        enum Role : PlayerIdx { B = 0, Y = 1, Z = 2, W = 3, X = 4 };

        auto build = [&](int instance) {
            ExecutionSetup setup;
            setup.config.delta = delta;
            setup.config.duration = d;
            setup.config.gst = instance == 0 ? 0 : d;
            setup.config.seed = seed;
            setup.config.rho = {1, 3};
            setup.stake0 = s0;
            setup.players_know_time = false;

            bool attack = instance == 3;
            bool z_inactive_late = instance == 4;
            bool y_inactive_late = instance == 5;

            if (!attack) {
                setup.players.push_back(make_player("b", {"b"}, node_for("b")));
            } else {
                adversaries::TwoBrainNode::Config cfg;
                cfg.params = hs_detail::node_params(s0, {"b"}, delta, kappa);
                cfg.fork_at_step = t_star;
                cfg.route_external = [](PlayerIdx sender, Timeslot) {
                    if (sender == Y) return 1;
                    if (sender == Z) return 2;
                    return 0;
                };
                setup.players.push_back(
                    make_player("b", {"b"}, std::make_shared<adversaries::TwoBrainNode>(cfg),
                                [](Timeslot) { return Activity::Active; }, true));
            }
            setup.players.push_back(make_player(
                "y", {"y"}, node_for("y"), [y_inactive_late, t_star](Timeslot t) {
                    return (y_inactive_late && t >= t_star) ? Activity::Inactive : Activity::Active;
                }));
            setup.players.push_back(make_player(
                "z", {"z"}, node_for("z"), [z_inactive_late, t_star](Timeslot t) {
                    return (z_inactive_late && t >= t_star) ? Activity::Inactive : Activity::Active;
                }));
            if (attack) {
                setup.players.push_back(make_player("w", {"w"}, node_for("w")));
                setup.players.push_back(make_player("x", {"x"}, node_for("x")));
            }

            auto env = std::make_shared<ScriptedEnvironment>();
            env->add(1, B, ty);
            env->add(1, B, tz);
            if (attack) {
                env->add(1, W, ty);
                env->add(1, W, tz);
                env->add(1, W, tyb);
                env->add(1, W, tzb);
            }
            if (instance == 1 || instance == 4 || attack) env->add(t_star, Y, tr1);
            if (instance == 2 || instance == 5 || attack) env->add(t_star, Z, tr2);
            setup.environment = env;

            auto next_parity = [](Timeslot t, bool odd) {
                Timeslot r = t + 1;
                if ((r % 2 == 1) != odd) ++r;
                return r;
            };
            setup.timing = std::make_shared<FnTimingRule>(
                [instance, t_star, next_parity](PlayerIdx from, PlayerIdx to,
                                                const DisseminationEvent& ev,
                                                KeyedRng&) -> std::optional<Timeslot> {
                    bool attack = instance == 3;
                    if (attack && (from == W || from == X)) return std::nullopt;
                    if (ev.t < t_star) return ev.t + 1;
                    switch (instance) {
                        case 0: return ev.t + 1;
                        case 1:
                        case 4: // senders b and y next odd; z blocked
                            if (from == Z) return instance == 1 ? std::nullopt
                                                                : std::optional<Timeslot>(ev.t + 1);
                            return next_parity(ev.t, true);
                        case 2:
                        case 5:
                            if (from == Y) return instance == 2 ? std::nullopt
                                                                : std::optional<Timeslot>(ev.t + 1);
                            return next_parity(ev.t, false);
                        default: break;
                    }
                    // Attack: routing by sender side and brain class.
                    int side = 0; // 1 odd/Y side, 2 even/Z side
                    if (from == Y || ev.delivery_class == 1) side = 1;
                    if (from == Z || ev.delivery_class == 2) side = 2;
                    if (side == 0) {
                        // The honest-until-fork player's sends at exactly t*:
                        // each receiver sees them with its own side's parity.
                        if (to == B) return ev.t + 1;
                        return next_parity(ev.t, to != Z);
                    }
                    if (side == 1 && to == Z) return std::nullopt;
                    if (side == 2 && to == Y) return std::nullopt;
                    return next_parity(ev.t, side == 1);
                });
            return setup;
        };

        ScenarioOutcome out;
        out.scenario = name;
        out.seed = seed;
        out.traces["i0"] = run_execution(build(0));
        out.traces["i1"] = run_execution(build(1));
        out.traces["i2"] = run_execution(build(2));
        out.traces["i3"] = run_execution(build(3));
        out.traces["i4"] = run_execution(build(4));
        out.traces["i5"] = run_execution(build(5));
        const auto& i0 = out.traces["i0"];
        const auto& i3 = out.traces["i3"];

        {
            auto live = verdicts::check_liveness(i0, ell);
            live.property = "i0-liveness";
            out.add(live);
        }
        {
            SnapshotIndex idx(i0);
            bool captured = true;
            StakeTableCache tables(s0);
            for (PlayerIdx p = 0; p <= 2; ++p) {
                const auto& table = tables.table_for(idx.at(p, ell + 1));
                Stake b_stake = table.count("b") ? table.at("b") : 0;
                captured = captured && b_stake == n_total;
            }
            out.assert_that("i0-stake-captured", captured);
        }
        {
            auto re = settings::check_reactive(i0, ell_star, settings::OnChainResources{});
            re.property = "i0-reactive";
            out.add(re);
        }
        {
            SnapshotIndex idx4(out.traces["i4"]);
            bool ok = idx4.at(B, t_star + ell).contains("tr1") &&
                      idx4.at(Y, t_star + ell).contains("tr1");
            out.assert_that("i4-tr1-confirmed", ok);
            SnapshotIndex idx5(out.traces["i5"]);
            bool ok5 = idx5.at(B, t_star + ell).contains("tr2") &&
                       idx5.at(Z, t_star + ell).contains("tr2");
            out.assert_that("i5-tr2-confirmed", ok5);
        }
        {
            auto qp = settings::check_quasi_permissionless(out.traces["i4"],
                                                           settings::OnChainResources{});
            qp.property = "i4-quasi-permissionless";
            out.add(qp);
        }
        {
            bool pre = same_view_prefix(out.traces["i1"], out.traces["i4"], B, t_star + ell) &&
                       same_view_prefix(out.traces["i1"], out.traces["i4"], Y, t_star + ell);
            out.assert_that("prefix-i1-i4", pre);
            out.assert_that("prefix-y",
                            same_view_prefix(out.traces["i1"], i3, Y, t_star + ell));
            out.assert_that("prefix-z",
                            same_view_prefix(out.traces["i2"], i3, Z, t_star + ell));
        }
        {
            auto mb = env_is_maximally_rho_bounded(i3, {1, 3}, t_star + 2);
            out.assert_that("env-maximally-rho-bounded", mb.holds, mb.witness);
            auto rb = env_is_rho_bounded(i3, {1, 3});
            out.assert_that("env-rho-bounded", rb.holds, rb.witness);
        }
        out.add(verdicts::check_consistency(i3));
        return out;
    };
    return spec;
}

} // namespace plsim::scen
