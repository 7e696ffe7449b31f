#pragma once

#include "plsim/trace.hpp"
#include "plsim/transactions.hpp"
#include "plsim/verdicts.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace plsim::settings {

// Executable checkers for the participation-assumption hierarchy
// (fully permissionless < dynamically available < quasi-permissionless <
// permissioned) and for reactivity of protocol-defined resources. All pure
// trace analysis.

enum class SettingKind {
    FullyPermissionless,
    DynamicallyAvailable,
    QuasiPermissionless,
    Permissioned,
};

// Which on-chain resources a protocol declares for the activity assumption.
struct OnChainResources {
    bool stake = true;
    std::vector<std::string> protocol_defined;
};

namespace detail {

// Owner snapshot as observed by `observer` at t for one protocol-defined
// resource (last recorded change at <= t).
inline const std::set<Identifier>* owners_at(const ExecutionTrace& tr, PlayerIdx observer,
                                             const std::string& resource, Timeslot t) {
    const std::set<Identifier>* best = nullptr;
    Timeslot best_t = -1;
    for (const auto& s : tr.resource_snapshots) {
        if (s.observer == observer && s.resource == resource && s.t <= t && s.t >= best_t) {
            best = &s.owners;
            best_t = s.t;
        }
    }
    return best;
}

inline bool player_active(const ExecutionTrace& tr, PlayerIdx p, Timeslot t) {
    return is_active(tr.activity_at(p, t)); // waiting players count as active
}

} // namespace detail

// Dynamically available: whenever an honest player is active at t with
// confirmed set T, and some honest player holds stake under S(S0,T), at
// least one such stakeholder is active at t.
inline verdicts::Verdict check_dynamically_available(const ExecutionTrace& tr) {
    SnapshotIndex idx(tr);
    StakeTableCache tables(tr.stake0);
    for (Timeslot t = 1; t <= tr.duration(); ++t) {
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            if (!tr.honest_at(p, t) || !detail::player_active(tr, p, t)) continue;
            const auto& table = tables.table_for(idx.at(p, t));
            bool some_staked_honest = false;
            bool some_staked_honest_active = false;
            for (PlayerIdx q = 0; q < tr.player_count(); ++q) {
                if (!tr.honest_at(q, t)) continue;
                Stake held = 0;
                for (const auto& id : tr.players[q].identifiers) {
                    auto it = table.find(id);
                    if (it != table.end()) held += it->second;
                }
                if (held <= 0) continue;
                some_staked_honest = true;
                if (detail::player_active(tr, q, t)) {
                    some_staked_honest_active = true;
                    break;
                }
            }
            if (some_staked_honest && !some_staked_honest_active) {
                return verdicts::Verdict::failed(
                    "dynamically-available",
                    "t=" + std::to_string(t) + ": observer " + std::to_string(p) +
                        " active while every honest stakeholder is inactive");
            }
        }
    }
    return verdicts::Verdict::passed("dynamically-available");
}

// Quasi-permissionless: whenever an honest player is active at t, every
// honest player holding a non-zero balance of a declared on-chain resource
// (stake under the observer's confirmed set, or a protocol-defined balance
// under the observer's received set) is active at t.
inline verdicts::Verdict check_quasi_permissionless(const ExecutionTrace& tr,
                                                    const OnChainResources& resources) {
    SnapshotIndex idx(tr);
    StakeTableCache tables(tr.stake0);
    for (Timeslot t = 1; t <= tr.duration(); ++t) {
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            if (!tr.honest_at(p, t) || !detail::player_active(tr, p, t)) continue;
            std::set<Identifier> demanded;
            if (resources.stake) {
                const auto& table = tables.table_for(idx.at(p, t));
                for (const auto& [id, c] : table)
                    if (c > 0) demanded.insert(id);
            }
            for (const auto& res : resources.protocol_defined) {
                if (const auto* owners = detail::owners_at(tr, p, res, t)) {
                    demanded.insert(owners->begin(), owners->end());
                }
            }
            for (PlayerIdx q = 0; q < tr.player_count(); ++q) {
                if (!tr.honest_at(q, t) || detail::player_active(tr, q, t)) continue;
                for (const auto& id : tr.players[q].identifiers) {
                    if (demanded.count(id)) {
                        return verdicts::Verdict::failed(
                            "quasi-permissionless",
                            "t=" + std::to_string(t) + ": staked honest player " +
                                std::to_string(q) + " inactive while " + std::to_string(p) +
                                " is active");
                    }
                }
            }
        }
    }
    return verdicts::Verdict::passed("quasi-permissionless");
}

// Reactive resources: any player holding no external resources and no stake
// throughout a post-GST interval of length >= ell_star owns none of each
// protocol-defined resource at the interval's end.
inline verdicts::Verdict check_reactive(const ExecutionTrace& tr, Timeslot ell_star,
                                        const OnChainResources& resources) {
    verdicts::Verdict v = verdicts::Verdict::passed("reactive");
    v.params["ell_star"] = std::to_string(ell_star);
    if (resources.protocol_defined.empty()) return v; // stake-only: vacuous

    SnapshotIndex idx(tr);
    StakeTableCache tables(tr.stake0);

    // owns_nothing[p][t]: no external resources and no stake at t, per the
    // three ownership readings.
    auto owns_external = [&](PlayerIdx p, Timeslot t) {
        for (const auto& sched : tr.resources) {
            if (static_cast<std::size_t>(t) < sched.balance[p].size() &&
                sched.balance[p][static_cast<std::size_t>(t)] > 0)
                return true;
        }
        return false;
    };
    auto owns_stake = [&](PlayerIdx p, Timeslot t) {
        for (PlayerIdx obs = 0; obs < tr.player_count(); ++obs) {
            if (!tr.honest_at(obs, t)) continue;
            const auto& table = tables.table_for(idx.at(obs, t));
            for (const auto& id : tr.players[p].identifiers) {
                auto it = table.find(id);
                if (it != table.end() && it->second > 0) return true;
            }
        }
        return false;
    };
    auto owns_resource_at = [&](PlayerIdx p, const std::string& res, Timeslot t) {
        for (PlayerIdx obs = 0; obs < tr.player_count(); ++obs) {
            if (!tr.honest_at(obs, t)) continue;
            const auto* owners = detail::owners_at(tr, obs, res, t);
            if (!owners) continue;
            for (const auto& id : tr.players[p].identifiers)
                if (owners->count(id)) return true;
        }
        return false;
    };

    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        // Longest run of "owns nothing" ending at each t2.
        Timeslot run = 0;
        for (Timeslot t = std::max<Timeslot>(tr.config.gst, 1); t <= tr.duration(); ++t) {
            if (owns_external(p, t) || owns_stake(p, t)) {
                run = 0;
                continue;
            }
            ++run;
            if (run < ell_star) continue;
            for (const auto& res : resources.protocol_defined) {
                if (owns_resource_at(p, res, t)) {
                    return verdicts::Verdict::failed(
                        "reactive", "player " + std::to_string(p) + " still owns " + res +
                                        " at t=" + std::to_string(t) + " after " +
                                        std::to_string(run) + " resourceless timeslots");
                }
            }
        }
    }
    return v;
}

// rho-bounded execution: every permitter allocation is rho-bounded, and for
// every honest player and timeslot, Byzantine players control at most a rho
// fraction of the stake held by active players under that player's
// confirmed set.
inline verdicts::Verdict check_rho_bounded_execution(const ExecutionTrace& tr,
                                                     const Rational& rho) {
    verdicts::Verdict v = verdicts::Verdict::passed("rho-bounded-execution");
    v.params["rho"] = std::to_string(rho.num) + "/" + std::to_string(rho.den);
    for (const auto& sched : tr.resources) {
        for (Timeslot t = 1; t <= tr.duration(); ++t) {
            std::int64_t total = 0, byz = 0;
            for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
                if (static_cast<std::size_t>(t) >= sched.balance[p].size()) continue;
                std::int64_t b = sched.balance[p][static_cast<std::size_t>(t)];
                total += b;
                if (tr.is_byzantine_at(p, t)) byz += b;
            }
            if (total < 1 || total > tr.config.r_max) {
                return verdicts::Verdict::failed(
                    "rho-bounded-execution", "permitter " + sched.oracle + " total " +
                                                 std::to_string(total) + " outside [1,R_max] at t=" +
                                                 std::to_string(t));
            }
            if (!share_at_most(byz, total, rho)) {
                return verdicts::Verdict::failed("rho-bounded-execution",
                                                 "external Byzantine share above rho at t=" +
                                                     std::to_string(t));
            }
        }
    }
    SnapshotIndex idx(tr);
    StakeTableCache tables(tr.stake0);
    for (Timeslot t = 1; t <= tr.duration(); ++t) {
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            if (!tr.honest_at(p, t) || !detail::player_active(tr, p, t)) continue;
            const auto& table = tables.table_for(idx.at(p, t));
            Stake active_total = 0, active_byz = 0;
            for (PlayerIdx q = 0; q < tr.player_count(); ++q) {
                if (!detail::player_active(tr, q, t)) continue;
                Stake held = 0;
                for (const auto& id : tr.players[q].identifiers) {
                    auto it = table.find(id);
                    if (it != table.end()) held += it->second;
                }
                active_total += held;
                if (tr.is_byzantine_at(q, t)) active_byz += held;
            }
            if (active_total > 0 && !share_at_most(active_byz, active_total, rho)) {
                return verdicts::Verdict::failed(
                    "rho-bounded-execution",
                    "t=" + std::to_string(t) + ": Byzantine active-stake share above rho in the view of player " +
                        std::to_string(p));
            }
        }
    }
    return v;
}

// Permissioned-setting checker, for completeness: a fixed identifier list,
// one per player, all always active.
inline verdicts::Verdict check_permissioned(const ExecutionTrace& tr) {
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        if (tr.players[p].identifiers.size() != 1)
            return verdicts::Verdict::failed("permissioned", "player with multiple identifiers");
        for (Timeslot t = 1; t <= tr.duration(); ++t) {
            if (!is_active(tr.activity_at(p, t)))
                return verdicts::Verdict::failed(
                    "permissioned",
                    "player " + std::to_string(p) + " inactive at t=" + std::to_string(t));
        }
    }
    return verdicts::Verdict::passed("permissioned");
}

} // namespace plsim::settings
