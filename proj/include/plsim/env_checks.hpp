#pragma once

#include "plsim/trace.hpp"
#include "plsim/transactions.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>

namespace plsim {

// Environment-restriction predicates for the UTXO transaction model,
// evaluated against a realized trace.

struct EnvCheckResult {
    bool holds = false;
    bool refused = false; // maximal-set enumeration exceeded its cap
    std::string witness;
};

namespace env_detail {

inline bool id_is_byzantine(const ExecutionTrace& tr, const Identifier& id) {
    PlayerIdx p = tr.owner_of(id);
    return p != kNoPlayer && tr.ever_byzantine(p);
}

inline std::pair<Stake, Stake> byz_split(const ExecutionTrace& tr,
                                         const std::map<Identifier, Stake>& table) {
    Stake byz = 0, total = 0;
    for (const auto& [id, c] : table) {
        total += c;
        if (id_is_byzantine(tr, id)) byz += c;
    }
    return {byz, total};
}

// Identifier that owns a transaction's inputs, resolved against the genesis
// UTXOs and the issued-transaction universe.
inline std::optional<Identifier> input_owner(const TransactionPtr& tx, const TxSet& universe,
                                             const StakeState& s) {
    if (tx->inputs.empty()) return std::nullopt;
    const UtxoRef& in = tx->inputs.front();
    if (in.tx_id.rfind(kGenesisTxId, 0) == 0) {
        for (const auto& [ref, out] : s.genesis_utxos())
            if (ref == in) return out.owner;
        return std::nullopt;
    }
    const TransactionPtr* creator = universe.find(in.tx_id);
    if (!creator || in.index >= (*creator)->outputs.size()) return std::nullopt;
    return (*creator)->outputs[in.index].owner;
}

} // namespace env_detail

// Maximally rho-bounded environment: every transaction reaches an honest
// player no later than its first sending, and every maximal valid set of
// honestly received transactions, at every timeslot through the horizon,
// leaves Byzantine players at most a rho fraction of the stake.
inline EnvCheckResult env_is_maximally_rho_bounded(const ExecutionTrace& tr, const Rational& rho,
                                                   Timeslot horizon, std::size_t cap = 20) {
    EnvCheckResult res;
    std::map<std::string, Timeslot> first_any, first_honest;
    for (const auto& e : tr.env_injections) {
        auto [ita, fa] = first_any.emplace(e.tx->tx_id, e.t);
        if (!fa) ita->second = std::min(ita->second, e.t);
        if (tr.honest_at(e.player, e.t)) {
            auto [ith, fh] = first_honest.emplace(e.tx->tx_id, e.t);
            if (!fh) ith->second = std::min(ith->second, e.t);
        }
    }
    for (const auto& [tx_id, t] : first_any) {
        auto it = first_honest.find(tx_id);
        if (it == first_honest.end() || it->second > t) {
            res.witness = tx_id + " first sent only to Byzantine players at t=" + std::to_string(t);
            return res;
        }
    }

    // Evaluate at each timeslot where the honestly received set grows.
    std::set<Timeslot> change_points;
    for (const auto& e : tr.env_injections) {
        if (tr.honest_at(e.player, e.t) && e.t <= horizon) change_points.insert(e.t);
    }
    TxSet received;
    Timeslot done = 0;
    for (Timeslot t : change_points) {
        for (const auto& e : tr.env_injections) {
            if (e.t > done && e.t <= t && tr.honest_at(e.player, e.t)) received.insert(e.tx);
        }
        done = t;
        auto maximal = maximal_valid_sets(received, tr.stake0, cap);
        if (maximal.refused) {
            res.refused = true;
            res.witness = "maximal-set enumeration refused at t=" + std::to_string(t);
            return res;
        }
        for (const auto& set : maximal.sets) {
            auto [byz, total] = env_detail::byz_split(tr, stake_table(tr.stake0, set));
            if (!share_at_most(byz, tr.stake0.total(), rho)) {
                res.witness = "maximal set at t=" + std::to_string(t) +
                              " gives Byzantine players " + std::to_string(byz) + " of " +
                              std::to_string(tr.stake0.total());
                return res;
            }
            (void)total;
        }
    }
    res.holds = true;
    return res;
}

// rho-bounded environment: initially, and whenever an honest player's
// confirmed set leaves the adversary within rho, the honest transactions
// issued so far have all their prerequisites confirmed, extend the
// confirmed set validly, and still leave the adversary within rho.
inline EnvCheckResult env_is_rho_bounded(const ExecutionTrace& tr, const Rational& rho) {
    EnvCheckResult res;
    {
        auto [byz, total] = env_detail::byz_split(tr, stake_table(tr.stake0, TxSet{}));
        if (!share_at_most(byz, tr.stake0.total(), rho)) {
            res.witness = "initial distribution exceeds rho";
            return res;
        }
        (void)total;
    }
    TxSet universe;
    for (const auto& e : tr.env_injections) universe.insert(e.tx);

    SnapshotIndex idx(tr);
    std::set<Timeslot> points;
    for (const auto& s : tr.confirm_snapshots) points.insert(s.t);
    for (const auto& e : tr.env_injections) points.insert(e.t);

    for (Timeslot t : points) {
        // T2: honest transactions issued by t.
        TxSet t2;
        for (const auto& e : tr.env_injections) {
            if (e.t > t) continue;
            auto owner = env_detail::input_owner(e.tx, universe, tr.stake0);
            if (owner && !env_detail::id_is_byzantine(tr, *owner)) t2.insert(e.tx);
        }
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            if (!tr.honest_at(p, t)) continue;
            const TxSet& t1 = idx.at(p, t);
            if (!is_valid_set(t1, tr.stake0)) continue; // hypothesis (i)
            {
                auto [byz, total] = env_detail::byz_split(tr, stake_table(tr.stake0, t1));
                (void)total;
                if (!share_at_most(byz, tr.stake0.total(), rho)) continue; // hypothesis (ii)
            }
            for (const auto& [tx_id, tx] : t2) {
                auto req = required_set(tx, universe);
                if (!req || !req->subset_of(t1)) {
                    res.witness = "prerequisites of " + tx_id + " not confirmed for player " +
                                  std::to_string(p) + " at t=" + std::to_string(t);
                    return res;
                }
            }
            TxSet joint = t1.merged(t2);
            if (!is_valid_set(joint, tr.stake0)) {
                res.witness = "confirmed set plus honest transactions invalid at t=" +
                              std::to_string(t);
                return res;
            }
            auto [byz, total] = env_detail::byz_split(tr, stake_table(tr.stake0, joint));
            (void)total;
            if (!share_at_most(byz, tr.stake0.total(), rho)) {
                res.witness = "adversary share above rho after honest issuance at t=" +
                              std::to_string(t);
                return res;
            }
        }
    }
    res.holds = true;
    return res;
}

} // namespace plsim
