#pragma once

#include "plsim/hotstuff.hpp"
#include "plsim/trace.hpp"
#include "plsim/transactions.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace plsim::verdicts {

// Trace-level adjudication. Every failing verdict carries a minimal witness
// locatable in the trace.

struct Verdict {
    std::string property;
    bool pass = false;
    bool applicable = true;
    std::string witness;
    std::map<std::string, std::string> params;

    static Verdict passed(std::string prop) { return {std::move(prop), true, true, {}, {}}; }
    static Verdict failed(std::string prop, std::string why) {
        return {std::move(prop), false, true, std::move(why), {}};
    }
    static Verdict not_applicable(std::string prop, std::string why) {
        return {std::move(prop), false, false, std::move(why), {}};
    }
};

namespace detail {

// Transactions carried (at any depth) by each dissemination.
inline std::vector<TransactionPtr> txs_of_message(const Message& m) {
    std::vector<TransactionPtr> out;
    for_each_entry_deep(m, [&](const Entry& e) {
        if (const auto* t = std::get_if<TxEntry>(&e)) out.push_back(t->tx);
    });
    return out;
}

// First timeslot each transaction is received by a then-honest player, via
// the environment or a message.
inline std::map<std::string, Timeslot> first_honest_receipt(const ExecutionTrace& tr) {
    std::map<std::string, Timeslot> first;
    auto note = [&](const std::string& id, Timeslot t) {
        auto [it, fresh] = first.emplace(id, t);
        if (!fresh && t < it->second) it->second = t;
    };
    for (const auto& e : tr.env_injections) {
        if (tr.honest_at(e.player, e.t)) note(e.tx->tx_id, e.t);
    }
    std::unordered_map<std::uint64_t, std::vector<TransactionPtr>> per_diss;
    for (const auto& r : tr.receipts) {
        if (!tr.honest_at(r.receiver, r.t)) continue;
        auto it = per_diss.find(r.dissemination_seq);
        if (it == per_diss.end()) {
            it = per_diss
                     .emplace(r.dissemination_seq,
                              txs_of_message(tr.disseminations[r.dissemination_seq].message))
                     .first;
        }
        for (const auto& tx : it->second) note(tx->tx_id, r.t);
    }
    return first;
}

inline std::string tx_list(const TxSet& s, std::size_t cap = 4) {
    std::string out;
    std::size_t n = 0;
    for (const auto& [id, tx] : s) {
        if (n++) out += ",";
        if (n > cap) {
            out += "...";
            break;
        }
        out += id;
    }
    return out;
}

// First participating timeslot of p at or after t, if any.
inline std::optional<Timeslot> first_step_at_or_after(const ExecutionTrace& tr, PlayerIdx p,
                                                      Timeslot t) {
    for (Timeslot tt = std::max<Timeslot>(t, 1); tt <= tr.duration(); ++tt) {
        if (is_participating(tr.activity_at(p, tt))) return tt;
    }
    return std::nullopt;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

// No roll-backs for any honest player, and pairwise-valid unions of honest
// confirmed sets.
inline Verdict check_consistency(const ExecutionTrace& tr) {
    SnapshotIndex idx(tr);
    // Roll-backs, per player, over the honest snapshot sequence.
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        const auto& snaps = idx.of(p);
        for (std::size_t i = 0; i + 1 < snaps.size(); ++i) {
            if (!snaps[i].second->subset_of(*snaps[i + 1].second)) {
                for (const auto& [id, tx] : *snaps[i].second) {
                    if (!snaps[i + 1].second->contains(id)) {
                        std::ostringstream w;
                        w << "player " << p << " unconfirmed " << id << " between t="
                          << snaps[i].first << " and t=" << snaps[i + 1].first;
                        return Verdict::failed("consistency", w.str());
                    }
                }
            }
            if (!is_valid_set(*snaps[i].second, tr.stake0)) {
                return Verdict::failed("consistency", "invalid confirmed set at player " +
                                                          std::to_string(p));
            }
        }
    }
    // Pairwise unions of final snapshots: with monotone per-player sets this
    // dominates all snapshot pairs.
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        if (!idx.has_any(p)) continue;
        const TxSet& fp = *idx.of(p).back().second;
        for (PlayerIdx q = p + 1; q < tr.player_count(); ++q) {
            if (!idx.has_any(q)) continue;
            const TxSet& fq = *idx.of(q).back().second;
            if (!is_valid_set(fp.merged(fq), tr.stake0)) {
                std::ostringstream w;
                w << "players " << p << " and " << q << " confirm conflicting sets ["
                  << detail::tx_list(fp) << "] vs [" << detail::tx_list(fq) << "]";
                return Verdict::failed("consistency", w.str());
            }
        }
    }
    return Verdict::passed("consistency");
}

// ---------------------------------------------------------------------------
// Liveness
// ---------------------------------------------------------------------------

// Every transaction received by an honest player by t and valid for all
// honest players through t* = max{GST, t} + ell is confirmed for every
// honest player at its first participating timeslot >= t*. Waiting players
// act as if inactive, so "first active" reads active-and-not-waiting.
inline Verdict check_liveness(const ExecutionTrace& tr, Timeslot ell) {
    Verdict v = Verdict::passed("liveness");
    v.params["ell"] = std::to_string(ell);
    SnapshotIndex idx(tr);
    auto first = detail::first_honest_receipt(tr);
    std::map<std::string, TransactionPtr> universe;
    for (const auto& e : tr.env_injections) universe.emplace(e.tx->tx_id, e.tx);

    for (const auto& [tx_id, t_recv] : first) {
        auto uit = universe.find(tx_id);
        if (uit == universe.end()) continue; // protocol-internal artifact
        const TransactionPtr& tx = uit->second;
        Timeslot t_star = std::max(tr.config.gst, t_recv) + ell;
        if (t_star > tr.duration()) continue; // beyond the horizon: exempt

        // Validity hypothesis through t*: confirmed sets only change at
        // snapshot points, so evaluate there.
        bool stays_valid = true;
        for (PlayerIdx p = 0; p < tr.player_count() && stays_valid; ++p) {
            std::vector<Timeslot> points{t_recv};
            for (const auto& [st, conf] : idx.of(p)) {
                if (st > t_recv && st <= t_star) points.push_back(st);
            }
            for (Timeslot tt : points) {
                if (!tr.honest_at(p, tt)) continue;
                const TxSet& conf = idx.at(p, tt);
                if (conf.contains(tx_id)) continue;
                if (!is_valid_set(conf.with(tx), tr.stake0)) {
                    stays_valid = false;
                    break;
                }
            }
        }
        if (!stays_valid) continue; // hypothesis not met: exempt

        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            auto slot = detail::first_step_at_or_after(tr, p, t_star);
            if (!slot || !tr.honest_at(p, *slot)) continue;
            if (!idx.at(p, *slot).contains(tx_id)) {
                std::ostringstream w;
                w << tx_id << " received by t=" << t_recv << " not confirmed for player " << p
                  << " at t=" << *slot << " (t*=" << t_star << ")";
                return Verdict{"liveness", false, true, w.str(), v.params};
            }
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Optimistic responsiveness
// ---------------------------------------------------------------------------

// Realized maximum post-GST delay: the smallest delta such that every
// participating player at t' >= max{GST, send} + delta has received each
// dissemination. Undelivered messages with a qualifying receiver make the
// realized delay undefined.
inline std::optional<Timeslot> realized_delay(const ExecutionTrace& tr) {
    Timeslot delta = 1;
    std::unordered_map<std::uint64_t, std::map<PlayerIdx, Timeslot>> receipt_at;
    for (const auto& r : tr.receipts) receipt_at[r.dissemination_seq][r.receiver] = r.t;
    for (const auto& d : tr.disseminations) {
        const auto& rec = receipt_at[d.seq];
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            if (p == d.sender) continue;
            auto it = rec.find(p);
            if (it != rec.end()) {
                delta = std::max(delta, it->second - std::max(tr.config.gst, d.t));
            } else if (detail::first_step_at_or_after(tr, p, std::max(tr.config.gst, d.t) + 1)) {
                auto last = detail::first_step_at_or_after(tr, p, tr.duration());
                (void)last;
                // A receiver that participates after the bound but never got
                // the message: the realized delay is undefined.
                return std::nullopt;
            }
        }
    }
    return delta;
}

inline Verdict check_optimistic_responsiveness(const ExecutionTrace& tr,
                                               const std::function<Timeslot(Timeslot)>& ell_of_delta,
                                               Timeslot delta_star) {
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        if (tr.ever_byzantine(p))
            return Verdict::not_applicable("optimistic-responsiveness",
                                           "defined for all-honest executions only");
    }
    auto delta = realized_delay(tr);
    if (!delta)
        return Verdict::not_applicable("optimistic-responsiveness",
                                       "realized delay undefined (undelivered messages)");
    Timeslot ell = ell_of_delta(*delta);
    SnapshotIndex idx(tr);
    auto first = detail::first_honest_receipt(tr);
    std::map<std::string, TransactionPtr> universe;
    for (const auto& e : tr.env_injections) universe.emplace(e.tx->tx_id, e.tx);

    Verdict v = Verdict::passed("optimistic-responsiveness");
    v.params["delta"] = std::to_string(*delta);
    v.params["ell"] = std::to_string(ell);
    v.params["delta_star"] = std::to_string(delta_star);

    for (const auto& [tx_id, t_recv] : first) {
        auto uit = universe.find(tx_id);
        if (uit == universe.end()) continue;
        const TransactionPtr& tx = uit->second;
        Timeslot t_star = std::max(tr.config.gst + delta_star, t_recv) + ell;
        if (t_star > tr.duration()) continue;
        bool stays_valid = true;
        for (PlayerIdx p = 0; p < tr.player_count() && stays_valid; ++p) {
            std::vector<Timeslot> points{t_recv};
            for (const auto& [st, conf] : idx.of(p)) {
                if (st > t_recv && st <= t_star) points.push_back(st);
            }
            for (Timeslot tt : points) {
                const TxSet& conf = idx.at(p, tt);
                if (!conf.contains(tx_id) && !is_valid_set(conf.with(tx), tr.stake0)) {
                    stays_valid = false;
                    break;
                }
            }
        }
        if (!stays_valid) continue;
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            auto slot = detail::first_step_at_or_after(tr, p, t_star);
            if (!slot) continue;
            if (!idx.at(p, *slot).contains(tx_id)) {
                std::ostringstream w;
                w << tx_id << " not confirmed for player " << p << " by t=" << *slot
                  << " (t*=" << t_star << ", realized delay " << *delta << ")";
                return Verdict{"optimistic-responsiveness", false, true, w.str(), v.params};
            }
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Accountability
// ---------------------------------------------------------------------------

// All votes carried by a message set, at any depth.
inline std::vector<hotstuff::VotePtr> collect_votes(const std::vector<Message>& msgs) {
    hotstuff::wire::Decoder dec;
    std::vector<hotstuff::VotePtr> out;
    std::set<Digest> seen;
    std::unordered_set<Digest, DigestHash> visited;
    std::function<void(const Entry&)> walk = [&](const Entry& e) {
        if (auto v = dec.decode_vote(e)) {
            if (seen.insert(v->digest).second) out.push_back(v);
        }
        if (auto b = dec.decode_block(e)) {
            if (!b->is_genesis()) {
                for (const auto& v : b->qc)
                    if (seen.insert(v->digest).second) out.push_back(v);
            }
        }
        if (auto r = dec.decode_view_msg(e)) {
            for (const auto& v : r->qc)
                if (seen.insert(v->digest).second) out.push_back(v);
        }
        const ValuePtr* val = entry_value(e);
        if (val && (*val)->is_tuple() && visited.insert((*val)->digest()).second) {
            for (const auto& sub : (*val)->entries()) walk(sub);
        }
    };
    for (const auto& m : msgs) {
        for (const auto& e : m) walk(e);
    }
    return out;
}

// The blame function: identifiers with a stage-3 vote for B and a stage-1
// vote for an incompatible B' in the same epoch, where the stage-1 vote's
// view is no earlier and its block's justifying QC is from before the
// stage-3 vote's view. Never blames honest identifiers.
inline std::set<Identifier> blame(const std::vector<Message>& msgs) {
    auto votes = collect_votes(msgs);
    std::map<Identifier, std::vector<hotstuff::VotePtr>> by_id;
    for (const auto& v : votes) by_id[v->voter].push_back(v);
    std::set<Identifier> out;
    for (const auto& [id, vs] : by_id) {
        bool guilty = false;
        for (const auto& v3 : vs) {
            if (guilty) break;
            if (v3->stage != 3) continue;
            for (const auto& v1 : vs) {
                if (v1->stage != 1) continue;
                if (v1->block->digest == v3->block->digest) continue;           // F2
                if (v1->block->epoch != v3->block->epoch) continue;             // F3
                if (v3->block->view > v1->block->view) continue;                // F3
                if (v1->block->parent->view >= v3->block->view) continue;       // F4
                guilty = true;
                break;
            }
        }
        if (guilty) out.insert(id);
    }
    return out;
}

// Every vote disseminated in a trace (blame inputs come from the union of
// disseminated messages).
inline std::vector<Message> disseminated_messages(const ExecutionTrace& tr) {
    std::vector<Message> out;
    out.reserve(tr.disseminations.size());
    for (const auto& d : tr.disseminations) out.push_back(d.message);
    return out;
}

// ---------------------------------------------------------------------------
// Identifier-set weight
// ---------------------------------------------------------------------------

// All valid subsets of a set, by DFS with dedup; refuses beyond the cap.
inline std::optional<std::vector<TxSet>> enumerate_valid_subsets(const TxSet& base,
                                                                 const StakeState& s,
                                                                 std::size_t cap = 20) {
    if (base.size() > cap) return std::nullopt;
    std::vector<TransactionPtr> all = base.items();
    std::set<std::string> visited;
    std::vector<TxSet> out;
    std::vector<TxSet> stack{TxSet{}};
    visited.insert(TxSet{}.digest().hex());
    while (!stack.empty()) {
        TxSet cur = std::move(stack.back());
        stack.pop_back();
        out.push_back(cur);
        for (const auto& tx : all) {
            if (cur.contains(tx)) continue;
            TxSet ext = cur.with(tx);
            if (!is_valid_set(ext, s)) continue;
            if (visited.insert(ext.digest().hex()).second) stack.push_back(ext);
        }
    }
    return out;
}

struct WeightResult {
    bool at_least = false;
    bool refused = false; // subset search exceeded the cap
    std::string witness;
};

// Weight of an identifier set: share of some permitter's resources at some
// timeslot, or the stake share under some valid subset of an honest
// confirmed set. `witness_sets` short-circuits the subset search.
inline WeightResult weight_at_least(const std::set<Identifier>& ids, const Rational& rho1,
                                    const ExecutionTrace& tr,
                                    const std::vector<TxSet>& witness_sets = {},
                                    std::size_t subset_cap = 20) {
    WeightResult res;
    // Players controlling at least one identifier in the set.
    std::vector<bool> controls(tr.player_count(), false);
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        for (const auto& id : tr.players[p].identifiers) {
            if (ids.count(id)) controls[p] = true;
        }
    }
    for (const auto& sched : tr.resources) {
        for (Timeslot t = 1; t <= tr.duration(); ++t) {
            std::int64_t mine = 0, total = 0;
            for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
                if (static_cast<std::size_t>(t) >= sched.balance[p].size()) continue;
                std::int64_t b = sched.balance[p][static_cast<std::size_t>(t)];
                total += b;
                if (controls[p]) mine += b;
            }
            if (total > 0 && share_at_least(mine, total, rho1)) {
                res.at_least = true;
                res.witness = "permitter " + sched.oracle + " at t=" + std::to_string(t);
                return res;
            }
        }
    }
    const Stake total = tr.stake0.total();
    auto check_set = [&](const TxSet& t_prime, const char* kind) {
        if (!is_valid_set(t_prime, tr.stake0)) return false;
        auto table = stake_table(tr.stake0, t_prime);
        Stake mine = 0;
        for (const auto& [id, c] : table)
            if (ids.count(id)) mine += c;
        if (share_at_least(mine, total, rho1)) {
            res.at_least = true;
            res.witness = std::string(kind) + " [" + detail::tx_list(t_prime) + "]";
            return true;
        }
        return false;
    };
    for (const auto& w : witness_sets) {
        if (check_set(w, "witness subset")) return res;
    }
    SnapshotIndex idx(tr);
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        if (!idx.has_any(p) || tr.players[p].initially_byzantine) continue;
        const TxSet& conf = *idx.of(p).back().second;
        if (check_set(TxSet{}, "empty subset of confirmed set")) return res;
        if (check_set(conf, "full confirmed set")) return res;
        auto subsets = enumerate_valid_subsets(conf, tr.stake0, subset_cap);
        if (!subsets) {
            res.refused = true;
            continue;
        }
        for (const auto& sub : *subsets) {
            if (check_set(sub, "confirmed subset")) return res;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Byzantine agreement
// ---------------------------------------------------------------------------

struct BaVerdicts {
    Verdict termination;
    Verdict agreement;
    Verdict validity;
};

inline BaVerdicts check_ba(const ExecutionTrace& tr) {
    BaVerdicts out{Verdict::passed("ba-termination"), Verdict::passed("ba-agreement"),
                   Verdict::passed("ba-validity")};

    std::map<PlayerIdx, OutputEvent> honest_outputs;
    for (const auto& o : tr.outputs) {
        if (tr.honest_at(o.player, o.t)) honest_outputs.emplace(o.player, o);
    }

    if (honest_outputs.empty()) {
        out.termination = Verdict::failed(
            "ba-termination", "no honest player output within the finite horizon d=" +
                                  std::to_string(tr.duration()));
    } else {
        Timeslot t_star = 0;
        for (const auto& [p, o] : honest_outputs) t_star = std::max(t_star, o.t);
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            if (tr.ever_byzantine(p)) continue;
            bool active_late = false;
            for (Timeslot t = t_star; t <= tr.duration() && !active_late; ++t)
                if (is_active(tr.activity_at(p, t))) active_late = true;
            if (active_late && !honest_outputs.count(p)) {
                out.termination = Verdict::failed(
                    "ba-termination", "player " + std::to_string(p) +
                                          " active after t*=" + std::to_string(t_star) +
                                          " never output (finite-horizon check)");
                break;
            }
        }
    }

    std::optional<int> value;
    for (const auto& [p, o] : honest_outputs) {
        if (!value) value = o.value;
        if (*value != o.value) {
            out.agreement = Verdict::failed("ba-agreement",
                                            "players output both " + std::to_string(*value) +
                                                " and " + std::to_string(o.value));
            break;
        }
    }

    bool unanimous = true;
    int common = -1;
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        int in = tr.protocol_inputs[p];
        if (in < 0) continue;
        if (common < 0) common = in;
        if (in != common) unanimous = false;
    }
    if (unanimous && common >= 0) {
        for (const auto& [p, o] : honest_outputs) {
            if (o.value != common) {
                out.validity = Verdict::failed(
                    "ba-validity", "unanimous input " + std::to_string(common) + " but player " +
                                       std::to_string(p) + " output " + std::to_string(o.value));
                break;
            }
        }
    }
    return out;
}

} // namespace plsim::verdicts
