#pragma once

#include "plsim/engine.hpp"
#include "plsim/message.hpp"
#include "plsim/transactions.hpp"
#include "plsim/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace plsim::lg {

// Deterministic Byzantine agreement for the dynamically available,
// unauthenticated, synchronous setting, tolerating crash/delay faults on a
// strict minority of the stake units ("coins"). Rounds are the timeslots
// r*delta; the protocol runs N* = ceil(N/2) + 1 rounds of coin-weighted
// attestations and decides by strict majorities among active coins.

// Stake units numbered 1..N in ascending (identifier, unit) order.
struct CoinLedger {
    std::vector<Identifier> owner_by_coin; // index 0 unused
    std::map<Identifier, std::vector<int>> coins_of;

    explicit CoinLedger(const StakeState& s) {
        owner_by_coin.push_back({});
        for (const auto& [id, stake] : s.initial()) {
            for (Stake u = 0; u < stake; ++u) {
                coins_of[id].push_back(static_cast<int>(owner_by_coin.size()));
                owner_by_coin.push_back(id);
            }
        }
    }

    int total() const { return static_cast<int>(owner_by_coin.size()) - 1; }
    int final_round() const { return (total() + 1) / 2 + 1; } // N* = ceil(N/2)+1
};

// A length-r attestation (c, r, inner): inner is the protocol input bit when
// r = 1 and a length-(r-1) attestation otherwise. Parsed form keeps the coin
// sequence outermost-first.
struct Attestation {
    std::vector<int> coins; // outermost (most recently added) first
    int bit = 0;

    int length() const { return static_cast<int>(coins.size()); }
    int outer_coin() const { return coins.front(); }

    bool coins_distinct() const {
        std::set<int> s(coins.begin(), coins.end());
        return s.size() == coins.size();
    }
    bool contains_coin(int c) const {
        return std::find(coins.begin(), coins.end(), c) != coins.end();
    }
};

namespace wire {

inline Entry encode_activity(int coin, int round) {
    return general(Value::tuple(
        Message{general_atom("act"), general_i64(coin), general_i64(round)}));
}

inline Entry encode_attestation(const Attestation& a) {
    // Innermost outward: bit, then wrap per coin.
    Entry inner = general_i64(a.bit);
    for (int i = a.length() - 1; i >= 0; --i) {
        inner = general(Value::tuple(Message{general_atom("att"), general_i64(a.coins[i]),
                                             general_i64(a.length() - i), inner}));
    }
    return inner;
}

inline std::optional<std::pair<int, int>> decode_activity(const Entry& e) {
    const auto* g = std::get_if<GeneralEntry>(&e);
    if (!g || !g->v->is_tuple()) return std::nullopt;
    const auto& parts = g->v->entries();
    if (parts.size() != 3) return std::nullopt;
    const auto* m = std::get_if<GeneralEntry>(&parts[0]);
    if (!m || m->v->is_tuple() || m->v->atom_bytes() != "act") return std::nullopt;
    const auto* c = std::get_if<GeneralEntry>(&parts[1]);
    const auto* r = std::get_if<GeneralEntry>(&parts[2]);
    if (!c || !r || c->v->is_tuple() || r->v->is_tuple()) return std::nullopt;
    return std::make_pair(std::stoi(c->v->atom_bytes()), std::stoi(r->v->atom_bytes()));
}

inline std::optional<Attestation> decode_attestation(const Entry& e) {
    Attestation a;
    const Entry* cur = &e;
    while (true) {
        const auto* g = std::get_if<GeneralEntry>(cur);
        if (!g) return std::nullopt;
        if (!g->v->is_tuple()) {
            const std::string& atom = g->v->atom_bytes();
            if (atom != "0" && atom != "1") return std::nullopt;
            a.bit = atom == "1" ? 1 : 0;
            break;
        }
        const auto& parts = g->v->entries();
        if (parts.size() != 4) return std::nullopt;
        const auto* m = std::get_if<GeneralEntry>(&parts[0]);
        if (!m || m->v->is_tuple() || m->v->atom_bytes() != "att") return std::nullopt;
        const auto* c = std::get_if<GeneralEntry>(&parts[1]);
        if (!c || c->v->is_tuple()) return std::nullopt;
        a.coins.push_back(std::stoi(c->v->atom_bytes()));
        cur = &parts[3];
    }
    if (a.coins.empty()) return std::nullopt;
    return a;
}

} // namespace wire

// The message set relevant to outputs: activity coins per round, and
// attestations in arrival order.
struct BaView {
    std::map<int, std::set<int>> active_coins; // round -> coins
    std::vector<Attestation> attestations;     // arrival order
    std::set<std::string> seen;                // dedup key

    void ingest(const Message& m) {
        for (const auto& e : m) {
            if (auto act = wire::decode_activity(e)) {
                active_coins[act->second].insert(act->first);
                continue;
            }
            if (auto att = wire::decode_attestation(e)) {
                if (!att->coins_distinct()) continue; // malformed
                std::string key = std::to_string(att->bit);
                for (int c : att->coins) key += "," + std::to_string(c);
                if (seen.insert(key).second) attestations.push_back(*att);
            }
        }
    }
};

// Coins attested to b by attestations of length <= r (outermost coin counts).
inline std::set<int> attesting_coins(const BaView& view, int r, int b) {
    std::set<int> out;
    for (const auto& a : view.attestations) {
        if (a.bit == b && a.length() <= r) out.insert(a.outer_coin());
    }
    return out;
}

// Strict majority of the round-r active coins attest to b, for some round
// r in 1..N*.
inline bool convinced(const BaView& view, int b, int final_round) {
    for (int r = 1; r <= final_round; ++r) {
        auto it = view.active_coins.find(r);
        if (it == view.active_coins.end() || it->second.empty()) continue;
        std::set<int> v = attesting_coins(view, r, b);
        std::size_t overlap = 0;
        for (int c : it->second)
            if (v.count(c)) ++overlap;
        if (2 * overlap > it->second.size()) return true;
    }
    return false;
}

// Output rule: the uniquely convincing bit, or the default 0.
inline int ba_output(const BaView& view, int final_round) {
    bool c0 = convinced(view, 0, final_round);
    bool c1 = convinced(view, 1, final_round);
    if (c0 != c1) return c1 ? 1 : 0;
    return 0;
}

// ---------------------------------------------------------------------------
// Node behavior
// ---------------------------------------------------------------------------

struct BaParams {
    CoinLedger ledger;
    Timeslot delta = 2;
    std::vector<int> my_coins;
    int input = 0;

    // Crash/delay fault model: the only deviations available to faulty
    // players. A crashed player stops acting at its crash round; delayed
    // rounds disseminate late but unmodified.
    std::optional<int> crash_at_round;
    std::map<int, Timeslot> delay_by_round; // extra timeslots per round
};

// Messages the honest instructions emit for one round.
inline std::vector<Message> ba_round_step(const BaParams& p, int round, const BaView& view,
                                          std::array<bool, 2>& attested) {
    std::vector<Message> out;
    const int n_star = p.ledger.final_round();
    if (round < 1 || round > n_star) return out;
    for (int c : p.my_coins) out.push_back(Message{wire::encode_activity(c, round)});
    if (round == 1) {
        for (int c : p.my_coins) {
            Attestation a;
            a.coins = {c};
            a.bit = p.input;
            out.push_back(Message{wire::encode_attestation(a)});
        }
        attested[static_cast<std::size_t>(p.input)] = true;
        return out;
    }
    for (int b = 0; b <= 1; ++b) {
        if (attested[static_cast<std::size_t>(b)]) continue;
        // First-seen attestation of length round-1 to b.
        const Attestation* base = nullptr;
        for (const auto& a : view.attestations) {
            if (a.bit == b && a.length() == round - 1) {
                base = &a;
                break;
            }
        }
        if (!base) continue;
        bool any = false;
        for (int c : p.my_coins) {
            if (base->contains_coin(c)) continue;
            Attestation ext;
            ext.coins.push_back(c);
            for (int cc : base->coins) ext.coins.push_back(cc);
            ext.bit = b;
            out.push_back(Message{wire::encode_attestation(ext)});
            any = true;
        }
        if (any) attested[static_cast<std::size_t>(b)] = true;
    }
    return out;
}

class BaBehavior : public Behavior {
public:
    explicit BaBehavior(BaParams p) : p_(std::move(p)) {}

    void on_timeslot(StepIo& io) override {
        Timeslot t = io.now(); // this protocol runs with known timeslots
        for (const auto& r : io.receipts()) view_.ingest(r.msg);

        const int n_star = p_.ledger.final_round();
        if (t % p_.delta == 0) {
            int round = static_cast<int>(t / p_.delta);
            if (round >= 1 && round <= n_star && !crashed(round)) {
                auto msgs = ba_round_step(p_, round, view_, attested_);
                Timeslot extra = 0;
                if (auto it = p_.delay_by_round.find(round); it != p_.delay_by_round.end())
                    extra = it->second;
                if (extra == 0) {
                    for (auto& m : msgs) io.disseminate(std::move(m));
                } else {
                    for (auto& m : msgs) held_.push_back({t + extra, std::move(m)});
                }
            }
        }
        // Delayed disseminations fall due on the player's own clock.
        for (auto it = held_.begin(); it != held_.end();) {
            if (it->first <= t && !crashed_now(t)) {
                io.disseminate(std::move(it->second));
                it = held_.erase(it);
            } else {
                ++it;
            }
        }
        if (!output_ && t >= (n_star + 1) * p_.delta) {
            output_ = ba_output(view_, n_star);
        }
    }

    std::optional<int> output() const override { return output_; }
    const BaView& view() const { return view_; }

private:
    bool crashed(int round) const { return p_.crash_at_round && round >= *p_.crash_at_round; }
    bool crashed_now(Timeslot t) const {
        return p_.crash_at_round && t >= *p_.crash_at_round * p_.delta;
    }

    BaParams p_;
    BaView view_;
    std::array<bool, 2> attested_{false, false};
    std::vector<std::pair<Timeslot, Message>> held_;
    std::optional<int> output_;
};

} // namespace plsim::lg
