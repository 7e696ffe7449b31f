#pragma once

#include "plsim/config.hpp"

#include <algorithm>
#include "plsim/message.hpp"
#include "plsim/rng.hpp"
#include "plsim/transactions.hpp"
#include "plsim/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace plsim {

// Total ordered record of one execution: disseminations, receipts, oracle
// traffic, environment injections, confirmed-set snapshots, outputs, and
// flagged anomalies. Consumed by every verdict and setting checker.

struct PlayerInfo {
    std::string name;
    std::vector<Identifier> identifiers;
    bool initially_byzantine = false;
    std::optional<Timeslot> corrupted_at; // becomes Byzantine from this timeslot
};

struct DisseminationEvent {
    std::uint64_t seq = 0;
    Timeslot t = 0;
    PlayerIdx sender = kNoPlayer;
    Digest msg_digest;
    Message message;
    int delivery_class = 0; // adversarial routing tag; 0 for honest traffic
};

struct ReceiptEvent {
    Timeslot t = 0;
    PlayerIdx receiver = kNoPlayer;
    std::uint64_t dissemination_seq = 0; // index into disseminations
};

struct OracleQueryEvent {
    Timeslot t = 0;
    PlayerIdx player = kNoPlayer;
    OracleId oracle;
    Digest query_digest;
    std::int64_t weight = -1; // b for permitter queries, -1 otherwise
};

struct OracleResponseEvent {
    Timeslot queried_at = 0;
    Timeslot delivered_at = 0;
    PlayerIdx player = kNoPlayer;
    OracleId oracle;
    Digest response_digest;
    Message response;
};

struct EnvInjectEvent {
    Timeslot t = 0;
    PlayerIdx player = kNoPlayer;
    TransactionPtr tx;
};

struct ConfirmSnapshot {
    Timeslot t = 0;
    PlayerIdx player = kNoPlayer;
    TxSet confirmed;
};

struct OutputEvent {
    Timeslot t = 0;
    PlayerIdx player = kNoPlayer;
    int value = 0;
};

struct FlagEvent {
    Timeslot t = 0;
    PlayerIdx player = kNoPlayer;
    std::string kind; // "budget-violation", "loop-cap", "permission-drop",
                      // "epoch-genesis-incompatible", ...
    std::string detail;
};

struct CorruptionEvent {
    Timeslot t = 0;
    std::vector<PlayerIdx> players;
};

// One honest observer's view of who owns a protocol-defined resource.
struct ResourceOwnersSnapshot {
    Timeslot t = 0;
    PlayerIdx observer = kNoPlayer;
    std::string resource;
    std::set<Identifier> owners;
};

struct ExecutionTrace {
    ExecutionConfig config;
    std::vector<PlayerInfo> players;
    StakeState stake0;
    std::vector<int> protocol_inputs; // per player; -1 if none

    // activity[p][t] for t in 1..duration (index t, slot 0 unused).
    std::vector<std::vector<Activity>> activity;

    std::vector<DisseminationEvent> disseminations;
    std::vector<ReceiptEvent> receipts;
    std::vector<OracleQueryEvent> oracle_queries;
    std::vector<OracleResponseEvent> oracle_responses;
    std::vector<EnvInjectEvent> env_injections;
    std::vector<ConfirmSnapshot> confirm_snapshots;
    std::vector<OutputEvent> outputs;
    std::vector<FlagEvent> flags;
    std::vector<CorruptionEvent> corruptions;
    std::vector<ResourceOwnersSnapshot> resource_snapshots;

    // External-resource balances per permitter, realized over the run.
    struct ResourceSchedule {
        OracleId oracle;
        std::vector<std::vector<std::int64_t>> balance; // [player][t]
    };
    std::vector<ResourceSchedule> resources;

    Digest trace_hash;

    Timeslot duration() const { return config.duration; }
    PlayerIdx player_count() const { return static_cast<PlayerIdx>(players.size()); }

    bool is_byzantine_at(PlayerIdx p, Timeslot t) const {
        const auto& info = players[p];
        if (info.initially_byzantine) return true;
        return info.corrupted_at && t >= *info.corrupted_at;
    }
    bool ever_byzantine(PlayerIdx p) const {
        return players[p].initially_byzantine || players[p].corrupted_at.has_value();
    }
    // Honest-for-verdict purposes: a corrupted player's pre-corruption
    // snapshots still count as honest observations.
    bool honest_at(PlayerIdx p, Timeslot t) const { return !is_byzantine_at(p, t); }

    Activity activity_at(PlayerIdx p, Timeslot t) const {
        if (t < 1 || t >= static_cast<Timeslot>(activity[p].size())) return Activity::Inactive;
        return activity[p][static_cast<std::size_t>(t)];
    }

    PlayerIdx owner_of(const Identifier& id) const {
        for (PlayerIdx p = 0; p < player_count(); ++p) {
            for (const auto& i : players[p].identifiers)
                if (i == id) return p;
        }
        return kNoPlayer;
    }

    // Confirmed set of player p as of timeslot t (last snapshot <= t).
    const TxSet* confirmed_at(PlayerIdx p, Timeslot t) const {
        const TxSet* best = nullptr;
        Timeslot best_t = -1;
        for (const auto& s : confirm_snapshots) {
            if (s.player == p && s.t <= t && s.t >= best_t) {
                best = &s.confirmed;
                best_t = s.t;
            }
        }
        return best;
    }

    void finalize_hash() {
        Digest h = digest_bytes("trace", config.seed);
        for (const auto& d : disseminations) {
            h = digest_combine(h, digest_bytes("d", static_cast<std::uint64_t>(d.t)));
            h = digest_combine(h, digest_bytes("p", d.sender));
            h = digest_combine(h, d.msg_digest);
        }
        for (const auto& r : receipts) {
            h = digest_combine(h, digest_bytes("r", static_cast<std::uint64_t>(r.t)));
            h = digest_combine(h, digest_bytes("p", r.receiver));
            h = digest_combine(h, digest_bytes("s", r.dissemination_seq));
        }
        for (const auto& o : oracle_responses) {
            h = digest_combine(h, digest_bytes("o", static_cast<std::uint64_t>(o.delivered_at)));
            h = digest_combine(h, o.response_digest);
        }
        for (const auto& c : confirm_snapshots) {
            h = digest_combine(h, digest_bytes("c", static_cast<std::uint64_t>(c.t)));
            h = digest_combine(h, digest_bytes("p", c.player));
            h = digest_combine(h, c.confirmed.digest());
        }
        for (const auto& o : outputs) {
            h = digest_combine(h, digest_bytes("out", static_cast<std::uint64_t>(o.t)));
            h = digest_combine(h, digest_bytes("p", o.player));
            h = digest_combine(h, digest_bytes("v", static_cast<std::uint64_t>(o.value)));
        }
        for (const auto& f : flags) {
            h = digest_combine(h, digest_bytes(f.kind, static_cast<std::uint64_t>(f.t)));
        }
        trace_hash = h;
    }
};

// Binary-searchable index over confirmed-set snapshots.
class SnapshotIndex {
public:
    explicit SnapshotIndex(const ExecutionTrace& tr) : per_player_(tr.player_count()) {
        for (const auto& s : tr.confirm_snapshots)
            per_player_[s.player].push_back({s.t, &s.confirmed});
        for (auto& v : per_player_)
            std::sort(v.begin(), v.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    // Confirmed set of p as of t; the empty set before the first snapshot.
    const TxSet& at(PlayerIdx p, Timeslot t) const {
        static const TxSet kEmpty;
        const auto& v = per_player_[p];
        auto it = std::upper_bound(v.begin(), v.end(), t, [](Timeslot tt, const auto& e) {
            return tt < e.first;
        });
        if (it == v.begin()) return kEmpty;
        return *std::prev(it)->second;
    }

    bool has_any(PlayerIdx p) const { return !per_player_[p].empty(); }
    const std::vector<std::pair<Timeslot, const TxSet*>>& of(PlayerIdx p) const {
        return per_player_[p];
    }

private:
    std::vector<std::vector<std::pair<Timeslot, const TxSet*>>> per_player_;
};

// Caches stake tables per transaction-set digest; checkers re-evaluate the
// same confirmed sets many times.
class StakeTableCache {
public:
    explicit StakeTableCache(const StakeState& s) : s_(&s) {}
    const std::map<Identifier, Stake>& table_for(const TxSet& txs) {
        Digest key = txs.digest();
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(key, stake_table(*s_, txs)).first->second;
    }

private:
    const StakeState* s_;
    std::map<Digest, std::map<Identifier, Stake>> cache_;
};

// Per-player observable stream, used for the mechanical prefix-
// indistinguishability checks in the proof-replay scenarios: what p saw,
// timeslot by timeslot.
inline Digest view_prefix_digest(const ExecutionTrace& tr, PlayerIdx p, Timeslot through) {
    struct Item {
        Timeslot t;
        int kind;
        Digest d;
    };
    std::vector<Item> items;
    for (const auto& r : tr.receipts) {
        if (r.receiver == p && r.t <= through)
            items.push_back({r.t, 0, tr.disseminations[r.dissemination_seq].msg_digest});
    }
    for (const auto& e : tr.env_injections) {
        if (e.player == p && e.t <= through) items.push_back({e.t, 1, transaction_digest(e.tx)});
    }
    for (const auto& o : tr.oracle_responses) {
        if (o.player == p && o.delivered_at <= through)
            items.push_back({o.delivered_at, 2, o.response_digest});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.d < b.d;
    });
    Digest h = digest_bytes("view", p);
    for (const auto& it : items) {
        h = digest_combine(h, digest_bytes("t", static_cast<std::uint64_t>(it.t)));
        h = digest_combine(h, it.d);
    }
    return h;
}

} // namespace plsim
