#pragma once

#include "plsim/oracles.hpp"
#include "plsim/rng.hpp"
#include "plsim/transactions.hpp"
#include "plsim/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace plsim {

// ---------------------------------------------------------------------------
// Resource allocations
// ---------------------------------------------------------------------------

// R(p,t) for one permitter. Must be zero whenever p is inactive, and the
// per-timeslot totals must stay within [1, R_max] up to the horizon.
struct ResourceAllocation {
    std::function<std::int64_t(PlayerIdx, Timeslot)> balance;

    std::int64_t total_at(Timeslot t, PlayerIdx player_count) const {
        std::int64_t sum = 0;
        for (PlayerIdx p = 0; p < player_count; ++p) sum += balance(p, t);
        return sum;
    }
};

// Checks every allocation in the set: totals in [1, R_max] and Byzantine
// share <= rho at every timeslot through the horizon.
inline bool rho_bounded_external(const std::vector<ResourceAllocation>& allocations,
                                 const std::vector<bool>& byzantine, const Rational& rho,
                                 std::int64_t r_max, Timeslot horizon) {
    PlayerIdx n = static_cast<PlayerIdx>(byzantine.size());
    for (const auto& alloc : allocations) {
        for (Timeslot t = 1; t <= horizon; ++t) {
            std::int64_t total = 0, byz = 0;
            for (PlayerIdx p = 0; p < n; ++p) {
                std::int64_t b = alloc.balance(p, t);
                if (b < 0) return false;
                total += b;
                if (byzantine[p]) byz += b;
            }
            if (total < 1 || total > r_max) return false;
            if (!share_at_most(byz, total, rho)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Query budgets
// ---------------------------------------------------------------------------

enum class PermitterMode { SingleUse, MultiUse };

// Single-use: the b's of all queries in a timeslot sum to at most R(p,t).
// Multi-use: each individual b is at most R(p,t). Applies to Byzantine
// players too; violating queries are dropped.
inline bool check_query_budget(std::int64_t balance, std::int64_t spent_so_far,
                               std::int64_t new_b, PermitterMode mode) {
    if (new_b < 0) return false;
    switch (mode) {
        case PermitterMode::SingleUse: return spent_so_far + new_b <= balance;
        case PermitterMode::MultiUse: return new_b <= balance;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Permitter oracles
// ---------------------------------------------------------------------------

class PermitterSpec : public OracleSpec {
public:
    bool is_permitter() const override { return true; }
    virtual PermitterMode mode() const = 0;

    // Extracts b from a well-formed (b, sigma) query; nullopt if malformed.
    static std::optional<std::int64_t> query_weight(const Query& q) {
        if (q.empty()) return std::nullopt;
        const auto* g = std::get_if<GeneralEntry>(&q[0]);
        if (!g || g->v->is_tuple()) return std::nullopt;
        try {
            return std::stoll(g->v->atom_bytes());
        } catch (...) {
            return std::nullopt;
        }
    }
};

// --- Proof of work ------------------------------------------------------

// Single-use permitter. A query (b, sigma) at t samples b independent
// uniform 256-bit strings keyed by (seed, b, sigma, t) and responds with
// (sigma, tau) where tau is the lexicographically smallest; re-querying the
// same triple returns the identical tau.
class PowOracle final : public PermitterSpec {
public:
    explicit PowOracle(OracleId oid = "pow") : id_(std::move(oid)) {}

    const OracleId& id() const override { return id_; }
    PermitterMode mode() const override { return PermitterMode::SingleUse; }
    bool declared_time_malleable() const override { return false; }

    static Query make_query(std::int64_t b, ValuePtr sigma) {
        return Query{general_i64(b), general(std::move(sigma))};
    }

    static Word256 sample_tau(std::uint64_t seed, const OracleId& oid, std::int64_t b,
                              const Digest& sigma_digest, Timeslot t) {
        std::uint64_t k = hash_bytes(oid, seed);
        k = hash_combine(k, static_cast<std::uint64_t>(b));
        k = hash_combine(k, sigma_digest.hi);
        k = hash_combine(k, sigma_digest.lo);
        k = hash_combine(k, static_cast<std::uint64_t>(t));
        KeyedRng rng(k);
        Word256 best = sample_word256(rng);
        for (std::int64_t i = 1; i < b; ++i) {
            Word256 w = sample_word256(rng);
            if (w < best) best = w;
        }
        return best;
    }

    OracleResponse respond(const Query& q, Timeslot t, std::uint64_t seed) const override {
        auto b = query_weight(q);
        if (!b || *b < 1 || q.size() != 2) return {};
        Digest sd = entry_digest(q[1]);
        Word256 tau = sample_tau(seed, id_, *b, sd, t);
        Message out{oracle_entry(
            id_, Value::tuple(Message{q[1], general_atom(tau.hex())}))};
        return {std::move(out), t};
    }

    std::vector<Query> probe_queries() const override {
        return {make_query(1, Value::atom("probe"))};
    }

private:
    OracleId id_;
};

// Quality accessor for longest-chain-style baselines: leading zero bits of
// the tau carried by a PoW response entry.
inline std::optional<int> pow_response_quality(const Message& response) {
    if (response.size() != 1) return std::nullopt;
    const auto* o = std::get_if<OracleEntry>(&response[0]);
    if (!o || !o->v->is_tuple() || o->v->entries().size() != 2) return std::nullopt;
    const auto* tau_e = std::get_if<GeneralEntry>(&o->v->entries()[1]);
    if (!tau_e || tau_e->v->is_tuple()) return std::nullopt;
    const std::string& hex = tau_e->v->atom_bytes();
    int zeros = 0;
    for (char c : hex) {
        int nibble = (c <= '9') ? c - '0' : c - 'a' + 10;
        if (nibble == 0) {
            zeros += 4;
            continue;
        }
        for (int bit = 3; bit >= 0 && !((nibble >> bit) & 1); --bit) ++zeros;
        break;
    }
    return zeros;
}

// --- Proof of space -----------------------------------------------------

// Multi-use permitter. A query (1, (id, y)) yields the proof set X(id, y),
// sampled once per (id, y) pair: the proof count follows Poisson(1), the
// canonical law with P(|X| >= 1) = 1 - 1/e and E[|X|] = 1. Proofs are
// opaque tokens derived from (seed, id, y, index).
class PospOracle final : public PermitterSpec {
public:
    explicit PospOracle(OracleId oid = "posp") : id_(std::move(oid)) {}

    const OracleId& id() const override { return id_; }
    PermitterMode mode() const override { return PermitterMode::MultiUse; }
    bool declared_time_malleable() const override { return true; }

    static Query make_query(Identifier id, ValuePtr challenge) {
        return Query{general_i64(1),
                     signed_entry(std::move(id), std::move(challenge))};
    }

    OracleResponse respond(const Query& q, Timeslot t, std::uint64_t seed) const override {
        auto b = query_weight(q);
        if (!b || *b != 1 || q.size() != 2) return {};
        const auto* se = std::get_if<SignedEntry>(&q[1]);
        if (!se) return {};
        // Per-(id, y) sampling: the timeslot does not enter the key.
        std::uint64_t k = hash_bytes(id_, seed);
        k = hash_combine(k, hash_bytes(se->id, 0x706f7370ULL));
        k = hash_combine(k, se->v->digest().hi);
        k = hash_combine(k, se->v->digest().lo);
        KeyedRng rng(k);
        int count = rng.next_poisson1();
        Message proofs;
        proofs.push_back(Entry{q[1]}); // echo the challenge entry
        for (int i = 0; i < count; ++i) {
            proofs.push_back(general_atom("proof:" + Digest{rng.next_u64(), rng.next_u64()}.hex()));
        }
        Message out{oracle_entry(id_, Value::tuple(std::move(proofs)))};
        return {std::move(out), t};
    }

    static std::size_t proof_count(const Message& response) {
        if (response.size() != 1) return 0;
        const auto* o = std::get_if<OracleEntry>(&response[0]);
        if (!o || !o->v->is_tuple() || o->v->entries().empty()) return 0;
        return o->v->entries().size() - 1; // first entry echoes the challenge
    }

    std::vector<Query> probe_queries() const override {
        return {make_query("probe-id", Value::atom("y"))};
    }

private:
    OracleId id_;
};

} // namespace plsim
