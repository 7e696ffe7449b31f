#pragma once

#include "plsim/rng.hpp"
#include "plsim/transactions_fwd.hpp"
#include "plsim/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

namespace plsim {

// Messages and oracle queries are ordered tuples of typed entries. Entry
// payloads are values: either atoms (byte strings) or nested tuples of
// entries, so protocol artifacts such as blocks can embed votes, parents
// and certificates structurally. Identity is structural, via 128-bit
// digests cached per node.

class Value;
using ValuePtr = std::shared_ptr<const Value>;

struct GeneralEntry {
    ValuePtr v;
};

struct SignedEntry {
    Identifier id;
    ValuePtr v;
};

struct OracleEntry {
    OracleId oracle;
    ValuePtr v;
};

struct TxEntry {
    TransactionPtr tx;
};

using Entry = std::variant<GeneralEntry, SignedEntry, OracleEntry, TxEntry>;

using Message = std::vector<Entry>;

Digest entry_digest(const Entry& e);

class Value {
public:
    static ValuePtr atom(std::string bytes) {
        auto v = std::make_shared<Value>();
        v->atom_ = std::move(bytes);
        v->is_tuple_ = false;
        return v;
    }
    static ValuePtr atom_i64(std::int64_t x) { return atom(std::to_string(x)); }
    static ValuePtr tuple(std::vector<Entry> entries) {
        auto v = std::make_shared<Value>();
        v->entries_ = std::move(entries);
        v->is_tuple_ = true;
        return v;
    }

    bool is_tuple() const noexcept { return is_tuple_; }
    const std::string& atom_bytes() const { return atom_; }
    const std::vector<Entry>& entries() const { return entries_; }

    const Digest& digest() const {
        if (!digest_cached_) {
            if (!is_tuple_) {
                digest_ = digest_bytes(atom_, 0x61746f6dULL); // "atom"
            } else {
                Digest d = digest_bytes("tuple", entries_.size());
                for (const auto& e : entries_) d = digest_combine(d, entry_digest(e));
                digest_ = d;
            }
            digest_cached_ = true;
        }
        return digest_;
    }

private:
    std::string atom_;
    std::vector<Entry> entries_;
    bool is_tuple_ = false;
    mutable Digest digest_;
    mutable bool digest_cached_ = false;
};

Digest transaction_digest(const TransactionPtr& tx);

inline Digest entry_digest(const Entry& e) {
    struct Visitor {
        Digest operator()(const GeneralEntry& g) const {
            return digest_combine(digest_bytes("gen"), g.v->digest());
        }
        Digest operator()(const SignedEntry& s) const {
            return digest_combine(digest_bytes(s.id, 0x736967ULL), s.v->digest());
        }
        Digest operator()(const OracleEntry& o) const {
            return digest_combine(digest_bytes(o.oracle, 0x6f7263ULL), o.v->digest());
        }
        Digest operator()(const TxEntry& t) const {
            return digest_combine(digest_bytes("tx"), transaction_digest(t.tx));
        }
    };
    return std::visit(Visitor{}, e);
}

inline Digest message_digest(const Message& m) {
    Digest d = digest_bytes("msg", m.size());
    for (const auto& e : m) d = digest_combine(d, entry_digest(e));
    return d;
}

// Convenience constructors.
inline Entry general(ValuePtr v) { return GeneralEntry{std::move(v)}; }
inline Entry general_atom(std::string s) { return GeneralEntry{Value::atom(std::move(s))}; }
inline Entry general_i64(std::int64_t x) { return GeneralEntry{Value::atom_i64(x)}; }
inline Entry signed_entry(Identifier id, ValuePtr v) { return SignedEntry{std::move(id), std::move(v)}; }
inline Entry oracle_entry(OracleId o, ValuePtr v) { return OracleEntry{std::move(o), std::move(v)}; }
inline Entry tx_entry(TransactionPtr tx) { return TxEntry{std::move(tx)}; }

inline const ValuePtr* entry_value(const Entry& e) {
    if (const auto* g = std::get_if<GeneralEntry>(&e)) return &g->v;
    if (const auto* s = std::get_if<SignedEntry>(&e)) return &s->v;
    if (const auto* o = std::get_if<OracleEntry>(&e)) return &o->v;
    return nullptr;
}

// Walks every entry in the message, at any nesting depth. Nested protocol
// artifacts share subtrees heavily, so the walk is a DAG traversal: each
// distinct value node is descended into once.
template <typename Fn>
void for_each_entry_deep(const Entry& e, Fn&& fn,
                         std::unordered_set<Digest, DigestHash>& visited) {
    fn(e);
    const ValuePtr* v = entry_value(e);
    if (!v || !(*v)->is_tuple()) return;
    if (!visited.insert((*v)->digest()).second) return;
    for (const auto& sub : (*v)->entries()) for_each_entry_deep(sub, fn, visited);
}

template <typename Fn>
void for_each_entry_deep(const Message& m, Fn&& fn) {
    std::unordered_set<Digest, DigestHash> visited;
    for (const auto& e : m) for_each_entry_deep(e, fn, visited);
}

} // namespace plsim
