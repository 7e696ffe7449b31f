#pragma once

#include "plsim/message.hpp"
#include "plsim/rng.hpp"
#include "plsim/types.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace plsim {

// UTXO-style payment semantics. Validity and stake are properties of
// unordered transaction sets, so stake evaluation is order-independent by
// construction.

struct TxOutput {
    Identifier owner;
    Stake value = 0;

    friend bool operator==(const TxOutput&, const TxOutput&) = default;
};

// A UTXO is addressed by (creating tx id, output index). Genesis UTXOs use
// the reserved tx id "genesis" with one output per (identifier, index).
struct UtxoRef {
    std::string tx_id;
    std::uint32_t index = 0;

    friend bool operator==(const UtxoRef&, const UtxoRef&) = default;
    friend auto operator<=>(const UtxoRef&, const UtxoRef&) = default;

    std::string key() const { return tx_id + "#" + std::to_string(index); }
};

inline constexpr const char* kGenesisTxId = "genesis";

struct Transaction {
    std::string tx_id;
    std::vector<UtxoRef> inputs;   // all owned by one identifier
    std::vector<TxOutput> outputs; // sum(values) <= sum(input values)

    friend bool operator==(const Transaction& a, const Transaction& b) {
        return a.tx_id == b.tx_id && a.inputs == b.inputs && a.outputs == b.outputs;
    }
};

inline TransactionPtr make_tx(std::string tx_id, std::vector<UtxoRef> inputs,
                              std::vector<TxOutput> outputs) {
    auto tx = std::make_shared<Transaction>();
    tx->tx_id = std::move(tx_id);
    tx->inputs = std::move(inputs);
    tx->outputs = std::move(outputs);
    return tx;
}

inline Digest transaction_digest(const TransactionPtr& tx) {
    Digest d = digest_bytes(tx->tx_id, 0x747849ULL);
    for (const auto& in : tx->inputs) d = digest_combine(d, digest_bytes(in.key(), 1));
    for (const auto& out : tx->outputs) {
        d = digest_combine(d, digest_bytes(out.owner, static_cast<std::uint64_t>(out.value)));
    }
    return d;
}

// A set of transactions keyed by tx id. Two issuances of structurally equal
// transfers are distinct because identity includes tx_id.
class TxSet {
public:
    TxSet() = default;
    TxSet(std::initializer_list<TransactionPtr> txs) {
        for (const auto& t : txs) insert(t);
    }

    bool insert(const TransactionPtr& tx) {
        return map_.emplace(tx->tx_id, tx).second;
    }
    bool contains(const std::string& tx_id) const { return map_.count(tx_id) != 0; }
    bool contains(const TransactionPtr& tx) const { return contains(tx->tx_id); }
    std::size_t size() const { return map_.size(); }
    bool empty() const { return map_.empty(); }

    const TransactionPtr* find(const std::string& tx_id) const {
        auto it = map_.find(tx_id);
        return it == map_.end() ? nullptr : &it->second;
    }

    TxSet with(const TransactionPtr& tx) const {
        TxSet r = *this;
        r.insert(tx);
        return r;
    }
    TxSet merged(const TxSet& other) const {
        TxSet r = *this;
        for (const auto& [k, v] : other.map_) r.map_.emplace(k, v);
        return r;
    }
    bool subset_of(const TxSet& other) const {
        for (const auto& [k, v] : map_)
            if (!other.contains(k)) return false;
        return true;
    }

    // Deterministic iteration order (by tx id).
    auto begin() const { return map_.begin(); }
    auto end() const { return map_.end(); }

    std::vector<TransactionPtr> items() const {
        std::vector<TransactionPtr> r;
        r.reserve(map_.size());
        for (const auto& [k, v] : map_) r.push_back(v);
        return r;
    }

    Digest digest() const {
        Digest d = digest_bytes("txset", map_.size());
        for (const auto& [k, v] : map_) d = digest_combine(d, transaction_digest(v));
        return d;
    }

    friend bool operator==(const TxSet& a, const TxSet& b) {
        if (a.map_.size() != b.map_.size()) return false;
        for (const auto& [k, v] : a.map_)
            if (!b.contains(k)) return false;
        return true;
    }

private:
    std::map<std::string, TransactionPtr> map_;
};

// Initial stake distribution plus evaluation machinery.
class StakeState {
public:
    StakeState() = default;
    explicit StakeState(std::map<Identifier, Stake> s0) : s0_(std::move(s0)) {
        for (auto it = s0_.begin(); it != s0_.end();) {
            if (it->second < 0) throw ConfigError("negative initial stake");
            if (it->second == 0)
                it = s0_.erase(it);
            else
                ++it;
        }
        for (const auto& [id, v] : s0_) total_ += v;
    }

    const std::map<Identifier, Stake>& initial() const { return s0_; }
    Stake total() const { return total_; }
    Stake initial_of(const Identifier& id) const {
        auto it = s0_.find(id);
        return it == s0_.end() ? 0 : it->second;
    }

    // Genesis UTXOs: one per unit-less (identifier, index 0) carrying the full
    // initial balance of that identifier.
    std::vector<std::pair<UtxoRef, TxOutput>> genesis_utxos() const {
        std::vector<std::pair<UtxoRef, TxOutput>> r;
        std::uint32_t idx = 0;
        for (const auto& [id, v] : s0_) {
            r.push_back({UtxoRef{std::string(kGenesisTxId) + ":" + id, idx}, TxOutput{id, v}});
        }
        return r;
    }

private:
    std::map<Identifier, Stake> s0_;
    Stake total_ = 0;
};

namespace detail {

struct EvalResult {
    bool valid = false;
    // Unspent outputs after executing the set, keyed by UtxoRef::key().
    std::unordered_map<std::string, TxOutput> unspent;
};

// Evaluates a transaction set against the genesis UTXOs: topological
// availability of inputs, no double-spends, per-tx single input owner and
// value bound. Acyclic by construction of the availability loop.
inline EvalResult evaluate_set(const TxSet& txs, const StakeState& s) {
    EvalResult res;
    std::unordered_map<std::string, TxOutput> available; // utxo key -> output
    for (const auto& [ref, out] : s.genesis_utxos()) available.emplace(ref.key(), out);

    // Check double-spends up front.
    std::unordered_set<std::string> spent;
    for (const auto& [id, tx] : txs) {
        if (tx->inputs.empty()) return res;
        for (const auto& in : tx->inputs) {
            if (!spent.insert(in.key()).second) return res; // conflict
        }
    }

    std::vector<TransactionPtr> pending = txs.items();
    bool progress = true;
    while (!pending.empty() && progress) {
        progress = false;
        for (auto it = pending.begin(); it != pending.end();) {
            const TransactionPtr& tx = *it;
            bool ready = true;
            for (const auto& in : tx->inputs) {
                if (!available.count(in.key())) {
                    ready = false;
                    break;
                }
            }
            if (!ready) {
                ++it;
                continue;
            }
            // Apply: single owner across inputs, value conservation bound.
            Stake in_sum = 0;
            const Identifier* owner = nullptr;
            for (const auto& in : tx->inputs) {
                const TxOutput& out = available.at(in.key());
                if (owner && *owner != out.owner) return res;
                owner = &out.owner;
                in_sum += out.value;
            }
            Stake out_sum = 0;
            for (const auto& out : tx->outputs) {
                if (out.value < 0) return res;
                out_sum += out.value;
            }
            if (out_sum > in_sum) return res;
            for (const auto& in : tx->inputs) available.erase(in.key());
            for (std::uint32_t i = 0; i < tx->outputs.size(); ++i) {
                available.emplace(UtxoRef{tx->tx_id, i}.key(), tx->outputs[i]);
            }
            it = pending.erase(it);
            progress = true;
        }
    }
    if (!pending.empty()) return res; // unresolved provenance (missing or cyclic)
    res.valid = true;
    res.unspent = std::move(available);
    return res;
}

} // namespace detail

// True iff no two transactions of T spend a common UTXO and every spent
// UTXO is genesis or created within T, acyclically.
inline bool is_valid_set(const TxSet& txs, const StakeState& s) {
    return detail::evaluate_set(txs, s).valid;
}

// Stake owned by `id` after executing the valid set `txs`.
inline Stake stake(const StakeState& s, const TxSet& txs, const Identifier& id) {
    auto res = detail::evaluate_set(txs, s);
    if (!res.valid) throw std::invalid_argument("stake: transaction set invalid");
    Stake sum = 0;
    for (const auto& [k, out] : res.unspent)
        if (out.owner == id) sum += out.value;
    return sum;
}

// Full balance table for a valid set.
inline std::map<Identifier, Stake> stake_table(const StakeState& s, const TxSet& txs) {
    auto res = detail::evaluate_set(txs, s);
    if (!res.valid) throw std::invalid_argument("stake_table: transaction set invalid");
    std::map<Identifier, Stake> table;
    for (const auto& [k, out] : res.unspent) table[out.owner] += out.value;
    return table;
}

// tr1 and tr2 conflict relative to (txs, s): both individually extend the
// set validly, together they do not.
inline bool conflicting(const TransactionPtr& tr1, const TransactionPtr& tr2, const TxSet& txs,
                        const StakeState& s) {
    if (!is_valid_set(txs.with(tr1), s) || !is_valid_set(txs.with(tr2), s))
        throw std::invalid_argument("conflicting: precondition violated");
    return !is_valid_set(txs.with(tr1).with(tr2), s);
}

// Builds a transfer of exactly `amount` from `from` to `to`, valid relative
// to (s, txs), leaving other balances unchanged. Inputs are selected in
// deterministic UTXO order; change returns to `from`.
inline TransactionPtr transfer_tx(const StakeState& s, const TxSet& txs, const Identifier& from,
                                  const Identifier& to, Stake amount, std::string tx_id) {
    if (amount < 1) throw std::invalid_argument("transfer_tx: amount must be >= 1");
    auto res = detail::evaluate_set(txs, s);
    if (!res.valid) throw std::invalid_argument("transfer_tx: base set invalid");
    std::vector<std::pair<std::string, TxOutput>> owned(res.unspent.begin(), res.unspent.end());
    std::erase_if(owned, [&](const auto& kv) { return kv.second.owner != from; });
    std::sort(owned.begin(), owned.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<UtxoRef> inputs;
    Stake gathered = 0;
    for (const auto& [key, out] : owned) {
        if (gathered >= amount) break;
        auto hash_pos = key.rfind('#');
        inputs.push_back(UtxoRef{key.substr(0, hash_pos),
                                 static_cast<std::uint32_t>(std::stoul(key.substr(hash_pos + 1)))});
        gathered += out.value;
    }
    if (gathered < amount) throw std::invalid_argument("transfer_tx: insufficient stake");
    std::vector<TxOutput> outputs{TxOutput{to, amount}};
    if (gathered > amount) outputs.push_back(TxOutput{from, gathered - amount});
    return make_tx(std::move(tx_id), std::move(inputs), std::move(outputs));
}

// The unique smallest set of known transactions required for `tr` to be
// valid: the transitive closure of input-creating transactions. Returns
// nullopt if some non-genesis input has no creator in `universe`.
inline std::optional<TxSet> required_set(const TransactionPtr& tr, const TxSet& universe) {
    TxSet req;
    std::vector<TransactionPtr> frontier{tr};
    while (!frontier.empty()) {
        TransactionPtr cur = frontier.back();
        frontier.pop_back();
        for (const auto& in : cur->inputs) {
            if (in.tx_id.rfind(kGenesisTxId, 0) == 0) continue;
            const TransactionPtr* creator = universe.find(in.tx_id);
            if (!creator) return std::nullopt;
            if (req.insert(*creator)) frontier.push_back(*creator);
        }
    }
    return req;
}

// Exhaustive enumeration of the inclusion-maximal valid subsets of `issued`.
// Searches only provenance-closed, conflict-free extensions; refuses beyond
// `cap` transactions. Maximality is certified by the single-extension test,
// which suffices in the UTXO model.
struct MaximalSetsResult {
    bool refused = false;
    std::vector<TxSet> sets;
};

inline MaximalSetsResult maximal_valid_sets(const TxSet& issued, const StakeState& s,
                                            std::size_t cap = 20) {
    MaximalSetsResult result;
    if (issued.size() > cap) {
        result.refused = true;
        return result;
    }
    std::vector<TransactionPtr> all = issued.items();

    // Depth-first over valid sets, deduplicated by set digest. In the UTXO
    // model a valid set with no valid single extension is maximal: for any
    // valid proper superset, its first extra transaction in topological
    // order is a valid single extension.
    std::set<std::string> visited;
    std::vector<TxSet> maximal;
    std::vector<TxSet> stack{TxSet{}};
    visited.insert(TxSet{}.digest().hex());
    while (!stack.empty()) {
        TxSet cur = std::move(stack.back());
        stack.pop_back();
        bool any_extension = false;
        for (const auto& tx : all) {
            if (cur.contains(tx)) continue;
            TxSet ext = cur.with(tx);
            if (!is_valid_set(ext, s)) continue;
            any_extension = true;
            if (visited.insert(ext.digest().hex()).second) stack.push_back(std::move(ext));
        }
        if (!any_extension) maximal.push_back(std::move(cur));
    }
    result.sets = std::move(maximal);
    return result;
}

// Share of the stake table held by identifiers satisfying `is_byz`.
template <typename Pred>
inline std::pair<Stake, Stake> stake_split(const std::map<Identifier, Stake>& table, Pred is_byz) {
    Stake byz = 0, total = 0;
    for (const auto& [id, v] : table) {
        total += v;
        if (is_byz(id)) byz += v;
    }
    return {byz, total};
}

// rho comparisons use exact integer cross-multiplication.
inline bool share_at_most(Stake part, Stake whole, const Rational& rho) {
    return part * rho.den <= rho.num * whole;
}
inline bool share_at_least(Stake part, Stake whole, const Rational& rho) {
    return part * rho.den >= rho.num * whole;
}

} // namespace plsim
