#pragma once

#include "plsim/engine.hpp"
#include "plsim/message.hpp"
#include "plsim/oracles.hpp"
#include "plsim/transactions.hpp"
#include "plsim/types.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace plsim::hotstuff {

// Proof-of-stake HotStuff: epochs of N = total-stake heights, three voting
// stages with stake-weighted quorum certificates, stake-proportional leader
// rotation, and batch confirmation at epoch boundaries.

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

struct Block;
using BlockPtr = std::shared_ptr<const Block>;

struct Vote;
using VotePtr = std::shared_ptr<const Vote>;

struct Block {
    Identifier proposer;        // empty for the genesis block
    std::int64_t height = 0;
    std::int64_t epoch = -1;    // genesis carries epoch -1
    std::int64_t view = 0;
    TxSet txs;
    BlockPtr parent;            // null for genesis
    std::vector<VotePtr> qc;    // stage-1 QC for the parent (empty allowed)
    Digest digest;

    bool is_genesis() const { return parent == nullptr; }
};

struct Vote {
    Identifier voter;
    Stake claimed = 0;
    BlockPtr block;
    int stage = 1;
    Digest digest;
    // Ephemeral-variant signature tag carried with the vote; empty otherwise.
    std::optional<Entry> tag;
};

struct ViewMsg {
    Identifier sender;
    Stake claimed = 0;
    std::int64_t epoch = 0;
    std::int64_t view = 0;
    std::vector<VotePtr> qc; // empty or a stage-1 QC
    Digest digest;
};
using ViewMsgPtr = std::shared_ptr<const ViewMsg>;

inline Digest block_digest_of(const Identifier& proposer, std::int64_t h, std::int64_t e,
                              std::int64_t v, const TxSet& txs, const Digest& parent,
                              const std::vector<VotePtr>& qc);

inline Digest vote_digest_of(const Identifier& voter, Stake c, const Digest& block, int stage) {
    Digest d = digest_bytes("vote", static_cast<std::uint64_t>(stage));
    d = digest_combine(d, digest_bytes(voter, static_cast<std::uint64_t>(c)));
    return digest_combine(d, block);
}

inline Digest block_digest_of(const Identifier& proposer, std::int64_t h, std::int64_t e,
                              std::int64_t v, const TxSet& txs, const Digest& parent,
                              const std::vector<VotePtr>& qc) {
    Digest d = digest_bytes("blk", static_cast<std::uint64_t>(h));
    d = digest_combine(d, digest_bytes(proposer, static_cast<std::uint64_t>(e)));
    d = digest_combine(d, digest_bytes("v", static_cast<std::uint64_t>(v)));
    d = digest_combine(d, txs.digest());
    d = digest_combine(d, parent);
    for (const auto& vp : qc) d = digest_combine(d, vp->digest);
    return d;
}

inline BlockPtr genesis_block() {
    static BlockPtr g = [] {
        auto b = std::make_shared<Block>();
        b->height = 0;
        b->epoch = -1;
        b->view = 0;
        b->digest = digest_bytes("genesis-block");
        return b;
    }();
    return g;
}

inline BlockPtr make_block(Identifier proposer, std::int64_t h, std::int64_t e, std::int64_t v,
                           TxSet txs, BlockPtr parent, std::vector<VotePtr> qc) {
    auto b = std::make_shared<Block>();
    b->proposer = std::move(proposer);
    b->height = h;
    b->epoch = e;
    b->view = v;
    b->txs = std::move(txs);
    b->parent = std::move(parent);
    b->qc = std::move(qc);
    b->digest = block_digest_of(b->proposer, h, e, v, b->txs,
                                b->parent ? b->parent->digest : genesis_block()->digest, b->qc);
    return b;
}

inline VotePtr make_vote(Identifier voter, Stake c, BlockPtr block, int stage,
                         std::optional<Entry> tag = std::nullopt) {
    auto v = std::make_shared<Vote>();
    v->voter = std::move(voter);
    v->claimed = c;
    v->block = std::move(block);
    v->stage = stage;
    v->digest = vote_digest_of(v->voter, c, v->block->digest, stage);
    v->tag = std::move(tag);
    return v;
}

inline ViewMsgPtr make_view_msg(Identifier sender, Stake c, std::int64_t e, std::int64_t v,
                                std::vector<VotePtr> qc) {
    auto r = std::make_shared<ViewMsg>();
    r->sender = std::move(sender);
    r->claimed = c;
    r->epoch = e;
    r->view = v;
    r->qc = std::move(qc);
    Digest d = digest_bytes("viewmsg", static_cast<std::uint64_t>(e));
    d = digest_combine(d, digest_bytes(r->sender, static_cast<std::uint64_t>(c)));
    d = digest_combine(d, digest_bytes("v", static_cast<std::uint64_t>(v)));
    for (const auto& vp : r->qc) d = digest_combine(d, vp->digest);
    r->digest = d;
    return r;
}

// Cumulative transactions of a block and all its ancestors.
inline TxSet chain_txs(const BlockPtr& b) {
    TxSet out;
    for (BlockPtr cur = b; cur; cur = cur->parent) {
        for (const auto& [id, tx] : cur->txs) out.insert(tx);
    }
    return out;
}

inline bool is_ancestor(const BlockPtr& anc, const BlockPtr& of) {
    for (BlockPtr cur = of; cur; cur = cur->parent) {
        if (cur->digest == anc->digest) return true;
    }
    return false;
}

inline bool compatible(const BlockPtr& a, const BlockPtr& b) {
    return is_ancestor(a, b) || is_ancestor(b, a);
}

// ---------------------------------------------------------------------------
// Leader selection and quorum certificates
// ---------------------------------------------------------------------------

// Canonical stake-proportional leader function: iterate the N stake units in
// ascending identifier order; view v is led by the owner of unit v mod N.
inline Identifier leader(const std::map<Identifier, Stake>& table, std::int64_t v) {
    Stake total = 0;
    for (const auto& [id, c] : table) total += c;
    if (total <= 0) return {};
    Stake unit = static_cast<Stake>(((v % total) + total) % total);
    for (const auto& [id, c] : table) {
        if (unit < c) return id;
        unit -= c;
    }
    return {};
}

// QC1-QC4 against a stake table with total N. The empty vote set is a QC
// only for the genesis block.
inline bool is_qc(const std::vector<VotePtr>& votes, const BlockPtr& block, int stage,
                  const std::map<Identifier, Stake>& table, Stake total) {
    if (block->is_genesis()) return votes.empty();
    if (votes.empty()) return false;
    std::set<Identifier> seen;
    Stake sum = 0;
    for (const auto& v : votes) {
        if (!v || v->block->digest != block->digest || v->stage != stage) return false; // QC1
        auto it = table.find(v->voter);
        Stake owed = it == table.end() ? 0 : it->second;
        if (v->claimed != owed) return false;                 // QC2
        if (!seen.insert(v->voter).second) return false;      // QC3
        sum += v->claimed;
    }
    return 3 * sum > 2 * total; // QC4
}

// ---------------------------------------------------------------------------
// Wire codec
// ---------------------------------------------------------------------------

namespace wire {

inline Entry encode_block(const BlockPtr& b, std::unordered_map<Digest, Entry, DigestHash>& memo);

inline Entry encode_vote(const VotePtr& v, std::unordered_map<Digest, Entry, DigestHash>& memo) {
    Message core{general_atom("vote"), general_i64(v->claimed), encode_block(v->block, memo),
                 general_i64(v->stage)};
    Message parts{signed_entry(v->voter, Value::tuple(std::move(core)))};
    if (v->tag) parts.push_back(*v->tag);
    return general(Value::tuple(std::move(parts)));
}

inline Entry encode_qc(const std::vector<VotePtr>& qc,
                       std::unordered_map<Digest, Entry, DigestHash>& memo) {
    std::vector<VotePtr> sorted = qc;
    std::sort(sorted.begin(), sorted.end(),
              [](const VotePtr& a, const VotePtr& b) { return a->voter < b->voter; });
    Message entries;
    for (const auto& v : sorted) entries.push_back(encode_vote(v, memo));
    return general(Value::tuple(std::move(entries)));
}

inline Entry encode_block(const BlockPtr& b, std::unordered_map<Digest, Entry, DigestHash>& memo) {
    if (b->is_genesis()) return general_atom("Bg");
    auto it = memo.find(b->digest);
    if (it != memo.end()) return it->second;
    Message txs;
    for (const auto& [id, tx] : b->txs) txs.push_back(tx_entry(tx));
    Message body{general_atom("blk"),
                 general_i64(b->height),
                 general_i64(b->epoch),
                 general_i64(b->view),
                 general(Value::tuple(std::move(txs))),
                 encode_block(b->parent, memo),
                 encode_qc(b->qc, memo)};
    Entry e = signed_entry(b->proposer, Value::tuple(std::move(body)));
    memo.emplace(b->digest, e);
    return e;
}

inline Entry encode_view_msg(const ViewMsgPtr& r,
                             std::unordered_map<Digest, Entry, DigestHash>& memo) {
    Message body{general_atom("view"), general_i64(r->claimed), general_i64(r->epoch),
                 general_i64(r->view), encode_qc(r->qc, memo)};
    return signed_entry(r->sender, Value::tuple(std::move(body)));
}

struct Decoder {
    std::unordered_map<Digest, BlockPtr, DigestHash> blocks;
    // Entry-digest memos: nested artifacts share subtrees, so decoding walks
    // the DAG, not the tree.
    std::unordered_map<Digest, BlockPtr, DigestHash> block_by_entry;
    std::unordered_map<Digest, VotePtr, DigestHash> vote_by_entry;

    static std::optional<std::int64_t> atom_i64(const Entry& e) {
        const auto* g = std::get_if<GeneralEntry>(&e);
        if (!g || g->v->is_tuple()) return std::nullopt;
        try {
            return std::stoll(g->v->atom_bytes());
        } catch (...) {
            return std::nullopt;
        }
    }
    static bool is_marker(const Entry& e, const char* m) {
        const auto* g = std::get_if<GeneralEntry>(&e);
        return g && !g->v->is_tuple() && g->v->atom_bytes() == m;
    }

    BlockPtr decode_block(const Entry& e) {
        if (is_marker(e, "Bg")) return genesis_block();
        const auto* s = std::get_if<SignedEntry>(&e);
        if (!s || !s->v->is_tuple()) return nullptr;
        Digest ekey = entry_digest(e);
        if (auto it = block_by_entry.find(ekey); it != block_by_entry.end()) return it->second;
        const auto& body = s->v->entries();
        if (body.size() != 7 || !is_marker(body[0], "blk")) return nullptr;
        auto h = atom_i64(body[1]), ep = atom_i64(body[2]), vw = atom_i64(body[3]);
        if (!h || !ep || !vw) return nullptr;
        const auto* txs_e = std::get_if<GeneralEntry>(&body[4]);
        if (!txs_e || !txs_e->v->is_tuple()) return nullptr;
        TxSet txs;
        for (const auto& te : txs_e->v->entries()) {
            const auto* t = std::get_if<TxEntry>(&te);
            if (!t) return nullptr;
            txs.insert(t->tx);
        }
        BlockPtr parent = decode_block(body[5]);
        if (!parent) return nullptr;
        auto qc = decode_qc(body[6]);
        if (!qc) return nullptr;
        auto b = make_block(s->id, *h, *ep, *vw, std::move(txs), parent, std::move(*qc));
        auto it = blocks.find(b->digest);
        if (it != blocks.end()) {
            block_by_entry.emplace(ekey, it->second);
            return it->second;
        }
        blocks.emplace(b->digest, b);
        block_by_entry.emplace(ekey, b);
        return b;
    }

    VotePtr decode_vote(const Entry& e) {
        const auto* wrap = std::get_if<GeneralEntry>(&e);
        if (!wrap || !wrap->v->is_tuple()) return nullptr;
        Digest ekey = entry_digest(e);
        if (auto it = vote_by_entry.find(ekey); it != vote_by_entry.end()) return it->second;
        const auto& parts = wrap->v->entries();
        if (parts.empty() || parts.size() > 2) return nullptr;
        const auto* s = std::get_if<SignedEntry>(&parts[0]);
        if (!s || !s->v->is_tuple()) return nullptr;
        const auto& body = s->v->entries();
        if (body.size() != 4 || !is_marker(body[0], "vote")) return nullptr;
        auto c = atom_i64(body[1]);
        auto stage = atom_i64(body[3]);
        if (!c || !stage || *stage < 1 || *stage > 3) return nullptr;
        BlockPtr b = decode_block(body[2]);
        if (!b) return nullptr;
        std::optional<Entry> tag;
        if (parts.size() == 2) {
            if (!std::get_if<OracleEntry>(&parts[1])) return nullptr;
            tag = parts[1];
        }
        VotePtr v = make_vote(s->id, *c, b, static_cast<int>(*stage), std::move(tag));
        vote_by_entry.emplace(ekey, v);
        return v;
    }

    std::optional<std::vector<VotePtr>> decode_qc(const Entry& e) {
        const auto* g = std::get_if<GeneralEntry>(&e);
        if (!g || !g->v->is_tuple()) return std::nullopt;
        std::vector<VotePtr> out;
        for (const auto& ve : g->v->entries()) {
            VotePtr v = decode_vote(ve);
            if (!v) return std::nullopt;
            out.push_back(v);
        }
        return out;
    }

    ViewMsgPtr decode_view_msg(const Entry& e) {
        const auto* s = std::get_if<SignedEntry>(&e);
        if (!s || !s->v->is_tuple()) return nullptr;
        const auto& body = s->v->entries();
        if (body.size() != 5 || !is_marker(body[0], "view")) return nullptr;
        auto c = atom_i64(body[1]), ep = atom_i64(body[2]), vw = atom_i64(body[3]);
        if (!c || !ep || !vw) return nullptr;
        auto qc = decode_qc(body[4]);
        if (!qc) return nullptr;
        return make_view_msg(s->id, *c, *ep, *vw, std::move(*qc));
    }
};

} // namespace wire

// ---------------------------------------------------------------------------
// Node
// ---------------------------------------------------------------------------

struct NodeParams {
    StakeState stake0;
    Timeslot delta = 2;
    Rational kappa{1, 1};
    std::vector<Identifier> my_ids;
    // Ephemeral-signature variant: every vote carries an ephemeral tag with
    // target deadline height_allowance * block height; untagged votes do not
    // count towards quorums.
    bool ephemeral_votes = false;
    OracleId ephemeral_oracle = "ephemeral";
    Timeslot height_allowance = 0;

    Stake total() const { return stake0.total(); }
    Timeslot timer_ticks() const { return 5 * ceil_div_rational(delta, kappa); }
    Timeslot vote_deadline(std::int64_t height) const {
        return height_allowance * static_cast<Timeslot>(height);
    }
};

// IO surface the node drives; adapters exist for the engine and for
// adversaries that embed node instances.
struct NodeIo {
    std::function<void(Message, int)> send;
    // Same-timeslot oracle exchange; returns the response or nullopt.
    std::function<std::optional<Message>(const OracleId&, Query)> query;
    std::function<void(std::string, std::string)> flag = [](std::string, std::string) {};
};

class Node {
public:
    explicit Node(NodeParams params) : p_(std::move(params)) {
        epochs_.push_back(info_for(genesis_block()));
    }

    const NodeParams& params() const { return p_; }

    // One active non-waiting timeslot: ingest receipts, run the upon-rules
    // in listed order, emit disseminations through io.
    void step(const std::vector<Message>& receipts, NodeIo& io);

    const TxSet& confirmed() const { return confirmed_; }
    std::int64_t current_epoch() const { return cur_epoch_; }
    std::int64_t current_view() const { return cur_view_; }
    std::optional<std::int64_t> lock_view(std::int64_t epoch) const {
        auto it = q2_.find(epoch);
        if (it == q2_.end()) return std::nullopt;
        return it->second.view;
    }

    // Observable pieces of the confirmation machinery, exposed for checks.
    struct EpochInfo {
        BlockPtr genesis;
        TxSet t_star;                       // transactions confirmed through this epoch
        std::map<Identifier, Stake> table;  // S(S0, t_star)
    };
    // Epoch-genesis computation on the node's current message set; nullopt if
    // undefined. `incompatible` is set when qualifying blocks conflict.
    std::optional<EpochInfo> epoch_genesis(std::int64_t e) const {
        if (e < 0 || static_cast<std::size_t>(e) >= epochs_.size()) return std::nullopt;
        return *epochs_[static_cast<std::size_t>(e)];
    }
    bool epoch_incompatibility() const { return incompatibility_; }

    bool is_block_valid(const BlockPtr& b) const { return block_valid(b); }

    // The block-proposal rule, also used by scripted adversaries.
    BlockPtr propose_block(const Identifier& id, std::int64_t view,
                           const std::vector<ViewMsgPtr>& vc) const;

    // Feeds a message without a full step (adversary bookkeeping).
    void ingest(const Message& m) { ingest_message(m); }

    const TxSet& all_txs() const { return all_txs_; }

    std::optional<std::vector<VotePtr>> find_qc(const BlockPtr& b, int stage,
                                                std::int64_t epoch) const {
        return assemble_qc(b, stage, epoch);
    }

    std::vector<BlockPtr> blocks_at(std::int64_t e, std::int64_t v) const {
        auto it = arrival_.find({e, v});
        return it == arrival_.end() ? std::vector<BlockPtr>{} : it->second;
    }

private:
    struct QcRef {
        std::vector<VotePtr> votes;
        std::int64_t view = -1;
        BlockPtr block;
    };

    // --- message ingestion -------------------------------------------------

    void ingest_message(const Message& m) {
        for (const auto& e : m) ingest_entry(e);
    }

    void ingest_entry(const Entry& e) {
        if (const auto* t = std::get_if<TxEntry>(&e)) {
            note_tx(t->tx);
            return;
        }
        if (const auto* o = std::get_if<OracleEntry>(&e)) {
            note_tag(*o);
            return;
        }
        if (std::get_if<GeneralEntry>(&e)) {
            if (VotePtr v = decoder_.decode_vote(e)) note_vote(v);
            return;
        }
        if (std::get_if<SignedEntry>(&e)) {
            if (BlockPtr b = decoder_.decode_block(e)) {
                note_block(b);
                return;
            }
            if (ViewMsgPtr r = decoder_.decode_view_msg(e)) {
                note_view_msg(r);
                return;
            }
        }
    }

    void note_tx(const TransactionPtr& tx) {
        if (all_txs_.insert(tx)) gossip_queue_.push_back(tx);
    }

    void note_block(const BlockPtr& b) {
        if (!b || b->is_genesis()) return;
        if (!blocks_.emplace(b->digest, b).second) return;
        dirty_ = true;
        ++epoch_version_[b->epoch];
        blocks_by_epoch_[b->epoch].push_back(b);
        arrival_[{b->epoch, b->view}].push_back(b);
        note_block(b->parent);
        for (const auto& v : b->qc) note_vote(v);
        for (const auto& [id, tx] : b->txs) note_tx(tx);
    }

    void note_vote(const VotePtr& v) {
        if (!v) return;
        auto key = std::make_pair(v->block->digest, v->stage);
        auto& bucket = votes_[key];
        bool fresh = false;
        auto it = bucket.find(v->voter);
        if (it == bucket.end()) {
            bucket.emplace(v->voter, v);
            fresh = true;
        } else if (it->second->digest != v->digest) {
            // Conflicting claims by one identifier for the same (block,
            // stage); keep the first, it can only matter for blame.
        }
        if (v->tag) tagged_.insert(v->digest);
        if (fresh) {
            dirty_ = true;
            ++epoch_version_[v->block->epoch];
            all_votes_.push_back(v);
            note_block(v->block);
        }
    }

    void note_tag(const OracleEntry& o) {
        // Standalone tag entries: tuple (signed(id, "vt:<digest>"), target).
        if (o.oracle != p_.ephemeral_oracle || !o.v->is_tuple()) return;
        const auto& parts = o.v->entries();
        if (parts.size() != 2) return;
        const auto* s = std::get_if<SignedEntry>(&parts[0]);
        if (!s || s->v->is_tuple()) return;
        const std::string& body = s->v->atom_bytes();
        if (body.rfind("vt:", 0) != 0) return;
        if (tagged_by_hex_.insert(body.substr(3)).second) {
            ++tag_version_;
            dirty_ = true;
        }
    }

    void note_view_msg(const ViewMsgPtr& r) {
        if (!r) return;
        auto& bucket = view_msgs_[{r->epoch, r->view}];
        if (bucket.emplace(r->sender, r).second) {
            dirty_ = true;
            for (const auto& v : r->qc) note_vote(v);
        }
    }

    bool vote_tagged(const VotePtr& v) const {
        if (!p_.ephemeral_votes) return true;
        if (tagged_.count(v->digest)) return true;
        return tagged_by_hex_.count(v->digest.hex()) != 0;
    }

    // --- epoch ledger -------------------------------------------------------

    Stake total_stake() const { return p_.total(); }

    std::optional<std::vector<VotePtr>> assemble_qc(const BlockPtr& b, int stage,
                                                    std::int64_t epoch) const {
        if (b->is_genesis()) return std::vector<VotePtr>{};
        if (epoch < 0 || static_cast<std::size_t>(epoch) >= epochs_.size()) return std::nullopt;
        const auto& table = epochs_[static_cast<std::size_t>(epoch)]->table;
        auto it = votes_.find({b->digest, stage});
        if (it == votes_.end()) return std::nullopt;
        std::vector<VotePtr> chosen;
        Stake sum = 0;
        for (const auto& [voter, v] : it->second) {
            auto st = table.find(voter);
            Stake owed = st == table.end() ? 0 : st->second;
            if (owed <= 0 || v->claimed != owed) continue;
            if (!vote_tagged(v)) continue;
            chosen.push_back(v);
            sum += owed;
        }
        if (3 * sum > 2 * total_stake()) return chosen;
        return std::nullopt;
    }

    // Validity of the embedded parent QC for block b, against the epoch
    // tables indicated by the parent's epoch.
    bool embedded_qc_ok(const BlockPtr& b) const {
        const BlockPtr& parent = b->parent;
        std::int64_t qc_epoch = (parent->epoch == b->epoch - 1) ? b->epoch - 1 : b->epoch;
        if (parent->is_genesis()) return b->qc.empty() && b->epoch == 0;
        if (parent->epoch != b->epoch && parent->epoch != b->epoch - 1) return false;
        if (qc_epoch < 0) return b->qc.empty();
        if (static_cast<std::size_t>(qc_epoch) >= epochs_.size()) return false;
        const auto& table = epochs_[static_cast<std::size_t>(qc_epoch)]->table;
        if (p_.ephemeral_votes) {
            for (const auto& v : b->qc)
                if (!vote_tagged(v)) return false;
        }
        return is_qc(b->qc, parent, 1, table, total_stake());
    }

    bool block_valid(const BlockPtr& b) const {
        if (b->is_genesis()) return true;
        if (b->height < 1 || b->epoch < 0 || b->view < 0) return false;
        if (static_cast<std::size_t>(b->epoch) >= epochs_.size()) return false;
        const auto& info = *epochs_[static_cast<std::size_t>(b->epoch)];
        // True verdicts are stable for a fixed epoch context, so memoize per
        // (block, epoch-genesis) pair.
        Digest memo_key = digest_combine(b->digest, info.genesis->digest);
        if (valid_memo_.count(memo_key)) return true;
        if (leader(info.table, b->view) != b->proposer) return false;
        if (!b->parent || b->parent->height != b->height - 1) return false;
        if (!block_valid(b->parent)) return false;
        if (!embedded_qc_ok(b)) return false;
        if (!is_valid_set(chain_txs(b), p_.stake0)) return false;
        valid_memo_.insert(memo_key);
        return true;
    }

    std::uint64_t effective_version(std::int64_t e) const {
        auto it = epoch_version_.find(e);
        return (it == epoch_version_.end() ? 0 : it->second) + tag_version_;
    }

    // Recomputes the epoch ledger from epoch 0 upward, reusing per-epoch
    // results when nothing relevant arrived. Definedness can be retracted: a
    // newly arrived incompatible qualifying block undefines every later epoch.
    void refresh_epochs(NodeIo& io) {
        const bool was_incompatible = incompatibility_;
        bool incompatible = false;
        std::vector<std::shared_ptr<const EpochInfo>> fresh;
        fresh.push_back(info_for(genesis_block()));
        epochs_.swap(fresh);

        for (std::int64_t e = 0;; ++e) {
            const std::uint64_t ver = effective_version(e);
            const Digest gin = epochs_[static_cast<std::size_t>(e)]->genesis->digest;
            EpochCache* cache = nullptr;
            if (static_cast<std::size_t>(e) < epoch_cache_.size())
                cache = &epoch_cache_[static_cast<std::size_t>(e)];
            BlockPtr next;
            bool clash = false;
            if (cache && cache->version == ver && cache->genesis_in == gin) {
                next = cache->next_genesis;
                clash = cache->incompatible;
            } else {
                std::tie(next, clash) = compute_epoch_successor(e);
                if (static_cast<std::size_t>(e) >= epoch_cache_.size())
                    epoch_cache_.resize(static_cast<std::size_t>(e) + 1);
                epoch_cache_[static_cast<std::size_t>(e)] = EpochCache{ver, gin, next, clash};
            }
            if (clash) {
                incompatible = true;
                if (!was_incompatible)
                    io.flag("epoch-genesis-incompatible", "epoch " + std::to_string(e + 1));
                break;
            }
            if (!next) break;
            epochs_.push_back(info_for(next));
        }
        incompatibility_ = incompatible;
        confirmed_ = epochs_.back()->t_star;
    }

    // The qualifying-block scan for one epoch: returns the next epoch genesis
    // (or null) and whether incompatible qualifying blocks exist.
    std::pair<BlockPtr, bool> compute_epoch_successor(std::int64_t e) const {
        const std::int64_t boundary = (e + 1) * total_stake();
        const auto& cur = *epochs_[static_cast<std::size_t>(e)];
        auto it = blocks_by_epoch_.find(e);
        if (it == blocks_by_epoch_.end()) return {nullptr, false};
        std::vector<BlockPtr> qualifying;
        for (const auto& b : it->second) {
            if (b->height < boundary) continue;
            if (!block_valid(b)) continue;
            if (!is_ancestor(cur.genesis, b)) continue;
            bool all_stages = true;
            for (int s = 1; s <= 3 && all_stages; ++s) {
                if (!assemble_qc(b, s, e)) all_stages = false;
            }
            if (all_stages) qualifying.push_back(b);
        }
        if (qualifying.empty()) return {nullptr, false};
        for (std::size_t i = 0; i < qualifying.size(); ++i)
            for (std::size_t j = i + 1; j < qualifying.size(); ++j)
                if (!compatible(qualifying[i], qualifying[j])) return {nullptr, true};
        BlockPtr g = qualifying.front();
        while (g && g->height > boundary) g = g->parent;
        if (!g || g->height != boundary) return {nullptr, false};
        if (!is_valid_set(chain_txs(g), p_.stake0)) return {nullptr, false};
        return {g, false};
    }

    // Epoch contexts are interned by genesis digest; the genesis pins the
    // whole prefix (its ancestor chain), so the cache never goes stale.
    std::shared_ptr<const EpochInfo> info_for(const BlockPtr& genesis) const {
        auto it = info_cache_.find(genesis->digest);
        if (it != info_cache_.end()) return it->second;
        auto info = std::make_shared<EpochInfo>();
        info->genesis = genesis;
        info->t_star = chain_txs(genesis);
        info->table = genesis->is_genesis() ? p_.stake0.initial()
                                            : stake_table(p_.stake0, info->t_star);
        info_cache_.emplace(genesis->digest, info);
        return info;
    }

    // --- view certificates ---------------------------------------------------

    bool view_msg_valid(const ViewMsgPtr& r) const {
        if (static_cast<std::size_t>(r->epoch) >= epochs_.size() || r->epoch < 0) return false;
        const auto& info = *epochs_[static_cast<std::size_t>(r->epoch)];
        auto it = info.table.find(r->sender);
        Stake owed = it == info.table.end() ? 0 : it->second;
        if (r->claimed != owed) return false;
        if (r->qc.empty()) return true;
        const BlockPtr& b = r->qc.front()->block;
        if (b->epoch != r->epoch || !block_valid(b)) return false;
        if (p_.ephemeral_votes) {
            for (const auto& v : r->qc)
                if (!vote_tagged(v)) return false;
        }
        return is_qc(r->qc, b, 1, info.table, total_stake());
    }

    std::optional<std::vector<ViewMsgPtr>> assemble_vc(std::int64_t e, std::int64_t v) const {
        auto it = view_msgs_.find({e, v});
        if (it == view_msgs_.end()) return std::nullopt;
        if (e < 0 || static_cast<std::size_t>(e) >= epochs_.size()) return std::nullopt;
        std::vector<ViewMsgPtr> chosen;
        Stake sum = 0;
        for (const auto& [sender, r] : it->second) {
            if (!view_msg_valid(r)) continue;
            chosen.push_back(r);
            sum += r->claimed;
        }
        if (3 * sum > 2 * total_stake()) return chosen;
        return std::nullopt;
    }

    // --- emission helpers -----------------------------------------------------

    void send_tx(const TransactionPtr& tx, NodeIo& io) { io.send(Message{tx_entry(tx)}, 0); }

    std::optional<Entry> obtain_tag(const Identifier& id, const Digest& vote_digest,
                                    std::int64_t height, NodeIo& io) {
        if (!p_.ephemeral_votes) return std::nullopt;
        Timeslot target = p_.vote_deadline(height);
        Query q = EphemeralKeyOracle::make_query(id, Value::atom("vt:" + vote_digest.hex()), target);
        auto resp = io.query(p_.ephemeral_oracle, q);
        if (!resp || EphemeralKeyOracle::is_null_response(*resp)) {
            io.flag("ephemeral-expired", "height " + std::to_string(height));
            return std::nullopt;
        }
        if (resp->size() != 1) return std::nullopt;
        return (*resp)[0];
    }

    // Own disseminations are not self-registered here; the engine delivers
    // them back at the next timeslot, per the self-receipt rule.
    void cast_votes(const BlockPtr& b, int stage, NodeIo& io) {
        const auto& table = epochs_[static_cast<std::size_t>(cur_epoch_)]->table;
        for (const auto& id : p_.my_ids) {
            auto it = table.find(id);
            if (it == table.end() || it->second <= 0) continue;
            Digest core = vote_digest_of(id, it->second, b->digest, stage);
            std::optional<Entry> tag;
            if (p_.ephemeral_votes) {
                tag = obtain_tag(id, core, b->height, io);
                if (!tag) continue; // expired key: cannot produce the vote
            }
            VotePtr v = make_vote(id, it->second, b, stage, std::move(tag));
            io.send(Message{wire::encode_vote(v, encode_memo_)}, 0);
        }
    }

    void send_view_msgs(std::int64_t e, std::int64_t v, NodeIo& io) {
        const auto& table = epochs_[static_cast<std::size_t>(e)]->table;
        const auto& q1 = q1_[e];
        for (const auto& id : p_.my_ids) {
            auto it = table.find(id);
            if (it == table.end() || it->second <= 0) continue;
            ViewMsgPtr r = make_view_msg(id, it->second, e, v, q1);
            io.send(Message{wire::encode_view_msg(r, encode_memo_)}, 0);
        }
    }

    // --- state ----------------------------------------------------------------

    NodeParams p_;
    wire::Decoder decoder_;
    mutable std::unordered_map<Digest, Entry, DigestHash> encode_memo_;

    std::unordered_map<Digest, BlockPtr, DigestHash> blocks_;
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<BlockPtr>> arrival_;
    std::map<std::pair<Digest, int>, std::map<Identifier, VotePtr>> votes_;
    std::vector<VotePtr> all_votes_;
    std::map<std::pair<std::int64_t, std::int64_t>, std::map<Identifier, ViewMsgPtr>> view_msgs_;
    std::unordered_set<Digest, DigestHash> tagged_;
    std::set<std::string> tagged_by_hex_;
    TxSet all_txs_;
    std::vector<TransactionPtr> gossip_queue_;

    struct EpochCache {
        std::uint64_t version = ~0ULL;
        Digest genesis_in;
        BlockPtr next_genesis;
        bool incompatible = false;
    };
    std::vector<std::shared_ptr<const EpochInfo>> epochs_;
    std::vector<EpochCache> epoch_cache_;
    mutable std::unordered_map<Digest, std::shared_ptr<const EpochInfo>, DigestHash> info_cache_;
    std::map<std::int64_t, std::vector<BlockPtr>> blocks_by_epoch_;
    std::map<std::int64_t, std::uint64_t> epoch_version_;
    std::uint64_t tag_version_ = 0;
    bool incompatibility_ = false;
    mutable std::unordered_set<Digest, DigestHash> valid_memo_;
    TxSet confirmed_;
    bool dirty_ = true;

    std::int64_t cur_epoch_ = -1;
    std::int64_t cur_view_ = -1;
    BlockPtr voted_block_;  // the Algorithm-1 variable B
    std::map<std::int64_t, std::vector<VotePtr>> q1_; // per-epoch Q^1 (initially empty set)
    struct Lock {
        std::vector<VotePtr> votes;
        std::int64_t view = -1;
    };
    std::map<std::int64_t, Lock> q2_; // per-epoch Q^2 (initially undefined)
    bool stage2_done_ = false;
    bool stage3_done_ = false;
    bool viewmsg_done_ = false;
    bool timer_armed_ = false;
    Timeslot timer_left_ = 0;
};

// ---------------------------------------------------------------------------

inline BlockPtr Node::propose_block(const Identifier& id, std::int64_t view,
                                    const std::vector<ViewMsgPtr>& vc) const {
    const auto& info = *epochs_[static_cast<std::size_t>(cur_epoch_)];
    bool all_empty = true;
    const ViewMsgPtr* best = nullptr;
    for (const auto& r : vc) {
        if (r->qc.empty()) continue;
        all_empty = false;
        if (!best || r->qc.front()->block->view > (*best)->qc.front()->block->view ||
            (r->qc.front()->block->view == (*best)->qc.front()->block->view &&
             r->qc.front()->block->digest < (*best)->qc.front()->block->digest)) {
            best = &r;
        }
    }
    BlockPtr parent;
    std::vector<VotePtr> qc;
    if (all_empty) {
        parent = info.genesis;
        // Stage-1 QC for the epoch genesis against the previous epoch's table.
        if (parent->is_genesis()) {
            qc = {};
        } else {
            auto q = assemble_qc(parent, 1, cur_epoch_ - 1 >= 0 &&
                                                    parent->epoch == cur_epoch_ - 1
                                                ? cur_epoch_ - 1
                                                : cur_epoch_);
            if (!q) return nullptr;
            qc = *q;
        }
    } else {
        qc = (*best)->qc;
        parent = qc.front()->block;
    }
    // All received, not already included, kept cumulatively valid.
    TxSet base = chain_txs(parent);
    TxSet include;
    for (const auto& [tid, tx] : all_txs_) {
        if (base.contains(tid)) continue;
        TxSet trial = base.merged(include).with(tx);
        if (is_valid_set(trial, p_.stake0)) include.insert(tx);
    }
    return make_block(id, parent->height + 1, cur_epoch_, view, std::move(include), parent,
                      std::move(qc));
}

inline void Node::step(const std::vector<Message>& receipts, NodeIo& io) {
    for (const auto& m : receipts) ingest_message(m);

    // Transaction gossip: everything first received at this timeslot.
    for (const auto& tx : gossip_queue_) send_tx(tx, io);
    gossip_queue_.clear();

    if (dirty_) {
        refresh_epochs(io);
        dirty_ = false;
    }

    // Timer ticks are counted in the node's own active non-waiting steps.
    bool timer_expired = false;
    if (timer_armed_) {
        if (--timer_left_ <= 0) {
            timer_expired = true;
            timer_armed_ = false;
        }
    }

    // Upon entering a later epoch.
    std::int64_t newest = static_cast<std::int64_t>(epochs_.size()) - 1;
    if (newest > cur_epoch_) {
        cur_epoch_ = newest;
        cur_view_ = -1;
        voted_block_ = nullptr;
        stage2_done_ = stage3_done_ = viewmsg_done_ = false;
        timer_armed_ = false;
        timer_expired = false;
        const auto& table = epochs_[static_cast<std::size_t>(cur_epoch_)]->table;
        for (const auto& id : p_.my_ids) {
            auto it = table.find(id);
            if (it == table.end() || it->second <= 0) continue;
            ViewMsgPtr r = make_view_msg(id, it->second, cur_epoch_, 0, {});
            note_view_msg(r);
            io.send(Message{wire::encode_view_msg(r, encode_memo_)}, 0);
        }
    }

    if (cur_epoch_ < 0) return;

    // Upon receiving an M-VC for (e, v') with v' > v: enter the largest.
    {
        std::int64_t best_v = cur_view_;
        std::optional<std::vector<ViewMsgPtr>> best_vc;
        auto lo = view_msgs_.lower_bound({cur_epoch_, cur_view_ + 1});
        for (auto it = lo; it != view_msgs_.end() && it->first.first == cur_epoch_; ++it) {
            if (auto vc = assemble_vc(cur_epoch_, it->first.second)) {
                if (it->first.second > best_v) {
                    best_v = it->first.second;
                    best_vc = std::move(vc);
                }
            }
        }
        if (best_vc) {
            cur_view_ = best_v;
            voted_block_ = nullptr;
            stage2_done_ = stage3_done_ = viewmsg_done_ = false;
            timer_armed_ = true;
            timer_left_ = p_.timer_ticks();
            timer_expired = false;
            Identifier lead = leader(epochs_[static_cast<std::size_t>(cur_epoch_)]->table, cur_view_);
            if (std::find(p_.my_ids.begin(), p_.my_ids.end(), lead) != p_.my_ids.end()) {
                if (BlockPtr b = propose_block(lead, cur_view_, *best_vc)) {
                    io.send(Message{wire::encode_block(b, encode_memo_)}, 0);
                }
            }
        }
    }

    if (dirty_) {
        refresh_epochs(io);
        dirty_ = false;
    }

    // Upon first receiving an M-valid block for the current view: lock check,
    // then stage-1 votes.
    if (cur_view_ >= 0 && !voted_block_) {
        auto it = arrival_.find({cur_epoch_, cur_view_});
        if (it != arrival_.end()) {
            for (const BlockPtr& b : it->second) {
                if (!block_valid(b)) continue;
                auto lock = q2_.find(cur_epoch_);
                std::int64_t qc_view = b->parent->view; // v*(Bg) = 0
                if (lock != q2_.end() && lock->second.view > qc_view) continue;
                voted_block_ = b;
                cast_votes(b, 1, io);
                break;
            }
        }
    }

    // Upon first receiving a stage-1 QC for B: set Q^1, stage-2 votes.
    if (voted_block_ && !stage2_done_) {
        if (auto qc = assemble_qc(voted_block_, 1, cur_epoch_)) {
            q1_[cur_epoch_] = *qc;
            stage2_done_ = true;
            cast_votes(voted_block_, 2, io);
        }
    }

    // Upon first receiving a stage-2 QC for B: set Q^2, stage-3 votes.
    if (voted_block_ && !stage3_done_) {
        if (auto qc = assemble_qc(voted_block_, 2, cur_epoch_)) {
            q2_[cur_epoch_] = Lock{*qc, voted_block_->view};
            stage3_done_ = true;
            cast_votes(voted_block_, 3, io);
        }
    }

    // Upon timer expiry or a stage-3 QC for B: view (e, v+1) messages.
    if (cur_view_ >= 0 && !viewmsg_done_) {
        bool stage3_qc = voted_block_ && assemble_qc(voted_block_, 3, cur_epoch_).has_value();
        if (timer_expired || stage3_qc) {
            viewmsg_done_ = true;
            timer_armed_ = false;
            send_view_msgs(cur_epoch_, cur_view_ + 1, io);
        }
    }
}

// ---------------------------------------------------------------------------
// Engine adapter
// ---------------------------------------------------------------------------

class NodeBehavior : public Behavior {
public:
    explicit NodeBehavior(NodeParams params) : node_(std::move(params)) {}

    void on_timeslot(StepIo& io) override {
        NodeIo nio;
        nio.send = [&](Message m, int klass) { io.disseminate(std::move(m), klass); };
        nio.query = [&](const OracleId& oid, Query q) -> std::optional<Message> {
            io.query(oid, std::move(q));
            auto rs = io.exchange();
            if (rs.empty()) return std::nullopt;
            return rs.back();
        };
        nio.flag = [&](std::string k, std::string d) { io.flag(std::move(k), std::move(d)); };
        std::vector<Message> msgs;
        msgs.reserve(io.receipts().size());
        for (const auto& r : io.receipts()) msgs.push_back(r.msg);
        node_.step(msgs, nio);
        confirmed_cache_ = node_.confirmed();
    }

    const TxSet* confirmed() const override { return &confirmed_cache_; }
    Node& node() { return node_; }
    const Node& node() const { return node_; }

private:
    Node node_;
    TxSet confirmed_cache_;
};

} // namespace plsim::hotstuff
