#pragma once

#include "plsim/config.hpp"
#include "plsim/message.hpp"
#include "plsim/oracles.hpp"
#include "plsim/permitters.hpp"
#include "plsim/trace.hpp"
#include "plsim/transactions.hpp"
#include "plsim/types.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace plsim {

class Execution;

// ---------------------------------------------------------------------------
// Behavior interface
// ---------------------------------------------------------------------------

struct ReceivedMessage {
    Message msg;
    PlayerIdx sender = kNoPlayer;
    Timeslot sent_at = 0;
    Timeslot received_at = 0;
};

struct Outgoing {
    Message msg;
    int delivery_class = 0;
};

// What a behavior sees and does during one active non-waiting timeslot.
// Oracle interaction follows the inner-loop discipline: queued queries are
// sent on exchange(), which also collects the responses due by now; each
// exchange counts one loop iteration against the cap.
class StepIo {
public:
    StepIo(Execution& ex, PlayerIdx self, Timeslot t) : ex_(ex), self_(self), t_(t) {}

    PlayerIdx self() const { return self_; }
    bool knows_time() const;
    Timeslot now() const; // throws unless the protocol runs with time visible

    const std::vector<ReceivedMessage>& receipts() const { return receipts_; }
    const std::vector<Message>& initial_responses() const { return initial_responses_; }

    void query(const OracleId& oracle, Query q) { pending_queries_.push_back({oracle, std::move(q)}); }
    std::vector<Message> exchange();

    void disseminate(Message m, int delivery_class = 0) {
        outgoing_.push_back({std::move(m), delivery_class});
    }

    void flag(std::string kind, std::string detail = {});

    // Adversary-only hooks (null for honest players).
    const std::map<PlayerIdx, std::vector<ReceivedMessage>>* adversary_receipts() const;

private:
    friend class Execution;
    Execution& ex_;
    PlayerIdx self_;
    Timeslot t_;
    std::vector<ReceivedMessage> receipts_;
    std::vector<Message> initial_responses_;
    std::vector<std::pair<OracleId, Query>> pending_queries_;
    std::vector<Outgoing> outgoing_;
    int iterations_ = 0;
};

class Behavior {
public:
    virtual ~Behavior() = default;
    virtual void on_timeslot(StepIo& io) = 0;

    // Protocol confirmation rule output, for honest blockchain players.
    virtual const TxSet* confirmed() const { return nullptr; }
    // One-shot decision output (consensus-style protocols).
    virtual std::optional<int> output() const { return std::nullopt; }
    // Owners of protocol-defined resources, from this player's view.
    virtual std::optional<std::map<std::string, std::set<Identifier>>> resource_owners() const {
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// Timing rules and environments
// ---------------------------------------------------------------------------

class TimingRule {
public:
    virtual ~TimingRule() = default;
    // Delivery timeslot (> send time) for one (sender, receiver) pair;
    // nullopt = the dissemination is never delivered to this receiver.
    virtual std::optional<Timeslot> deliver_at(PlayerIdx from, PlayerIdx to,
                                               const DisseminationEvent& d,
                                               const ExecutionConfig& cfg, KeyedRng& rng) = 0;
};

// Everything arrives at the next timeslot.
class NextTimeslotRule final : public TimingRule {
public:
    std::optional<Timeslot> deliver_at(PlayerIdx, PlayerIdx, const DisseminationEvent& d,
                                       const ExecutionConfig&, KeyedRng&) override {
        return d.t + 1;
    }
};

// Seeded jitter within the model bound.
class BoundedJitterRule final : public TimingRule {
public:
    std::optional<Timeslot> deliver_at(PlayerIdx, PlayerIdx, const DisseminationEvent& d,
                                       const ExecutionConfig& cfg, KeyedRng& rng) override {
        Timeslot lo = d.t + 1;
        Timeslot hi = std::max(lo, cfg.delivery_bound(d.t));
        return lo + static_cast<Timeslot>(rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }
};

class Environment {
public:
    virtual ~Environment() = default;
    virtual std::vector<std::pair<PlayerIdx, TransactionPtr>> inject(Timeslot t,
                                                                     const ExecutionTrace& prefix) = 0;
};

class NullEnvironment final : public Environment {
public:
    std::vector<std::pair<PlayerIdx, TransactionPtr>> inject(Timeslot,
                                                             const ExecutionTrace&) override {
        return {};
    }
};

// Fixed injection script.
class ScriptedEnvironment final : public Environment {
public:
    void add(Timeslot t, PlayerIdx p, TransactionPtr tx) { script_[t].push_back({p, std::move(tx)}); }
    std::vector<std::pair<PlayerIdx, TransactionPtr>> inject(Timeslot t,
                                                             const ExecutionTrace&) override {
        auto it = script_.find(t);
        return it == script_.end() ? std::vector<std::pair<PlayerIdx, TransactionPtr>>{} : it->second;
    }

private:
    std::map<Timeslot, std::vector<std::pair<PlayerIdx, TransactionPtr>>> script_;
};

// ---------------------------------------------------------------------------
// Setup
// ---------------------------------------------------------------------------

struct PlayerSetup {
    PlayerInfo info;
    std::shared_ptr<Behavior> behavior;
    std::function<Activity(Timeslot)> activity; // total over all timeslots
    int protocol_input = -1;
};

struct CorruptionScript {
    Timeslot t_c = 0;
    std::vector<PlayerIdx> players;
    // Replacement behaviors, constructed when the event fires.
    std::function<std::shared_ptr<Behavior>(PlayerIdx)> replace;
};

struct ExecutionSetup {
    ExecutionConfig config;
    StakeState stake0;
    bool authenticated = true;
    bool players_know_time = true;
    std::vector<PlayerSetup> players;
    // Lazily instantiates additional players at the start of each timeslot.
    std::function<std::vector<PlayerSetup>(Timeslot)> spawner;
    std::vector<OraclePtr> oracles;
    std::map<OracleId, ResourceAllocation> resources; // per permitter
    std::shared_ptr<Environment> environment = std::make_shared<NullEnvironment>();
    std::shared_ptr<TimingRule> timing = std::make_shared<NextTimeslotRule>();
    std::optional<CorruptionScript> corruption;
    int inner_loop_cap = 10000;
    bool reverse_step_order = false; // stepping-order-unobservability test hook
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

class Execution {
public:
    explicit Execution(ExecutionSetup setup) : setup_(std::move(setup)) {
        setup_.config.validate();
        trace_.config = setup_.config;
        trace_.stake0 = setup_.stake0;
        ledger_.set_authenticated(setup_.authenticated);
        timing_rng_ = std::make_unique<KeyedRng>(setup_.config.seed, "timing");
        for (auto& ps : setup_.players) add_player(std::move(ps));
        setup_.players.clear();
    }

    const ExecutionTrace& trace() const { return trace_; }
    ExecutionTrace& mutable_trace() { return trace_; }
    const ExecutionConfig& config() const { return setup_.config; }
    const StakeState& stake0() const { return trace_.stake0; }
    PlayerIdx player_count() const { return static_cast<PlayerIdx>(players_.size()); }
    Behavior& behavior(PlayerIdx p) { return *players_[p].behavior; }
    const PermissionLedger& ledger() const { return ledger_; }

    bool owns(PlayerIdx p, const Identifier& id) const {
        const auto& ids = trace_.players[p].identifiers;
        return std::find(ids.begin(), ids.end(), id) != ids.end();
    }

    Activity activity_of(PlayerIdx p, Timeslot t) {
        if (players_[p].forced_inactive_from && t >= *players_[p].forced_inactive_from)
            return Activity::Inactive;
        if (players_[p].crashed_from && t >= *players_[p].crashed_from) return Activity::Inactive;
        return players_[p].activity(t);
    }

    // Marks a player as never acting again (used by crash-style adversaries
    // and by the loop-cap rule).
    void force_inactive(PlayerIdx p, Timeslot from) { players_[p].crashed_from = from; }

    // Runs one timeslot; all prior timeslots must have been stepped.
    std::vector<DisseminationEvent> step_timeslot(Timeslot t);

    ExecutionTrace run() {
        for (Timeslot t = 1; t <= setup_.config.duration; ++t) step_timeslot(t);
        trace_.finalize_hash();
        return std::move(trace_);
    }

private:
    friend class StepIo;

    struct PlayerRuntime {
        std::shared_ptr<Behavior> behavior;
        std::function<Activity(Timeslot)> activity;
        std::optional<Timeslot> forced_inactive_from; // inner-loop cap
        std::optional<Timeslot> crashed_from;
        // Delivery queue: (due timeslot, dissemination seq).
        std::deque<std::pair<Timeslot, std::uint64_t>> inbox;
        // Oracle responses awaiting delivery: (due, response event index).
        std::deque<std::pair<Timeslot, std::size_t>> oracle_inbox;
        // Per-timeslot single-use budget spent, per permitter.
        std::map<OracleId, std::int64_t> spent;
        Timeslot spent_at = -1;
        TxSet last_confirmed;
        bool has_confirm_snapshot = false;
        std::map<std::string, std::set<Identifier>> last_owners;
        bool output_recorded = false;
    };

    void add_player(PlayerSetup ps) {
        PlayerIdx idx = static_cast<PlayerIdx>(players_.size());
        trace_.players.push_back(ps.info);
        trace_.protocol_inputs.push_back(ps.protocol_input);
        trace_.activity.emplace_back(static_cast<std::size_t>(setup_.config.duration) + 2,
                                     Activity::Inactive);
        players_.push_back(PlayerRuntime{});
        players_[idx].behavior = std::move(ps.behavior);
        players_[idx].activity = std::move(ps.activity);
        ledger_.set_player_count(players_.size());
        for (const auto& id : trace_.players[idx].identifiers) owner_index_[id] = idx;
        if (ps.info.initially_byzantine) ledger_.mark_byzantine(idx);
        // Players spawned mid-run still receive every earlier dissemination.
        for (const auto& d : trace_.disseminations) {
            auto at = setup_.timing->deliver_at(d.sender, idx, d, setup_.config, *timing_rng_);
            if (!at) continue;
            if (*at <= d.t) throw std::runtime_error("timing rule returned non-causal delivery");
            players_[idx].inbox.push_back({*at, d.seq});
        }
    }

    const OracleSpec* find_oracle(const OracleId& oid) const {
        for (const auto& o : setup_.oracles)
            if (o->id() == oid) return o.get();
        return nullptr;
    }

    std::int64_t resource_balance(const OracleId& oid, PlayerIdx p, Timeslot t) {
        auto it = setup_.resources.find(oid);
        if (it == setup_.resources.end()) return 0;
        if (activity_of(p, t) == Activity::Inactive) return 0;
        return it->second.balance(p, t);
    }

    void record_resource_balances(Timeslot t) {
        for (const auto& o : setup_.oracles) {
            if (!o->is_permitter()) continue;
            auto* sched = [&]() -> ExecutionTrace::ResourceSchedule* {
                for (auto& r : trace_.resources)
                    if (r.oracle == o->id()) return &r;
                trace_.resources.push_back({o->id(), {}});
                return &trace_.resources.back();
            }();
            sched->balance.resize(players_.size());
            for (PlayerIdx p = 0; p < players_.size(); ++p) {
                auto& row = sched->balance[p];
                row.resize(static_cast<std::size_t>(setup_.config.duration) + 2, 0);
                row[static_cast<std::size_t>(t)] = resource_balance(o->id(), p, t);
            }
        }
    }

    void run_corruption(Timeslot t) {
        if (!setup_.corruption || setup_.corruption->t_c != t) return;
        const auto& script = *setup_.corruption;
        // Cashed-out precondition: every identifier of a corrupted player has
        // zero stake under every honest player's confirmed set.
        for (PlayerIdx p = 0; p < players_.size(); ++p) {
            if (trace_.is_byzantine_at(p, t)) continue;
            bool p_corrupting =
                std::find(script.players.begin(), script.players.end(), p) != script.players.end();
            if (p_corrupting) continue;
            if (!players_[p].has_confirm_snapshot) continue; // not a blockchain player
            auto table = stake_table(trace_.stake0, players_[p].last_confirmed);
            for (PlayerIdx victim : script.players) {
                for (const auto& id : trace_.players[victim].identifiers) {
                    auto it = table.find(id);
                    if (it != table.end() && it->second > 0)
                        throw std::runtime_error(
                            "corruption event precondition violated: player still holds confirmed stake");
                }
            }
        }
        for (PlayerIdx victim : script.players) {
            trace_.players[victim].corrupted_at = t;
            ledger_.mark_byzantine(victim);
            players_[victim].behavior = script.replace(victim);
        }
        trace_.corruptions.push_back({t, script.players});
    }

    void schedule_dissemination(const DisseminationEvent& d) {
        for (PlayerIdx to = 0; to < players_.size(); ++to) {
            std::optional<Timeslot> at;
            if (to == d.sender) {
                at = d.t + 1; // self-receipt
            } else {
                at = setup_.timing->deliver_at(d.sender, to, d, setup_.config, *timing_rng_);
            }
            if (!at) continue;
            if (*at <= d.t) throw std::runtime_error("timing rule returned non-causal delivery");
            players_[to].inbox.push_back({*at, d.seq});
        }
    }

    std::vector<ReceivedMessage> collect_receipts(PlayerIdx p, Timeslot t) {
        std::vector<std::pair<Timeslot, std::uint64_t>> due;
        auto& inbox = players_[p].inbox;
        for (auto it = inbox.begin(); it != inbox.end();) {
            if (it->first <= t) {
                due.push_back(*it);
                it = inbox.erase(it);
            } else {
                ++it;
            }
        }
        std::sort(due.begin(), due.end());
        std::vector<ReceivedMessage> out;
        out.reserve(due.size());
        for (const auto& [due_t, seq] : due) {
            const auto& d = trace_.disseminations[static_cast<std::size_t>(seq)];
            out.push_back({d.message, d.sender, d.t, t});
            trace_.receipts.push_back({t, p, seq});
            ledger_.register_message(p, d.message);
        }
        return out;
    }

    std::vector<Message> collect_oracle_responses(PlayerIdx p, Timeslot t) {
        std::vector<std::pair<Timeslot, std::size_t>> due;
        auto& inbox = players_[p].oracle_inbox;
        for (auto it = inbox.begin(); it != inbox.end();) {
            if (it->first <= t) {
                due.push_back(*it);
                it = inbox.erase(it);
            } else {
                ++it;
            }
        }
        std::sort(due.begin(), due.end());
        std::vector<Message> out;
        for (const auto& [due_t, idx] : due) {
            const auto& r = trace_.oracle_responses[idx];
            ledger_.register_message(p, r.response);
            out.push_back(r.response);
        }
        return out;
    }

    // Sends one query; returns false if dropped by permission or budget.
    bool send_query(PlayerIdx p, Timeslot t, const OracleId& oid, const Query& q) {
        const OracleSpec* oracle = find_oracle(oid);
        if (!oracle) {
            trace_.flags.push_back({t, p, "unknown-oracle", oid});
            return false;
        }
        IdentifierDirectory dir{
            [this](PlayerIdx pp, const Identifier& id) { return owns(pp, id); },
            [this](const Identifier& id) {
                auto it = owner_index_.find(id);
                return it == owner_index_.end() ? kNoPlayer : it->second;
            }};
        if (!is_permitted(q, p, ledger_, dir)) {
            trace_.flags.push_back({t, p, "query-not-permitted", oid});
            return false;
        }
        std::int64_t weight = -1;
        if (oracle->is_permitter()) {
            const auto* perm = static_cast<const PermitterSpec*>(oracle);
            auto b = PermitterSpec::query_weight(q);
            if (!b) {
                trace_.flags.push_back({t, p, "malformed-permitter-query", oid});
                return false;
            }
            weight = *b;
            auto& rt = players_[p];
            if (rt.spent_at != t) {
                rt.spent.clear();
                rt.spent_at = t;
            }
            std::int64_t balance = resource_balance(oid, p, t);
            if (!check_query_budget(balance, rt.spent[oid], *b, perm->mode())) {
                trace_.flags.push_back({t, p, "budget-violation", oid});
                return false;
            }
            if (perm->mode() == PermitterMode::SingleUse) rt.spent[oid] += *b;
        }
        trace_.oracle_queries.push_back({t, p, oid, message_digest(q), weight});
        OracleResponse resp = oracle->respond(q, t, setup_.config.seed);
        if (resp.entries.empty()) return true; // query consumed, no response
        if (resp.delivered_at < t) throw std::runtime_error("oracle delivered into the past");
        trace_.oracle_responses.push_back(
            {t, resp.delivered_at, p, oid, message_digest(resp.entries), resp.entries});
        players_[p].oracle_inbox.push_back({resp.delivered_at, trace_.oracle_responses.size() - 1});
        return true;
    }

    void dispatch_outgoing(PlayerIdx p, Timeslot t, std::vector<Outgoing>& outgoing,
                           std::vector<DisseminationEvent>& events) {
        IdentifierDirectory dir{
            [this](PlayerIdx pp, const Identifier& id) { return owns(pp, id); },
            [this](const Identifier& id) {
                auto it = owner_index_.find(id);
                return it == owner_index_.end() ? kNoPlayer : it->second;
            }};
        for (auto& out : outgoing) {
            if (!is_permitted(out.msg, p, ledger_, dir)) {
                trace_.flags.push_back({t, p, "permission-drop", message_digest(out.msg).hex()});
                continue;
            }
            DisseminationEvent d;
            d.seq = trace_.disseminations.size();
            d.t = t;
            d.sender = p;
            d.msg_digest = message_digest(out.msg);
            d.message = std::move(out.msg);
            d.delivery_class = out.delivery_class;
            trace_.disseminations.push_back(d);
            schedule_dissemination(trace_.disseminations.back());
            events.push_back(trace_.disseminations.back());
        }
        outgoing.clear();
    }

    void record_post_step(PlayerIdx p, Timeslot t) {
        auto& rt = players_[p];
        if (!trace_.is_byzantine_at(p, t)) {
            if (const TxSet* conf = rt.behavior->confirmed()) {
                if (!rt.has_confirm_snapshot || !(*conf == rt.last_confirmed)) {
                    rt.last_confirmed = *conf;
                    rt.has_confirm_snapshot = true;
                    trace_.confirm_snapshots.push_back({t, p, *conf});
                }
            }
            if (auto owners = rt.behavior->resource_owners()) {
                for (auto& [res, ids] : *owners) {
                    auto it = rt.last_owners.find(res);
                    if (it == rt.last_owners.end() || it->second != ids) {
                        rt.last_owners[res] = ids;
                        trace_.resource_snapshots.push_back({t, p, res, ids});
                    }
                }
            }
        }
        if (!rt.output_recorded) {
            if (auto out = rt.behavior->output()) {
                rt.output_recorded = true;
                trace_.outputs.push_back({t, p, *out});
            }
        }
    }

    ExecutionSetup setup_;
    ExecutionTrace trace_;
    std::unordered_map<Identifier, PlayerIdx> owner_index_;
    std::vector<PlayerRuntime> players_;
    PermissionLedger ledger_;
    std::unique_ptr<KeyedRng> timing_rng_;
    Timeslot next_t_ = 1;

    // Per-timeslot adversary coordination: all Byzantine players' receipts.
    std::map<PlayerIdx, std::vector<ReceivedMessage>> byz_receipts_;

public:
    const std::map<PlayerIdx, std::vector<ReceivedMessage>>& byz_receipts() const {
        return byz_receipts_;
    }
    bool players_know_time() const { return setup_.players_know_time; }
    int inner_loop_cap() const { return setup_.inner_loop_cap; }
};

inline bool StepIo::knows_time() const { return ex_.players_know_time(); }

inline Timeslot StepIo::now() const {
    if (!ex_.players_know_time())
        throw std::logic_error("protocol runs with the current timeslot withheld");
    return t_;
}

// ---------------------------------------------------------------------------

inline std::vector<DisseminationEvent> Execution::step_timeslot(Timeslot t) {
    if (t != next_t_) throw std::runtime_error("timeslots must be stepped in order");
    ++next_t_;

    if (setup_.spawner) {
        for (auto& ps : setup_.spawner(t)) add_player(std::move(ps));
    }
    run_corruption(t);
    record_resource_balances(t);

    // Environment injections for this timeslot (adaptive to the prefix).
    auto injections = setup_.environment->inject(t, trace_);

    // Phase A: resolve activity, deliveries and env receipts for everyone
    // before anyone steps. Within a timeslot no player observes another's
    // same-timeslot actions, so stepping order is unobservable.
    std::vector<Activity> act(players_.size(), Activity::Inactive);
    std::map<PlayerIdx, std::vector<ReceivedMessage>> receipts;
    std::map<PlayerIdx, std::vector<Message>> initial_responses;
    for (PlayerIdx p = 0; p < players_.size(); ++p) {
        act[p] = activity_of(p, t);
        trace_.activity[p][static_cast<std::size_t>(t)] = act[p];
        if (!is_participating(act[p])) continue;
        receipts[p] = collect_receipts(p, t);
    }
    for (const auto& [p, tx] : injections) {
        if (p >= players_.size() || !is_participating(act[p])) {
            throw std::runtime_error("environment injected to a non-participating player");
        }
        trace_.env_injections.push_back({t, p, tx});
        Message m{tx_entry(tx)};
        ledger_.register_message(p, m);
        receipts[p].push_back({std::move(m), kNoPlayer, t, t});
    }
    for (auto& [p, rs] : receipts) {
        initial_responses[p] = collect_oracle_responses(p, t);
    }

    byz_receipts_.clear();
    for (const auto& [p, rs] : receipts) {
        if (trace_.is_byzantine_at(p, t)) byz_receipts_[p] = rs;
    }

    // Phase B: step participating players in deterministic order.
    std::vector<PlayerIdx> order;
    for (PlayerIdx p = 0; p < players_.size(); ++p)
        if (is_participating(act[p])) order.push_back(p);
    if (setup_.reverse_step_order) std::reverse(order.begin(), order.end());

    std::vector<DisseminationEvent> events;
    for (PlayerIdx p : order) {
        StepIo io(*this, p, t);
        io.receipts_ = std::move(receipts[p]);
        io.initial_responses_ = std::move(initial_responses[p]);
        try {
            players_[p].behavior->on_timeslot(io);
            // Any queries queued but never exchanged still get sent; their
            // responses arrive at later timeslots per the response function.
            if (!io.pending_queries_.empty()) io.exchange();
        } catch (const std::length_error&) {
            players_[p].forced_inactive_from = t;
            trace_.flags.push_back({t, p, "loop-cap", "inner loop cap exceeded"});
            io.outgoing_.clear();
        }
        dispatch_outgoing(p, t, io.outgoing_, events);
        record_post_step(p, t);
    }
    return events;
}

inline std::vector<Message> StepIo::exchange() {
    if (++iterations_ > ex_.inner_loop_cap()) throw std::length_error("inner loop cap");
    for (auto& [oid, q] : pending_queries_) ex_.send_query(self_, t_, oid, q);
    pending_queries_.clear();
    return ex_.collect_oracle_responses(self_, t_);
}

inline void StepIo::flag(std::string kind, std::string detail) {
    ex_.mutable_trace().flags.push_back({t_, self_, std::move(kind), std::move(detail)});
}

inline const std::map<PlayerIdx, std::vector<ReceivedMessage>>* StepIo::adversary_receipts() const {
    if (!ex_.trace().is_byzantine_at(self_, t_)) return nullptr;
    return &ex_.byz_receipts();
}

// ---------------------------------------------------------------------------
// Timing-rule validation
// ---------------------------------------------------------------------------

struct TimingViolation {
    PlayerIdx sender = kNoPlayer;
    PlayerIdx receiver = kNoPlayer;
    Digest msg;
    Timeslot sent_at = 0;
    std::string reason;
};

// Validates the realized deliveries of a trace against the communication
// model: every receiver with a qualifying timeslot t' >= bound has received
// each dissemination by t', and every receipt is causal.
inline std::optional<TimingViolation> validate_timing_rule(const ExecutionTrace& tr) {
    const auto& cfg = tr.config;
    // receipt times: receipt_of[seq][receiver]
    std::unordered_map<std::uint64_t, std::map<PlayerIdx, Timeslot>> receipt_at;
    for (const auto& r : tr.receipts) {
        auto [it, fresh] = receipt_at[r.dissemination_seq].emplace(r.receiver, r.t);
        if (!fresh)
            return TimingViolation{tr.disseminations[r.dissemination_seq].sender, r.receiver,
                                   tr.disseminations[r.dissemination_seq].msg_digest,
                                   tr.disseminations[r.dissemination_seq].t,
                                   "dissemination received more than once"};
    }
    bool drift = tr.config.kappa.num != tr.config.kappa.den;
    for (const auto& d : tr.disseminations) {
        Timeslot bound = cfg.delivery_bound(d.t);
        const auto& rec = receipt_at[d.seq];
        for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
            if (p == d.sender) continue;
            // First qualifying timeslot for p at or after the bound.
            Timeslot qualifying = -1;
            for (Timeslot t = bound; t <= cfg.duration; ++t) {
                Activity a = tr.activity_at(p, t);
                if (drift ? is_participating(a) : is_active(a)) {
                    qualifying = t;
                    break;
                }
            }
            if (qualifying < 0) continue; // no obligation within the horizon
            auto it = rec.find(p);
            if (it == rec.end() || it->second > qualifying) {
                return TimingViolation{d.sender, p, d.msg_digest, d.t,
                                       "not delivered by the model bound"};
            }
        }
        for (const auto& [p, at] : rec) {
            if (at <= d.t)
                return TimingViolation{d.sender, p, d.msg_digest, d.t, "non-causal receipt"};
        }
    }
    return std::nullopt;
}

// Extensional form used by unit tests: an explicit delivery table.
struct TimingTable {
    struct Row {
        PlayerIdx sender;
        PlayerIdx receiver;
        Timeslot sent_at;
        std::optional<Timeslot> received_at;
    };
    std::vector<Row> rows;
};

// Activity map: activity[player][timeslot] (index 0 unused).
inline std::optional<TimingViolation> validate_timing_table(
    const TimingTable& table, const ExecutionConfig& cfg,
    const std::vector<std::vector<Activity>>& activity) {
    bool drift = cfg.kappa.num != cfg.kappa.den;
    for (const auto& row : table.rows) {
        if (row.received_at && *row.received_at <= row.sent_at)
            return TimingViolation{row.sender, row.receiver, {}, row.sent_at, "non-causal receipt"};
        Timeslot bound = cfg.delivery_bound(row.sent_at);
        Timeslot qualifying = -1;
        for (Timeslot t = bound; t <= cfg.duration; ++t) {
            Activity a = (t < static_cast<Timeslot>(activity[row.receiver].size()))
                             ? activity[row.receiver][static_cast<std::size_t>(t)]
                             : Activity::Inactive;
            if (drift ? is_participating(a) : is_active(a)) {
                qualifying = t;
                break;
            }
        }
        if (qualifying < 0) continue;
        if (!row.received_at || *row.received_at > qualifying)
            return TimingViolation{row.sender, row.receiver, {}, row.sent_at,
                                   "not delivered by the model bound"};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

inline ExecutionTrace run_execution(ExecutionSetup setup) {
    if (setup.config.duration == 0) {
        ExecutionTrace tr;
        tr.config = setup.config;
        tr.stake0 = setup.stake0;
        for (auto& ps : setup.players) {
            tr.players.push_back(ps.info);
            tr.protocol_inputs.push_back(ps.protocol_input);
            tr.activity.emplace_back(2, Activity::Inactive);
        }
        tr.finalize_hash();
        return tr;
    }
    Execution ex(std::move(setup));
    return ex.run();
}

} // namespace plsim
