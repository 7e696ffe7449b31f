#pragma once

#include "plsim/engine.hpp"
#include "plsim/message.hpp"
#include "plsim/transactions.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>

namespace plsim::baselines {

// Strawman protocols: concrete victims for the impossibility-replay
// scenarios, plus toy protocol-defined-resource examples for the reactivity
// checker. None of these is a contribution; they exist so failures have
// something to fail against.

// One-shot stake-weighted majority vote: disseminate the input once, decide
// at a fixed timeslot on the stake-weighted majority of inputs seen.
// Dynamically available, synchronous-only, and (deliberately) broken in
// partial synchrony.
class MajorityVoteBa : public Behavior {
public:
    MajorityVoteBa(StakeState stake0, std::vector<Identifier> ids, int input, Timeslot decide_at)
        : stake0_(std::move(stake0)), ids_(std::move(ids)), input_(input), decide_at_(decide_at) {}

    void on_timeslot(StepIo& io) override {
        Timeslot t = io.now();
        for (const auto& r : io.receipts()) ingest(r.msg);
        if (!sent_) {
            sent_ = true;
            for (const auto& id : ids_) {
                io.disseminate(Message{signed_entry(
                    id, Value::tuple(Message{general_atom("in"), general_i64(input_)}))});
            }
            for (const auto& id : ids_) votes_.emplace(id, input_); // own vote counts
        }
        if (!output_ && t >= decide_at_) {
            Stake zero = 0, one = 0;
            for (const auto& [id, bit] : votes_) {
                Stake w = stake0_.initial_of(id);
                (bit == 0 ? zero : one) += w;
            }
            output_ = one > zero ? 1 : 0;
        }
    }

    std::optional<int> output() const override { return output_; }

private:
    void ingest(const Message& m) {
        for (const auto& e : m) {
            const auto* s = std::get_if<SignedEntry>(&e);
            if (!s || !s->v->is_tuple() || s->v->entries().size() != 2) continue;
            const auto* tag = std::get_if<GeneralEntry>(&s->v->entries()[0]);
            const auto* bit = std::get_if<GeneralEntry>(&s->v->entries()[1]);
            if (!tag || tag->v->is_tuple() || tag->v->atom_bytes() != "in") continue;
            if (!bit || bit->v->is_tuple()) continue;
            votes_.emplace(s->id, std::stoi(bit->v->atom_bytes()));
        }
    }

    StakeState stake0_;
    std::vector<Identifier> ids_;
    int input_;
    Timeslot decide_at_;
    bool sent_ = false;
    std::map<Identifier, int> votes_;
    std::optional<int> output_;
};

// Transaction gossiper with a receipt-timer confirmation rule: a transaction
// is confirmed `wait` local steps after first receipt, skipping any that
// would invalidate the confirmed set. `wait` = delta gives the fixed-wait
// baseline (live but never responsive); small `wait` gives the fast
// confirmer (responsive but unsafe under partition).
class TimedConfirmer : public Behavior {
public:
    TimedConfirmer(StakeState stake0, Timeslot wait) : stake0_(std::move(stake0)), wait_(wait) {}

    void on_timeslot(StepIo& io) override {
        ++steps_;
        for (const auto& r : io.receipts()) {
            for_each_entry_deep(r.msg, [&](const Entry& e) {
                if (const auto* t = std::get_if<TxEntry>(&e)) {
                    if (pending_.emplace(t->tx->tx_id, std::make_pair(t->tx, steps_)).second) {
                        io.disseminate(Message{tx_entry(t->tx)});
                    }
                }
            });
        }
        for (const auto& [id, entry] : pending_) {
            const auto& [tx, seen_at] = entry;
            if (steps_ - seen_at < wait_ || confirmed_.contains(id)) continue;
            if (is_valid_set(confirmed_.with(tx), stake0_)) confirmed_.insert(tx);
        }
    }

    const TxSet* confirmed() const override { return &confirmed_; }

private:
    StakeState stake0_;
    Timeslot wait_;
    Timeslot steps_ = 0;
    std::map<std::string, std::pair<TransactionPtr, Timeslot>> pending_;
    TxSet confirmed_;
};

// Plain transaction gossiper with no confirmation rule; used by scenarios
// that only exercise environments.
class TxGossip : public Behavior {
public:
    void on_timeslot(StepIo& io) override {
        for (const auto& r : io.receipts()) {
            for_each_entry_deep(r.msg, [&](const Entry& e) {
                if (const auto* t = std::get_if<TxEntry>(&e)) {
                    if (seen_.insert(t->tx->tx_id).second)
                        io.disseminate(Message{tx_entry(t->tx)});
                }
            });
        }
    }

private:
    std::set<std::string> seen_;
};

// A beacon-driven committee resource. The clock player disseminates beacon k
// at timeslot k*delta, granting the committee identifiers for that beacon;
// everyone tracks the highest beacon seen and reports its grant list as the
// "committee" protocol-defined resource. The static variant grants forever
// (essentially permissioned); the rolling variant expires grants after
// `rolling_window` beacons.
class CommitteeProtocol : public Behavior {
public:
    struct Config {
        Timeslot delta = 2;
        bool is_clock = false;
        Identifier clock_id;
        std::vector<Identifier> committee;
        std::optional<int> rolling_window; // nullopt = static grants
    };

    explicit CommitteeProtocol(Config cfg) : cfg_(std::move(cfg)) {}

    void on_timeslot(StepIo& io) override {
        Timeslot t = io.now();
        for (const auto& r : io.receipts()) ingest(r.msg);
        if (cfg_.is_clock && t % cfg_.delta == 0) {
            int k = static_cast<int>(t / cfg_.delta);
            bool granted = !cfg_.rolling_window || k < *cfg_.rolling_window;
            Message grants;
            if (granted) {
                for (const auto& id : cfg_.committee) grants.push_back(general_atom(id));
            }
            io.disseminate(Message{signed_entry(
                cfg_.clock_id, Value::tuple(Message{general_atom("beacon"), general_i64(k),
                                                    general(Value::tuple(grants))}))});
            ingest_beacon(k, granted);
        }
    }

    const TxSet* confirmed() const override { return &empty_; }

    std::optional<std::map<std::string, std::set<Identifier>>> resource_owners() const override {
        return std::map<std::string, std::set<Identifier>>{{"committee", owners_}};
    }

private:
    void ingest(const Message& m) {
        for (const auto& e : m) {
            const auto* s = std::get_if<SignedEntry>(&e);
            if (!s || !s->v->is_tuple() || s->v->entries().size() != 3) continue;
            const auto* tag = std::get_if<GeneralEntry>(&s->v->entries()[0]);
            if (!tag || tag->v->is_tuple() || tag->v->atom_bytes() != "beacon") continue;
            const auto* kv = std::get_if<GeneralEntry>(&s->v->entries()[1]);
            const auto* gl = std::get_if<GeneralEntry>(&s->v->entries()[2]);
            if (!kv || kv->v->is_tuple() || !gl || !gl->v->is_tuple()) continue;
            int k = std::stoi(kv->v->atom_bytes());
            if (k <= top_beacon_) continue;
            top_beacon_ = k;
            owners_.clear();
            for (const auto& ge : gl->v->entries()) {
                if (const auto* g = std::get_if<GeneralEntry>(&ge)) {
                    if (!g->v->is_tuple()) owners_.insert(g->v->atom_bytes());
                }
            }
        }
    }
    void ingest_beacon(int k, bool granted) {
        if (k <= top_beacon_) return;
        top_beacon_ = k;
        owners_.clear();
        if (granted)
            for (const auto& id : cfg_.committee) owners_.insert(id);
    }

    Config cfg_;
    int top_beacon_ = -1;
    std::set<Identifier> owners_;
    TxSet empty_;
};

// Disseminates one signed marker and issues one unit permitter query at its
// entry timeslot; the flood protocol for the fresh-churn execution family.
class FloodOnce : public Behavior {
public:
    FloodOnce(Identifier id, OracleId permitter, bool crash_before_send = false,
              Timeslot delay_send = 0)
        : id_(std::move(id)), permitter_(std::move(permitter)), crash_(crash_before_send),
          delay_(delay_send) {}

    void on_timeslot(StepIo& io) override {
        ++steps_;
        if (steps_ == 1) {
            io.query(permitter_, Query{general_i64(1), general_atom("work:" + id_)});
            io.exchange();
            if (crash_) return; // crashes after querying, before disseminating
            pending_ = Message{signed_entry(id_, Value::atom("beep"))};
        }
        if (pending_ && steps_ > delay_) {
            io.disseminate(*pending_);
            pending_.reset();
        }
    }

private:
    Identifier id_;
    OracleId permitter_;
    bool crash_;
    Timeslot delay_;
    Timeslot steps_ = 0;
    std::optional<Message> pending_;
};

} // namespace plsim::baselines
