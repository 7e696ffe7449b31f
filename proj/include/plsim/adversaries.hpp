#pragma once

#include "plsim/engine.hpp"
#include "plsim/hotstuff.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace plsim::adversaries {

// Byzantine strategies used by the scenario library. All operate within the
// model: messages still pass permission checks and budgets.

// Fully silent player (crash-like vote withholding).
class Silent : public Behavior {
public:
    void on_timeslot(StepIo&) override {}
};

// Runs the honest node but equivocates: every own block proposal is
// duplicated with a different transaction set and the two variants are
// routed by delivery class; every own vote is duplicated for each other
// known block of the same view.
class EquivocatingNode : public Behavior {
public:
    explicit EquivocatingNode(hotstuff::NodeParams params) : node_(std::move(params)) {}

    void on_timeslot(StepIo& io) override {
        std::vector<Message> msgs;
        for (const auto& r : io.receipts()) msgs.push_back(r.msg);
        hotstuff::NodeIo nio;
        nio.query = [&](const OracleId& oid, Query q) -> std::optional<Message> {
            io.query(oid, std::move(q));
            auto rs = io.exchange();
            if (rs.empty()) return std::nullopt;
            return rs.back();
        };
        nio.flag = [&](std::string k, std::string d) { io.flag(std::move(k), std::move(d)); };
        nio.send = [&](Message m, int) {
            if (auto b = decode_block(m)) {
                // Variant proposal: same justification, no transactions.
                auto alt = hotstuff::make_block(b->proposer, b->height, b->epoch, b->view, TxSet{},
                                                b->parent, b->qc);
                io.disseminate(Message{hotstuff::wire::encode_block(b, memo_)}, 1);
                if (!(alt->digest == b->digest))
                    io.disseminate(Message{hotstuff::wire::encode_block(alt, memo_)}, 2);
                return;
            }
            if (auto v = decode_vote(m)) {
                io.disseminate(std::move(m), 0);
                for (const auto& other : node_.blocks_at(v->block->epoch, v->block->view)) {
                    if (other->digest == v->block->digest) continue;
                    auto dup = hotstuff::make_vote(v->voter, v->claimed, other, v->stage);
                    io.disseminate(Message{hotstuff::wire::encode_vote(dup, memo_)}, 0);
                }
                return;
            }
            io.disseminate(std::move(m), 0);
        };
        node_.step(msgs, nio);
    }

private:
    static hotstuff::BlockPtr decode_block(const Message& m) {
        if (m.size() != 1) return nullptr;
        hotstuff::wire::Decoder dec;
        return dec.decode_block(m[0]);
    }
    static hotstuff::VotePtr decode_vote(const Message& m) {
        if (m.size() != 1) return nullptr;
        hotstuff::wire::Decoder dec;
        return dec.decode_vote(m[0]);
    }

    hotstuff::Node node_;
    std::unordered_map<Digest, Entry, DigestHash> memo_;
};

// Honest until a fork step, then simulates two node instances with filtered
// views: brain A sees class-1 traffic and the configured side-A senders,
// brain B the mirror. Used by the split-brain construction and the
// accountability fork.
class TwoBrainNode : public Behavior {
public:
    struct Config {
        hotstuff::NodeParams params;
        Timeslot fork_at_step = 0; // own participating-step count at which to fork
        // Which brain receives an external message: 0 drop, 1 A, 2 B, 3 both.
        std::function<int(PlayerIdx sender, Timeslot received_at)> route_external;
    };

    explicit TwoBrainNode(Config cfg)
        : cfg_(std::move(cfg)), main_(cfg_.params) {}

    void on_timeslot(StepIo& io) override {
        ++steps_;
        if (steps_ <= cfg_.fork_at_step) {
            std::vector<Message> msgs;
            for (const auto& r : io.receipts()) msgs.push_back(r.msg);
            hotstuff::NodeIo nio = plain_io(io, 0);
            main_.step(msgs, nio);
            if (steps_ == cfg_.fork_at_step) {
                brain_a_ = std::make_unique<hotstuff::Node>(main_);
                brain_b_ = std::make_unique<hotstuff::Node>(main_);
            }
            return;
        }
        std::vector<Message> for_a, for_b;
        for (const auto& r : io.receipts()) {
            int dst;
            if (r.sender == io.self()) {
                // Own traffic: route by the classes it was sent with (both
                // brains may emit identical content).
                auto it = self_class_.find(message_digest(r.msg));
                dst = it == self_class_.end() ? 3 : it->second;
            } else {
                dst = cfg_.route_external ? cfg_.route_external(r.sender, r.received_at) : 3;
            }
            if (dst & 1) for_a.push_back(r.msg);
            if (dst & 2) for_b.push_back(r.msg);
        }
        hotstuff::NodeIo ioa = plain_io(io, 1);
        brain_a_->step(for_a, ioa);
        hotstuff::NodeIo iob = plain_io(io, 2);
        brain_b_->step(for_b, iob);
    }

private:
    hotstuff::NodeIo plain_io(StepIo& io, int klass) {
        hotstuff::NodeIo nio;
        nio.send = [this, &io, klass](Message m, int) {
            self_class_[message_digest(m)] |= (klass == 0 ? 3 : klass);
            io.disseminate(std::move(m), klass);
        };
        nio.query = [&io](const OracleId& oid, Query q) -> std::optional<Message> {
            io.query(oid, std::move(q));
            auto rs = io.exchange();
            if (rs.empty()) return std::nullopt;
            return rs.back();
        };
        nio.flag = [](std::string, std::string) {};
        return nio;
    }

    Config cfg_;
    hotstuff::Node main_;
    std::unique_ptr<hotstuff::Node> brain_a_, brain_b_;
    Timeslot steps_ = 0;
    std::map<Digest, int> self_class_;
};

// Silent until a trigger step, then disseminates a recorded message script
// once, re-obtaining any embedded oracle-signed entries by re-issuing their
// originating queries against the live oracles. With time-malleable oracles
// the responses coincide and the replay goes through; otherwise the entries
// cannot be re-obtained and the messages are dropped by the permission
// layer.
class ReplayFromScript : public Behavior {
public:
    struct Config {
        Timeslot replay_at_step = 0;
        std::vector<Message> script;
        OracleId reissue_oracle; // empty = nothing to re-obtain
    };

    explicit ReplayFromScript(Config cfg) : cfg_(std::move(cfg)) {}

    void on_timeslot(StepIo& io) override {
        ++steps_;
        if (steps_ != cfg_.replay_at_step || fired_) return;
        fired_ = true;
        if (!cfg_.reissue_oracle.empty()) {
            std::set<Digest> asked;
            for (const auto& m : cfg_.script) {
                for_each_entry_deep(m, [&](const Entry& e) {
                    const auto* o = std::get_if<OracleEntry>(&e);
                    if (!o || o->oracle != cfg_.reissue_oracle || !o->v->is_tuple()) return;
                    if (!asked.insert(o->v->digest()).second) return;
                    // The response content is the query: re-issue it.
                    Query q(o->v->entries().begin(), o->v->entries().end());
                    io.query(cfg_.reissue_oracle, std::move(q));
                    io.exchange();
                });
            }
        }
        for (const auto& m : cfg_.script) io.disseminate(m);
    }

private:
    Config cfg_;
    Timeslot steps_ = 0;
    bool fired_ = false;
};

} // namespace plsim::adversaries
