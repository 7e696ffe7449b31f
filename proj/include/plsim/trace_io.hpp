#pragma once

#include "plsim/trace.hpp"
#include "plsim/transactions.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace plsim::trace_io {

// Line-delimited trace files: a header record, one record per event in
// (timeslot, kind, sequence) order with fields {t, player, event_kind,
// payload_digest} plus per-kind detail, and a terminating trace-hash line.
// Loaded traces carry transaction content (from the environment records and
// per-dissemination transaction lists) sufficient for every file-level
// verdict; full message bodies are not persisted.

using json = nlohmann::json;

namespace detail {

inline json tx_to_json(const TransactionPtr& tx) {
    json j;
    j["id"] = tx->tx_id;
    json ins = json::array();
    for (const auto& in : tx->inputs) ins.push_back({{"tx", in.tx_id}, {"i", in.index}});
    j["inputs"] = ins;
    json outs = json::array();
    for (const auto& out : tx->outputs) outs.push_back({{"owner", out.owner}, {"value", out.value}});
    j["outputs"] = outs;
    return j;
}

inline TransactionPtr tx_from_json(const json& j) {
    std::vector<UtxoRef> ins;
    for (const auto& in : j.at("inputs"))
        ins.push_back({in.at("tx").get<std::string>(), in.at("i").get<std::uint32_t>()});
    std::vector<TxOutput> outs;
    for (const auto& out : j.at("outputs"))
        outs.push_back({out.at("owner").get<std::string>(), out.at("value").get<Stake>()});
    return make_tx(j.at("id").get<std::string>(), std::move(ins), std::move(outs));
}

inline std::vector<std::string> tx_ids_of(const Message& m) {
    std::vector<std::string> ids;
    for_each_entry_deep(m, [&](const Entry& e) {
        if (const auto* t = std::get_if<TxEntry>(&e)) ids.push_back(t->tx->tx_id);
    });
    return ids;
}

inline char activity_char(Activity a) {
    switch (a) {
        case Activity::Inactive: return 'i';
        case Activity::Waiting: return 'w';
        case Activity::Active: return 'a';
    }
    return 'i';
}

inline Activity activity_from(char c) {
    if (c == 'a') return Activity::Active;
    if (c == 'w') return Activity::Waiting;
    return Activity::Inactive;
}

} // namespace detail

inline void save_trace(const ExecutionTrace& tr, std::ostream& os) {
    json header;
    header["event_kind"] = "header";
    header["format"] = 1;
    header["config"] = {{"delta", tr.config.delta},
                        {"duration", tr.config.duration},
                        {"gst", tr.config.gst},
                        {"kappa", {tr.config.kappa.num, tr.config.kappa.den}},
                        {"rho", {tr.config.rho.num, tr.config.rho.den}},
                        {"epsilon", {tr.config.epsilon.num, tr.config.epsilon.den}},
                        {"r_max", tr.config.r_max},
                        {"seed", tr.config.seed}};
    json players = json::array();
    for (PlayerIdx p = 0; p < tr.player_count(); ++p) {
        const auto& info = tr.players[p];
        json pj;
        pj["name"] = info.name;
        pj["ids"] = info.identifiers;
        pj["byzantine"] = info.initially_byzantine;
        if (info.corrupted_at) pj["corrupted_at"] = *info.corrupted_at;
        std::string act(tr.activity[p].size(), 'i');
        for (std::size_t i = 0; i < tr.activity[p].size(); ++i)
            act[i] = detail::activity_char(tr.activity[p][i]);
        pj["activity"] = act;
        pj["input"] = tr.protocol_inputs[p];
        players.push_back(pj);
    }
    header["players"] = players;
    json stake = json::object();
    for (const auto& [id, v] : tr.stake0.initial()) stake[id] = v;
    header["stake0"] = stake;
    json resources = json::array();
    for (const auto& sched : tr.resources) {
        json rows = json::array();
        for (PlayerIdx p = 0; p < sched.balance.size(); ++p) {
            // Run-length encode the balance row.
            const auto& row = sched.balance[p];
            json runs = json::array();
            std::size_t i = 1;
            while (i < row.size()) {
                std::size_t j = i;
                while (j + 1 < row.size() && row[j + 1] == row[i]) ++j;
                if (row[i] != 0) runs.push_back({i, j, row[i]});
                i = j + 1;
            }
            rows.push_back(runs);
        }
        resources.push_back({{"oracle", sched.oracle}, {"rows", rows}});
    }
    header["resources"] = resources;
    os << header.dump() << "\n";

    auto base = [](Timeslot t, PlayerIdx p, const char* kind, const Digest& d) {
        json j;
        j["t"] = t;
        j["player"] = p == kNoPlayer ? -1 : static_cast<int>(p);
        j["event_kind"] = kind;
        j["payload_digest"] = d.hex();
        return j;
    };

    for (const auto& d : tr.disseminations) {
        json j = base(d.t, d.sender, "disseminate", d.msg_digest);
        j["seq"] = d.seq;
        auto txs = detail::tx_ids_of(d.message);
        if (!txs.empty()) j["txs"] = txs;
        os << j.dump() << "\n";
    }
    for (const auto& r : tr.receipts) {
        json j = base(r.t, r.receiver, "receive", tr.disseminations[r.dissemination_seq].msg_digest);
        j["seq"] = r.dissemination_seq;
        os << j.dump() << "\n";
    }
    for (const auto& q : tr.oracle_queries) {
        json j = base(q.t, q.player, "oracle-query", q.query_digest);
        j["oracle"] = q.oracle;
        j["weight"] = q.weight;
        os << j.dump() << "\n";
    }
    for (const auto& r : tr.oracle_responses) {
        json j = base(r.queried_at, r.player, "oracle-response", r.response_digest);
        j["oracle"] = r.oracle;
        j["delivered_at"] = r.delivered_at;
        os << j.dump() << "\n";
    }
    for (const auto& e : tr.env_injections) {
        json j = base(e.t, e.player, "env-tx", transaction_digest(e.tx));
        j["tx"] = detail::tx_to_json(e.tx);
        os << j.dump() << "\n";
    }
    for (const auto& c : tr.confirm_snapshots) {
        json j = base(c.t, c.player, "confirm", c.confirmed.digest());
        std::vector<std::string> ids;
        for (const auto& [id, tx] : c.confirmed) ids.push_back(id);
        j["txs"] = ids;
        os << j.dump() << "\n";
    }
    for (const auto& o : tr.outputs) {
        json j = base(o.t, o.player, "output", Digest{});
        j["value"] = o.value;
        os << j.dump() << "\n";
    }
    for (const auto& f : tr.flags) {
        json j = base(f.t, f.player, "flag", Digest{});
        j["flag"] = f.kind;
        j["detail"] = f.detail;
        os << j.dump() << "\n";
    }
    for (const auto& c : tr.corruptions) {
        json j = base(c.t, kNoPlayer, "corruption", Digest{});
        j["players"] = c.players;
        os << j.dump() << "\n";
    }
    for (const auto& r : tr.resource_snapshots) {
        json j = base(r.t, r.observer, "resource-owners", Digest{});
        j["resource"] = r.resource;
        j["owners"] = r.owners;
        os << j.dump() << "\n";
    }
    json tail;
    tail["event_kind"] = "trace-hash";
    tail["hash"] = tr.trace_hash.hex();
    os << tail.dump() << "\n";
}

inline void save_trace_file(const ExecutionTrace& tr, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save_trace(tr, os);
}

struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ExecutionTrace load_trace(std::istream& is) {
    ExecutionTrace tr;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::map<std::string, TransactionPtr> tx_table;
    struct PendingDissemination {
        std::uint64_t seq;
        std::vector<std::string> txs;
    };
    std::vector<json> dissemination_lines;
    std::vector<json> other_lines;

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw LoadError("line " + std::to_string(lineno) + ": " + e.what());
        }
        std::string kind = j.value("event_kind", "");
        if (kind == "header") {
            have_header = true;
            const auto& c = j.at("config");
            tr.config.delta = c.at("delta").get<Timeslot>();
            tr.config.duration = c.at("duration").get<Timeslot>();
            tr.config.gst = c.at("gst").get<Timeslot>();
            tr.config.kappa = {c.at("kappa")[0].get<std::int64_t>(),
                               c.at("kappa")[1].get<std::int64_t>()};
            tr.config.rho = {c.at("rho")[0].get<std::int64_t>(), c.at("rho")[1].get<std::int64_t>()};
            tr.config.epsilon = {c.at("epsilon")[0].get<std::int64_t>(),
                                 c.at("epsilon")[1].get<std::int64_t>()};
            tr.config.r_max = c.at("r_max").get<std::int64_t>();
            tr.config.seed = c.at("seed").get<std::uint64_t>();
            std::map<Identifier, Stake> stake;
            for (const auto& [id, v] : j.at("stake0").items()) stake[id] = v.get<Stake>();
            tr.stake0 = StakeState{stake};
            for (const auto& pj : j.at("players")) {
                PlayerInfo info;
                info.name = pj.at("name").get<std::string>();
                info.identifiers = pj.at("ids").get<std::vector<std::string>>();
                info.initially_byzantine = pj.at("byzantine").get<bool>();
                if (pj.contains("corrupted_at"))
                    info.corrupted_at = pj.at("corrupted_at").get<Timeslot>();
                tr.players.push_back(info);
                tr.protocol_inputs.push_back(pj.value("input", -1));
                std::string act = pj.at("activity").get<std::string>();
                std::vector<Activity> row(act.size());
                for (std::size_t i = 0; i < act.size(); ++i)
                    row[i] = detail::activity_from(act[i]);
                tr.activity.push_back(std::move(row));
            }
            for (const auto& rj : j.at("resources")) {
                ExecutionTrace::ResourceSchedule sched;
                sched.oracle = rj.at("oracle").get<std::string>();
                for (const auto& rowj : rj.at("rows")) {
                    std::vector<std::int64_t> row(
                        static_cast<std::size_t>(tr.config.duration) + 2, 0);
                    for (const auto& run : rowj) {
                        std::size_t a = run[0].get<std::size_t>();
                        std::size_t b = run[1].get<std::size_t>();
                        std::int64_t v = run[2].get<std::int64_t>();
                        for (std::size_t i = a; i <= b && i < row.size(); ++i) row[i] = v;
                    }
                    sched.balance.push_back(std::move(row));
                }
                tr.resources.push_back(std::move(sched));
            }
            continue;
        }
        if (!have_header) throw LoadError("line " + std::to_string(lineno) + ": missing header");
        if (kind == "trace-hash") {
            std::string hex = j.at("hash").get<std::string>();
            tr.trace_hash.hi = std::stoull(hex.substr(0, 16), nullptr, 16);
            tr.trace_hash.lo = std::stoull(hex.substr(16, 16), nullptr, 16);
            continue;
        }
        if (kind == "disseminate") {
            dissemination_lines.push_back(std::move(j));
        } else {
            other_lines.push_back(std::move(j));
        }
    }
    if (!have_header) throw LoadError("empty trace file");

    // Environment transactions first: they feed the tx table used to
    // reconstruct message content.
    for (const auto& j : other_lines) {
        if (j.value("event_kind", "") != "env-tx") continue;
        auto tx = detail::tx_from_json(j.at("tx"));
        tx_table[tx->tx_id] = tx;
        tr.env_injections.push_back(
            {j.at("t").get<Timeslot>(), j.at("player").get<PlayerIdx>(), tx});
    }

    std::sort(dissemination_lines.begin(), dissemination_lines.end(),
              [](const json& a, const json& b) {
                  return a.at("seq").get<std::uint64_t>() < b.at("seq").get<std::uint64_t>();
              });
    for (const auto& j : dissemination_lines) {
        DisseminationEvent d;
        d.seq = j.at("seq").get<std::uint64_t>();
        if (d.seq != tr.disseminations.size())
            throw LoadError("dissemination sequence gap at seq " + std::to_string(d.seq));
        d.t = j.at("t").get<Timeslot>();
        d.sender = j.at("player").get<PlayerIdx>();
        std::string hex = j.at("payload_digest").get<std::string>();
        d.msg_digest.hi = std::stoull(hex.substr(0, 16), nullptr, 16);
        d.msg_digest.lo = std::stoull(hex.substr(16, 16), nullptr, 16);
        if (j.contains("txs")) {
            for (const auto& id : j.at("txs")) {
                auto it = tx_table.find(id.get<std::string>());
                if (it != tx_table.end()) d.message.push_back(tx_entry(it->second));
            }
        }
        tr.disseminations.push_back(std::move(d));
    }

    for (const auto& j : other_lines) {
        std::string kind = j.value("event_kind", "");
        Timeslot t = j.value("t", Timeslot{0});
        int player = j.value("player", -1);
        PlayerIdx p = player < 0 ? kNoPlayer : static_cast<PlayerIdx>(player);
        if (kind == "receive") {
            tr.receipts.push_back({t, p, j.at("seq").get<std::uint64_t>()});
        } else if (kind == "oracle-query") {
            tr.oracle_queries.push_back({t, p, j.at("oracle").get<std::string>(), Digest{},
                                         j.value("weight", std::int64_t{-1})});
        } else if (kind == "oracle-response") {
            OracleResponseEvent ev;
            ev.queried_at = t;
            ev.delivered_at = j.at("delivered_at").get<Timeslot>();
            ev.player = p;
            ev.oracle = j.at("oracle").get<std::string>();
            tr.oracle_responses.push_back(std::move(ev));
        } else if (kind == "confirm") {
            TxSet set;
            for (const auto& id : j.at("txs")) {
                auto it = tx_table.find(id.get<std::string>());
                if (it == tx_table.end())
                    throw LoadError("confirm references unknown transaction " +
                                    id.get<std::string>());
                set.insert(it->second);
            }
            tr.confirm_snapshots.push_back({t, p, std::move(set)});
        } else if (kind == "output") {
            tr.outputs.push_back({t, p, j.at("value").get<int>()});
        } else if (kind == "flag") {
            tr.flags.push_back({t, p, j.at("flag").get<std::string>(),
                                j.value("detail", std::string{})});
        } else if (kind == "corruption") {
            tr.corruptions.push_back({t, j.at("players").get<std::vector<PlayerIdx>>()});
        } else if (kind == "resource-owners") {
            ResourceOwnersSnapshot s;
            s.t = t;
            s.observer = p;
            s.resource = j.at("resource").get<std::string>();
            for (const auto& id : j.at("owners")) s.owners.insert(id.get<std::string>());
            tr.resource_snapshots.push_back(std::move(s));
        } else if (kind == "env-tx") {
            // handled above
        } else {
            throw LoadError("unknown event kind '" + kind + "'");
        }
    }
    return tr;
}

inline ExecutionTrace load_trace_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw LoadError("cannot open " + path);
    return load_trace(is);
}

} // namespace plsim::trace_io
