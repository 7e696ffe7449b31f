#pragma once

#include "plsim/baselines.hpp"
#include "plsim/scenarios.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace plsim::fmt {

// Versioned tree-structured scenario configuration. The grammar is pinned in
// docs/scenario_config.md: a `version` line, then `[section]` headers with
// `key = value` entries; `#` starts a comment; repeated keys accumulate.
// Stakes and timeslots are integers; rationals are written num/den.

struct ParseError {
    std::size_t line = 0;
    std::string message;

    std::string str() const { return "line " + std::to_string(line) + ": " + message; }
};

struct ConfigFile {
    int version = 0;
    // section -> ordered (key, value) pairs
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        auto it = sections.find(section);
        if (it == sections.end()) return std::nullopt;
        for (const auto& [k, v] : it->second)
            if (k == key) return v;
        return std::nullopt;
    }
    std::vector<std::string> get_all(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        auto it = sections.find(section);
        if (it == sections.end()) return out;
        for (const auto& [k, v] : it->second)
            if (k == key) out.push_back(v);
        return out;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

inline std::variant<ConfigFile, ParseError> parse_config(std::istream& is) {
    ConfigFile cfg;
    std::string line;
    std::size_t lineno = 0;
    std::string section;
    bool version_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (!version_seen) {
            if (s.rfind("version", 0) != 0)
                return ParseError{lineno, "expected 'version <n>' first"};
            try {
                cfg.version = std::stoi(detail::trim(s.substr(7)));
            } catch (...) {
                return ParseError{lineno, "bad version number"};
            }
            if (cfg.version != 1) return ParseError{lineno, "unsupported version"};
            version_seen = true;
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') return ParseError{lineno, "unterminated section header"};
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section.empty()) return ParseError{lineno, "empty section name"};
            cfg.sections[section];
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) return ParseError{lineno, "expected 'key = value'"};
        if (section.empty()) return ParseError{lineno, "entry outside any section"};
        std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        if (key.empty()) return ParseError{lineno, "empty key"};
        cfg.sections[section].push_back({key, value});
    }
    if (!version_seen) return ParseError{1, "empty file"};
    return cfg;
}

inline std::variant<ConfigFile, ParseError> parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) return ParseError{0, "cannot open " + path};
    return parse_config(is);
}

inline std::optional<Rational> parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational{std::stoll(s), 1};
        return Rational{std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
    } catch (...) {
        return std::nullopt;
    }
}

// --- custom scenarios --------------------------------------------------------

// A directly specified single-instance scenario: explicit stake, players,
// environment script, timing rule, silent adversaries, and expectations.
inline std::variant<scen::ScenarioSpec, ParseError> build_custom_scenario(const ConfigFile& cfg) {
    using scen::ScenarioSpec;
    ScenarioSpec spec;
    spec.name = cfg.get("scenario", "label").value_or("custom");
    spec.summary = "custom scenario from configuration";

    ExecutionConfig base;
    auto geti = [&](const char* key, Timeslot dflt) {
        auto v = cfg.get("config", key);
        return v ? static_cast<Timeslot>(std::stoll(*v)) : dflt;
    };
    base.delta = geti("delta", 2);
    base.duration = geti("duration", 50);
    base.gst = geti("gst", 0);
    base.r_max = geti("r_max", 1);
    if (auto k = cfg.get("config", "kappa")) {
        auto r = parse_rational(*k);
        if (!r) return ParseError{0, "bad kappa"};
        base.kappa = *r;
    }
    if (auto r0 = cfg.get("config", "rho")) {
        auto r = parse_rational(*r0);
        if (!r) return ParseError{0, "bad rho"};
        base.rho = *r;
    }
    if (auto sd = cfg.get("config", "seed")) base.seed = std::stoull(*sd);
    try {
        base.validate();
    } catch (const std::exception& e) {
        return ParseError{0, e.what()};
    }

    std::map<Identifier, Stake> stake;
    if (cfg.sections.count("stake")) {
        for (const auto& [id, v] : cfg.sections.at("stake")) stake[id] = std::stoll(v);
    }
    StakeState s0{stake};

    // players: <name> = <behavior spec>, behavior in {gossip,
    // timed-confirmer <wait>, staked-quorum, silent}
    struct PlayerDecl {
        std::string name;
        std::string behavior;
        Timeslot wait = 0;
        bool byzantine = false;
    };
    std::vector<PlayerDecl> decls;
    if (cfg.sections.count("players")) {
        for (const auto& [name, v] : cfg.sections.at("players")) {
            PlayerDecl d;
            d.name = name;
            std::istringstream ss(v);
            ss >> d.behavior;
            if (d.behavior == "timed-confirmer") ss >> d.wait;
            if (d.behavior == "silent") d.byzantine = true;
            if (d.behavior != "gossip" && d.behavior != "timed-confirmer" &&
                d.behavior != "staked-quorum" && d.behavior != "silent")
                return ParseError{0, "unknown behavior '" + d.behavior + "'"};
            decls.push_back(d);
        }
    }
    if (decls.empty()) return ParseError{0, "custom scenario needs a [players] section"};

    // environment: inject = <t> <player> <txid> <from> <to> <amount>
    struct Inject {
        Timeslot t;
        std::string player;
        std::string txid, from, to;
        Stake amount;
    };
    std::vector<Inject> injects;
    for (const auto& line : cfg.get_all("environment", "inject")) {
        Inject in;
        std::istringstream ss(line);
        if (!(ss >> in.t >> in.player >> in.txid >> in.from >> in.to >> in.amount))
            return ParseError{0, "bad inject line '" + line + "'"};
        injects.push_back(in);
    }

    std::string timing = cfg.get("timing", "rule").value_or("next");
    if (timing != "next" && timing != "jitter")
        return ParseError{0, "unknown timing rule '" + timing + "'"};

    for (const auto& [prop, want] : cfg.sections.count("expect")
                                        ? cfg.sections.at("expect")
                                        : std::vector<std::pair<std::string, std::string>>{}) {
        spec.expected.push_back({prop, want == "pass"});
    }

    spec.run = [=](std::uint64_t seed) {
        ExecutionSetup setup;
        setup.config = base;
        setup.config.seed = seed;
        setup.stake0 = s0;
        setup.players_know_time = false;
        std::map<std::string, PlayerIdx> index;
        for (const auto& d : decls) {
            std::shared_ptr<Behavior> b;
            if (d.behavior == "gossip") {
                b = std::make_shared<baselines::TxGossip>();
            } else if (d.behavior == "timed-confirmer") {
                b = std::make_shared<baselines::TimedConfirmer>(s0, d.wait);
            } else if (d.behavior == "staked-quorum") {
                hotstuff::NodeParams p;
                p.stake0 = s0;
                p.delta = base.delta;
                p.kappa = base.kappa;
                p.my_ids = {d.name};
                b = std::make_shared<hotstuff::NodeBehavior>(p);
            } else {
                b = std::make_shared<adversaries::Silent>();
            }
            index[d.name] = static_cast<PlayerIdx>(setup.players.size());
            setup.players.push_back(scen::make_player(d.name, {d.name}, std::move(b),
                                                      [](Timeslot) { return Activity::Active; },
                                                      d.byzantine));
        }
        auto env = std::make_shared<ScriptedEnvironment>();
        for (const auto& in : injects) {
            auto it = index.find(in.player);
            if (it == index.end()) throw ConfigError("inject to unknown player " + in.player);
            env->add(in.t, it->second,
                     make_tx(in.txid, {UtxoRef{std::string(kGenesisTxId) + ":" + in.from, 0}},
                             in.amount == s0.initial_of(in.from)
                                 ? std::vector<TxOutput>{{in.to, in.amount}}
                                 : std::vector<TxOutput>{{in.to, in.amount},
                                                         {in.from, s0.initial_of(in.from) -
                                                                       in.amount}}));
        }
        setup.environment = env;
        if (timing == "jitter") setup.timing = std::make_shared<BoundedJitterRule>();

        scen::ScenarioOutcome out;
        out.scenario = "custom";
        out.seed = seed;
        out.traces["run"] = run_execution(std::move(setup));
        const auto& tr = out.traces["run"];
        out.add(verdicts::check_consistency(tr));
        out.add(settings::check_dynamically_available(tr));
        out.add(settings::check_quasi_permissionless(tr, settings::OnChainResources{}));
        out.assert_that("timing-valid", !validate_timing_rule(tr).has_value());
        return out;
    };
    return spec;
}

// Builds the scenario named by [scenario] name with its parameters; falls
// back to the custom builder for name = custom.
inline std::variant<scen::ScenarioSpec, ParseError> scenario_from_config(const ConfigFile& cfg) {
    auto name = cfg.get("scenario", "name");
    if (!name) return ParseError{0, "missing [scenario] name"};
    auto param = [&](const char* key) { return cfg.get("scenario", key); };
    auto int_param = [&](const char* key, std::int64_t dflt) {
        auto v = param(key);
        return v ? std::stoll(*v) : dflt;
    };

    scen::ScenarioSpec spec;
    if (*name == "custom") {
        return build_custom_scenario(cfg);
    } else if (*name == "partition") {
        spec = scen::scenario_partition(static_cast<int>(int_param("n0", 2)),
                                        static_cast<int>(int_param("n1", 2)));
    } else if (*name == "responsiveness-split") {
        spec = scen::scenario_responsiveness_split();
    } else if (*name == "payment-circle") {
        spec = scen::scenario_payment_circle(static_cast<int>(int_param("n", 4)));
    } else if (*name == "fresh-churn") {
        spec = scen::scenario_fresh_churn(static_cast<int>(int_param("s", 4)),
                                          int_param("horizon", 10));
    } else if (*name == "committee-reactivity") {
        spec = scen::scenario_committee_reactivity(static_cast<int>(int_param("rolling_window", 3)));
    } else if (*name == "da-agreement") {
        spec = scen::scenario_positive_da(static_cast<int>(int_param("coins", 5)),
                                          int_param("faulty", 1) != 0);
    } else if (*name == "qp-staked-quorum") {
        Rational kappa{1, 1};
        if (auto k = param("kappa")) {
            auto r = parse_rational(*k);
            if (!r) return ParseError{0, "bad kappa"};
            kappa = *r;
        }
        scen::QpAdversary adv = scen::QpAdversary::None;
        if (auto a = param("adversary")) {
            if (*a == "equivocate") adv = scen::QpAdversary::Equivocate;
            else if (*a == "withhold") adv = scen::QpAdversary::Withhold;
            else if (*a != "none") return ParseError{0, "unknown adversary '" + *a + "'"};
        }
        spec = scen::scenario_positive_qp(int_param("delta", 2), kappa, int_param("gst", 0), adv,
                                          static_cast<int>(int_param("duration_mult", 1)));
    } else if (*name == "responsive-qp") {
        spec = scen::scenario_responsive_qp();
    } else if (*name == "accountable-fork") {
        spec = scen::scenario_accountable_fork();
    } else if (*name == "long-range") {
        spec = scen::scenario_long_range(false);
    } else if (*name == "long-range-ephemeral") {
        spec = scen::scenario_long_range(true);
    } else if (*name == "split-brain") {
        spec = scen::scenario_split_brain();
    } else {
        return ParseError{0, "unknown scenario '" + *name + "'"};
    }

    // [expect] overrides the scenario's default expectations.
    if (cfg.sections.count("expect")) {
        spec.expected.clear();
        for (const auto& [prop, want] : cfg.sections.at("expect"))
            spec.expected.push_back({prop, want == "pass"});
    }
    return spec;
}

// Suite files: [suite] with repeated `scenario = <path>` entries, resolved
// relative to the suite file's directory.
struct SuiteFile {
    std::vector<std::string> scenario_paths;
};

inline std::variant<SuiteFile, ParseError> parse_suite_file(const std::string& path) {
    auto parsed = parse_config_file(path);
    if (auto* err = std::get_if<ParseError>(&parsed)) return *err;
    const auto& cfg = std::get<ConfigFile>(parsed);
    SuiteFile suite;
    std::string dir;
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash + 1);
    for (const auto& rel : cfg.get_all("suite", "scenario")) {
        suite.scenario_paths.push_back(rel.front() == '/' ? rel : dir + rel);
    }
    if (suite.scenario_paths.empty()) return ParseError{0, "suite lists no scenarios"};
    return suite;
}

} // namespace plsim::fmt
