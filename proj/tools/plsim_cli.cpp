// plsim: deterministic simulator for permissionless-consensus executions.
//
//   plsim run <scenario.cfg> --seed S [--out trace.jsonl]
//   plsim verify <trace.jsonl> --props consistency,liveness --params ell=208
//   plsim suite <suite.cfg> --seeds A..B [--report report.jsonl]
//   plsim list-scenarios
//
// Exit status: 0 all properties/expectations met, 1 on a verdict mismatch,
// 2 on a malformed configuration (with the offending location).

#include "plsim/config_format.hpp"
#include "plsim/scenarios.hpp"
#include "plsim/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using namespace plsim;

namespace {

std::map<std::string, std::string> parse_kv(const std::string& csv) {
    std::map<std::string, std::string> out;
    std::istringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

const ExecutionTrace* primary_trace(const scen::ScenarioOutcome& outcome) {
    for (const char* key : {"run", "i3", "i0"}) {
        auto it = outcome.traces.find(key);
        if (it != outcome.traces.end()) return &it->second;
    }
    return outcome.traces.empty() ? nullptr : &outcome.traces.begin()->second;
}

void print_verdicts(const scen::ScenarioOutcome& outcome) {
    for (const auto& v : outcome.verdicts) {
        std::cout << "  " << v.property << ": "
                  << (v.applicable ? (v.pass ? "pass" : "fail") : "n/a");
        if (!v.pass && !v.witness.empty()) std::cout << "  [" << v.witness << "]";
        std::cout << "\n";
    }
}

int cmd_run(const std::string& cfg_path, std::uint64_t seed, const std::string& out_path) {
    auto parsed = fmt::parse_config_file(cfg_path);
    if (auto* err = std::get_if<fmt::ParseError>(&parsed)) {
        std::cerr << cfg_path << ": " << err->str() << "\n";
        return 2;
    }
    auto spec_or = fmt::scenario_from_config(std::get<fmt::ConfigFile>(parsed));
    if (auto* err = std::get_if<fmt::ParseError>(&spec_or)) {
        std::cerr << cfg_path << ": " << err->str() << "\n";
        return 2;
    }
    const auto& spec = std::get<scen::ScenarioSpec>(spec_or);
    auto outcome = spec.run(seed);
    std::cout << spec.name << " (seed " << seed << ")\n";
    print_verdicts(outcome);
    if (!out_path.empty()) {
        const ExecutionTrace* tr = primary_trace(outcome);
        if (tr) {
            trace_io::save_trace_file(*tr, out_path);
            std::cout << "trace written to " << out_path << "\n";
        }
    }
    auto match = scen::matches(outcome, spec.expected);
    if (!match.ok) {
        std::cout << "expectation mismatch: " << match.detail << "\n";
        return 1;
    }
    std::cout << "all expectations met\n";
    return 0;
}

int cmd_verify(const std::string& trace_path, const std::string& props_csv,
               const std::string& params_csv) {
    ExecutionTrace tr;
    try {
        tr = trace_io::load_trace_file(trace_path);
    } catch (const std::exception& e) {
        std::cerr << trace_path << ": " << e.what() << "\n";
        return 2;
    }
    auto params = parse_kv(params_csv);
    auto rational_param = [&](const char* key, Rational dflt) {
        auto it = params.find(key);
        if (it == params.end()) return dflt;
        auto r = fmt::parse_rational(it->second);
        return r ? *r : dflt;
    };
    auto int_param = [&](const char* key, Timeslot dflt) {
        auto it = params.find(key);
        return it == params.end() ? dflt : static_cast<Timeslot>(std::stoll(it->second));
    };

    std::vector<verdicts::Verdict> results;
    std::istringstream ss(props_csv);
    std::string prop;
    while (std::getline(ss, prop, ',')) {
        if (prop == "consistency") {
            results.push_back(verdicts::check_consistency(tr));
        } else if (prop == "liveness") {
            results.push_back(verdicts::check_liveness(tr, int_param("ell", 100)));
        } else if (prop == "responsiveness") {
            Timeslot per = int_param("ell_per_delta", 49);
            results.push_back(verdicts::check_optimistic_responsiveness(
                tr, [per](Timeslot d) { return per * d; }, int_param("delta_star", 0)));
        } else if (prop == "ba") {
            auto ba = verdicts::check_ba(tr);
            results.push_back(ba.termination);
            results.push_back(ba.agreement);
            results.push_back(ba.validity);
        } else if (prop == "da") {
            results.push_back(settings::check_dynamically_available(tr));
        } else if (prop == "qp") {
            results.push_back(
                settings::check_quasi_permissionless(tr, settings::OnChainResources{}));
        } else if (prop == "rho") {
            results.push_back(
                settings::check_rho_bounded_execution(tr, rational_param("rho", tr.config.rho)));
        } else if (prop == "reactive") {
            settings::OnChainResources res;
            for (const auto& s : tr.resource_snapshots) {
                if (std::find(res.protocol_defined.begin(), res.protocol_defined.end(),
                              s.resource) == res.protocol_defined.end())
                    res.protocol_defined.push_back(s.resource);
            }
            results.push_back(settings::check_reactive(tr, int_param("ell_star", 10), res));
        } else if (prop == "timing") {
            auto v = validate_timing_rule(tr);
            verdicts::Verdict tv;
            tv.property = "timing";
            tv.pass = !v.has_value();
            if (v) tv.witness = v->reason;
            results.push_back(tv);
        } else {
            std::cerr << "unknown property '" << prop << "'\n";
            return 2;
        }
    }
    bool all = true;
    for (const auto& v : results) {
        std::cout << v.property << ": " << (v.applicable ? (v.pass ? "pass" : "fail") : "n/a");
        if (!v.pass && !v.witness.empty()) std::cout << "  [" << v.witness << "]";
        std::cout << "\n";
        if (v.applicable && !v.pass) all = false;
    }
    return all ? 0 : 1;
}

int cmd_suite(const std::string& suite_path, const std::string& seeds_arg,
              const std::string& report_path) {
    auto suite_or = fmt::parse_suite_file(suite_path);
    if (auto* err = std::get_if<fmt::ParseError>(&suite_or)) {
        std::cerr << suite_path << ": " << err->str() << "\n";
        return 2;
    }
    const auto& suite = std::get<fmt::SuiteFile>(suite_or);
    std::uint64_t seed_lo = 1, seed_hi = 1;
    {
        auto dots = seeds_arg.find("..");
        try {
            if (dots == std::string::npos) {
                seed_lo = seed_hi = std::stoull(seeds_arg);
            } else {
                seed_lo = std::stoull(seeds_arg.substr(0, dots));
                seed_hi = std::stoull(seeds_arg.substr(dots + 2));
            }
        } catch (...) {
            std::cerr << "bad --seeds range '" << seeds_arg << "'\n";
            return 2;
        }
    }

    std::ofstream report;
    if (!report_path.empty()) {
        report.open(report_path);
        if (!report) {
            std::cerr << "cannot open " << report_path << "\n";
            return 2;
        }
    }

    bool all_ok = true;
    for (const auto& path : suite.scenario_paths) {
        auto parsed = fmt::parse_config_file(path);
        if (auto* err = std::get_if<fmt::ParseError>(&parsed)) {
            std::cerr << path << ": " << err->str() << "\n";
            return 2;
        }
        auto spec_or = fmt::scenario_from_config(std::get<fmt::ConfigFile>(parsed));
        if (auto* err = std::get_if<fmt::ParseError>(&spec_or)) {
            std::cerr << path << ": " << err->str() << "\n";
            return 2;
        }
        const auto& spec = std::get<scen::ScenarioSpec>(spec_or);
        int mismatches = 0;
        for (std::uint64_t seed = seed_lo; seed <= seed_hi; ++seed) {
            auto outcome = spec.run(seed);
            auto match = scen::matches(outcome, spec.expected);
            if (!match.ok) {
                ++mismatches;
                all_ok = false;
            }
            if (report) {
                for (const auto& v : outcome.verdicts) {
                    nlohmann::json j;
                    j["scenario"] = spec.name;
                    j["seed"] = seed;
                    j["property"] = v.property;
                    j["pass"] = v.pass;
                    j["applicable"] = v.applicable;
                    if (!v.witness.empty()) j["witness"] = v.witness;
                    for (const auto& [k, val] : v.params) j["params"][k] = val;
                    for (const auto& e : spec.expected) {
                        if (e.property == v.property) j["expected"] = e.expect_pass;
                    }
                    report << j.dump() << "\n";
                }
            }
        }
        std::cout << spec.name << ": seeds " << seed_lo << ".." << seed_hi << ", "
                  << (mismatches == 0 ? "all expectations met"
                                      : std::to_string(mismatches) + " mismatching seeds")
                  << "\n";
    }
    return all_ok ? 0 : 1;
}

int cmd_list() {
    for (const auto& spec : scen::builtin_scenarios()) {
        std::cout << spec.name << "\n    " << spec.summary << "\n";
        if (!spec.params.empty()) {
            std::cout << "    defaults:";
            for (const auto& [k, v] : spec.params) std::cout << " " << k << "=" << v;
            std::cout << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic permissionless-consensus simulator"};
    app.require_subcommand(1);

    std::string cfg_path, out_path, trace_path, props = "consistency", params, suite_path,
                seeds = "1", report_path;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "run one scenario and write its trace");
    run->add_option("scenario", cfg_path, "scenario configuration file")->required();
    run->add_option("--seed", seed, "execution seed");
    run->add_option("--out", out_path, "trace output path (jsonl)");

    auto* verify = app.add_subcommand("verify", "re-check properties of a trace file");
    verify->add_option("trace", trace_path, "trace file (jsonl)")->required();
    verify->add_option("--props", props, "comma-separated properties");
    verify->add_option("--params", params, "comma-separated key=value parameters");

    auto* suite = app.add_subcommand("suite", "run a suite of scenarios over a seed range");
    suite->add_option("suite", suite_path, "suite configuration file")->required();
    suite->add_option("--seeds", seeds, "seed or range a..b");
    suite->add_option("--report", report_path, "verdict report output (jsonl)");

    app.add_subcommand("list-scenarios", "list built-in scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(cfg_path, seed, out_path);
        if (verify->parsed()) return cmd_verify(trace_path, props, params);
        if (suite->parsed()) return cmd_suite(suite_path, seeds, report_path);
        return cmd_list();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
