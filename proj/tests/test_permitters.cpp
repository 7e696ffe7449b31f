#include <doctest.h>

#include "plsim/permitters.hpp"

#include <cmath>
#include <map>

using namespace plsim;

TEST_CASE("single-use budgets consume, multi-use budgets bound per query") {
    // R(p,t)=5; single-use (3),(2) allowed, then (1) rejected.
    CHECK(check_query_budget(5, 0, 3, PermitterMode::SingleUse));
    CHECK(check_query_budget(5, 3, 2, PermitterMode::SingleUse));
    CHECK(!check_query_budget(5, 5, 1, PermitterMode::SingleUse));
    // multi-use (5) three times: all allowed.
    for (int i = 0; i < 3; ++i) CHECK(check_query_budget(5, 0, 5, PermitterMode::MultiUse));
    CHECK(!check_query_budget(5, 0, 6, PermitterMode::MultiUse));
    // b=0 allowed in either mode.
    CHECK(check_query_budget(5, 5, 0, PermitterMode::SingleUse));
    CHECK(check_query_budget(0, 0, 0, PermitterMode::MultiUse));
}

TEST_CASE("rho-bounded allocations") {
    std::vector<bool> byz{true, false, false, false};
    ResourceAllocation even{[](PlayerIdx, Timeslot) -> std::int64_t { return 1; }};
    CHECK(rho_bounded_external({even}, byz, {1, 4}, 8, 10));  // share exactly rho: non-strict
    CHECK(!rho_bounded_external({even}, byz, {1, 5}, 8, 10)); // 1/4 > 1/5
    CHECK(!rho_bounded_external({even}, {false, false, false, false}, {0, 1}, 3, 10)); // total 4 > R_max 3

    ResourceAllocation zero_at_5{[](PlayerIdx, Timeslot t) -> std::int64_t { return t == 5 ? 0 : 1; }};
    CHECK(!rho_bounded_external({zero_at_5}, byz, {1, 2}, 8, 10)); // R(t)=0 at t=5

    // All-honest allocation is 0-bounded.
    CHECK(rho_bounded_external({even}, {false, false, false, false}, {0, 1}, 8, 10));
}

TEST_CASE("pow: fixed response function, b=0 rejected") {
    PowOracle pow;
    auto r1 = pow.respond(PowOracle::make_query(1, Value::atom("s")), 3, 9);
    auto r2 = pow.respond(PowOracle::make_query(1, Value::atom("s")), 3, 9);
    CHECK(message_digest(r1.entries) == message_digest(r2.entries));
    CHECK(pow.respond(PowOracle::make_query(0, Value::atom("s")), 3, 9).entries.empty());
    // Different timeslot: a fresh sample.
    auto r3 = pow.respond(PowOracle::make_query(1, Value::atom("s")), 4, 9);
    CHECK(message_digest(r1.entries) != message_digest(r3.entries));
}

TEST_CASE("pow: leading-zero law matches geometric(1/2) within 3 sigma") {
    PowOracle pow;
    const int n = 10000;
    std::map<int, int> counts;
    for (int i = 0; i < n; ++i) {
        Word256 tau = PowOracle::sample_tau(7, "pow", 1, digest_bytes("q", i), 1);
        counts[tau.leading_zero_bits()]++;
    }
    for (int k = 0; k <= 7; ++k) {
        double p = std::pow(0.5, k + 1);
        double mean = n * p;
        double sigma = std::sqrt(n * p * (1 - p));
        CHECK(std::abs(counts[k] - mean) <= 3 * sigma);
    }
}

TEST_CASE("pow: stochastic dominance of larger b") {
    // P(tau_{b'} <= s) >= P(tau_b <= s): check via leading zeros (more zeros
    // = smaller string) on a Monte Carlo sample.
    const int n = 4000;
    int ge8_b1 = 0, ge8_b4 = 0;
    for (int i = 0; i < n; ++i) {
        if (PowOracle::sample_tau(11, "pow", 1, digest_bytes("d", i), 1).leading_zero_bits() >= 8)
            ++ge8_b1;
        if (PowOracle::sample_tau(11, "pow", 4, digest_bytes("d", i), 1).leading_zero_bits() >= 8)
            ++ge8_b4;
    }
    CHECK(ge8_b4 > ge8_b1);
}

TEST_CASE("posp: per-pair sampling is timeslot independent") {
    PospOracle posp;
    auto q = PospOracle::make_query("id1", Value::atom("y1"));
    auto a = posp.respond(q, 1, 5);
    auto b = posp.respond(q, 99, 5);
    CHECK(message_digest(a.entries) == message_digest(b.entries));
}

TEST_CASE("posp: nonempty fraction and mean proof count") {
    PospOracle posp;
    const int n = 100000;
    int nonempty = 0;
    long long total = 0;
    for (int i = 0; i < n; ++i) {
        auto q = PospOracle::make_query("id" + std::to_string(i), Value::atom("y"));
        auto r = posp.respond(q, 1, 13);
        std::size_t k = PospOracle::proof_count(r.entries);
        if (k > 0) ++nonempty;
        total += static_cast<long long>(k);
    }
    double frac = static_cast<double>(nonempty) / n;
    double mean = static_cast<double>(total) / n;
    CHECK(std::abs(frac - 0.632) <= 0.005);
    CHECK(std::abs(mean - 1.0) <= 0.01);
}
