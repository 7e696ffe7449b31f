#include <doctest.h>

#include "plsim/transactions.hpp"

#include <algorithm>
#include <random>

using namespace plsim;

namespace {

StakeState three_a() { return StakeState{{{"a", 3}}}; }

UtxoRef genesis_ref(const StakeState& s, const Identifier& id) {
    for (const auto& [ref, out] : s.genesis_utxos())
        if (out.owner == id) return ref;
    throw std::runtime_error("no genesis utxo for " + id);
}

// The circular-transfer construction: n players with one unit each, n rounds
// of transfers p_i -> p_{i+1 mod n}. tx(i, r) spends the coin p_i received in
// round r-1 (or its genesis coin when r = 1).
struct Circle {
    StakeState s0;
    std::vector<std::vector<TransactionPtr>> tx; // tx[i][r-1]
    TxSet all;

    static std::string pname(int i) { return "p" + std::to_string(i); }

    explicit Circle(int n) {
        std::map<Identifier, Stake> init;
        for (int i = 0; i < n; ++i) init[pname(i)] = 1;
        s0 = StakeState{init};
        tx.resize(n);
        for (int r = 1; r <= n; ++r) {
            for (int i = 0; i < n; ++i) {
                UtxoRef input;
                if (r == 1) {
                    input = genesis_ref(s0, pname(i));
                } else {
                    int prev = (i - 1 + n) % n;
                    input = UtxoRef{tx[prev][r - 2]->tx_id, 0};
                }
                auto t = make_tx("c" + std::to_string(i) + "r" + std::to_string(r), {input},
                                 {TxOutput{pname((i + 1) % n), 1}});
                tx[i].push_back(t);
                all.insert(t);
            }
        }
    }

    // First i transfers of each p_i: the adversarial maximal subset.
    TxSet adversarial_subset() const {
        TxSet t_prime;
        int n = static_cast<int>(tx.size());
        for (int i = 0; i < n; ++i)
            for (int r = 1; r <= i; ++r) t_prime.insert(tx[i][r - 1]);
        return t_prime;
    }

    // Transactions received by honest players when each p_i's transfers go
    // only to p_i and p_0 is Byzantine.
    TxSet honest_received() const {
        TxSet u;
        int n = static_cast<int>(tx.size());
        for (int i = 1; i < n; ++i)
            for (const auto& t : tx[i]) u.insert(t);
        return u;
    }
};

} // namespace

TEST_CASE("empty set is valid and preserves initial stake") {
    auto s = three_a();
    CHECK(is_valid_set(TxSet{}, s));
    CHECK(stake(s, TxSet{}, "a") == 3);
    CHECK(stake(s, TxSet{}, "nobody") == 0);
}

TEST_CASE("two spends of one utxo conflict") {
    auto s = three_a();
    auto g = genesis_ref(s, "a");
    auto t1 = make_tx("t1", {g}, {TxOutput{"b", 3}});
    auto t2 = make_tx("t2", {g}, {TxOutput{"c", 3}});
    CHECK(!is_valid_set(TxSet{t1, t2}, s));
    CHECK(conflicting(t1, t2, TxSet{}, s));

    auto s2 = StakeState{{{"a", 3}, {"d", 2}}};
    auto td = make_tx("td", {genesis_ref(s2, "d")}, {TxOutput{"e", 2}});
    auto ta = make_tx("ta", {genesis_ref(s2, "a")}, {TxOutput{"e", 3}});
    CHECK(!conflicting(td, ta, TxSet{}, s2)); // disjoint inputs
}

TEST_CASE("chained transfers evaluate by provenance order") {
    auto s = three_a();
    auto t1 = make_tx("t1", {genesis_ref(s, "a")}, {TxOutput{"b", 3}});
    auto t2 = make_tx("t2", {UtxoRef{"t1", 0}}, {TxOutput{"c", 3}});
    auto t3 = make_tx("t3", {UtxoRef{"t2", 0}}, {TxOutput{"d", 3}});
    TxSet chain{t3, t1, t2};
    CHECK(is_valid_set(chain, s));
    CHECK(stake(s, chain, "d") == 3);
    CHECK(stake(s, chain, "a") == 0);
    CHECK(stake(s, chain, "b") == 0);
}

TEST_CASE("cyclic provenance is invalid") {
    auto s = three_a();
    auto t1 = make_tx("t1", {UtxoRef{"t2", 0}}, {TxOutput{"a", 1}});
    auto t2 = make_tx("t2", {UtxoRef{"t1", 0}}, {TxOutput{"a", 1}});
    CHECK(!is_valid_set(TxSet{t1, t2}, s));
}

TEST_CASE("value creation is invalid") {
    auto s = three_a();
    auto t = make_tx("t", {genesis_ref(s, "a")}, {TxOutput{"b", 4}});
    CHECK(!is_valid_set(TxSet{t}, s));
}

TEST_CASE("full transfer moves everything") {
    auto s = three_a();
    auto t = transfer_tx(s, TxSet{}, "a", "b", 3, "t");
    TxSet set{t};
    CHECK(is_valid_set(set, s));
    CHECK(stake(s, set, "a") == 0);
    CHECK(stake(s, set, "b") == 3);
}

TEST_CASE("partial transfer leaves change") {
    auto s = StakeState{{{"a", 5}}};
    auto t = transfer_tx(s, TxSet{}, "a", "b", 1, "t");
    TxSet set{t};
    CHECK(stake(s, set, "a") == 4);
    CHECK(stake(s, set, "b") == 1);
}

TEST_CASE("transfer beyond balance is rejected") {
    auto s = three_a();
    CHECK_THROWS(transfer_tx(s, TxSet{}, "a", "b", 4, "t"));
}

TEST_CASE("transfer round-trip restores balances") {
    auto s = StakeState{{{"a", 5}, {"b", 2}}};
    auto fwd = transfer_tx(s, TxSet{}, "a", "b", 2, "fwd");
    auto back = transfer_tx(s, TxSet{fwd}, "b", "a", 2, "back");
    TxSet set{fwd, back};
    CHECK(stake(s, set, "a") == 5);
    CHECK(stake(s, set, "b") == 2);
}

TEST_CASE("stake is independent of evaluation order") {
    Circle c(4);
    std::vector<TransactionPtr> txs = c.all.items();
    std::mt19937 rng(7);
    for (int round = 0; round < 10; ++round) {
        std::shuffle(txs.begin(), txs.end(), rng);
        TxSet permuted;
        for (const auto& t : txs) permuted.insert(t);
        for (int i = 0; i < 4; ++i) CHECK(stake(c.s0, permuted, Circle::pname(i)) == 1);
    }
}

TEST_CASE("conservation holds for every valid subset of the circle") {
    Circle c(3);
    auto result = maximal_valid_sets(c.all, c.s0);
    REQUIRE(!result.refused);
    for (const auto& set : result.sets) {
        auto table = stake_table(c.s0, set);
        Stake total = 0;
        for (const auto& [id, v] : table) total += v;
        CHECK(total == c.s0.total());
    }
}

TEST_CASE("monotone conflict") {
    auto s = StakeState{{{"a", 2}, {"b", 1}}};
    auto g = genesis_ref(s, "a");
    auto t1 = make_tx("t1", {g}, {TxOutput{"b", 2}});
    auto t2 = make_tx("t2", {g}, {TxOutput{"c", 2}});
    auto t3 = make_tx("t3", {genesis_ref(s, "b")}, {TxOutput{"a", 1}});
    // T = {t1} conflicts with t2; extending T keeps the conflict.
    CHECK(!is_valid_set(TxSet{t1, t2}, s));
    CHECK(is_valid_set(TxSet{t1, t3}, s));
    CHECK(!is_valid_set(TxSet{t1, t3, t2}, s));
}

TEST_CASE("maximal valid sets: base cases") {
    auto s = three_a();
    auto empty = maximal_valid_sets(TxSet{}, s);
    REQUIRE(!empty.refused);
    REQUIRE(empty.sets.size() == 1);
    CHECK(empty.sets[0].empty());

    auto g = genesis_ref(s, "a");
    auto t1 = make_tx("t1", {g}, {TxOutput{"b", 3}});
    auto t2 = make_tx("t2", {g}, {TxOutput{"c", 3}});
    auto two = maximal_valid_sets(TxSet{t1, t2}, s);
    REQUIRE(!two.refused);
    CHECK(two.sets.size() == 2);
    for (const auto& set : two.sets) CHECK(set.size() == 1);
}

TEST_CASE("maximal valid sets: cap refusal") {
    auto s = StakeState{{{"a", 30}}};
    TxSet big;
    // 21 conflicting spends of the same utxo.
    auto g = genesis_ref(s, "a");
    for (int i = 0; i < 21; ++i)
        big.insert(make_tx("t" + std::to_string(i), {g}, {TxOutput{"b", 1}}));
    CHECK(maximal_valid_sets(big, s).refused);
    CHECK(!maximal_valid_sets(big, s, 25).refused);
}

TEST_CASE("payment circle: adversarial subset is the unique maximal set of honest-received txs") {
    for (int n = 2; n <= 4; ++n) {
        CAPTURE(n);
        Circle c(n);
        TxSet t_prime = c.adversarial_subset();
        CHECK(is_valid_set(t_prime, c.s0));
        CHECK(stake(c.s0, t_prime, Circle::pname(0)) == n);
        for (int i = 1; i < n; ++i) CHECK(stake(c.s0, t_prime, Circle::pname(i)) == 0);

        auto maximal = maximal_valid_sets(c.honest_received(), c.s0, 40);
        REQUIRE(!maximal.refused);
        REQUIRE(maximal.sets.size() == 1);
        CHECK(maximal.sets[0] == t_prime);
    }
}

TEST_CASE("payment circle: full set is benign") {
    Circle c(4);
    CHECK(is_valid_set(c.all, c.s0));
    // Every full-round prefix leaves all balances at 1.
    for (int r = 1; r <= 4; ++r) {
        TxSet prefix;
        for (int i = 0; i < 4; ++i)
            for (int rr = 1; rr <= r; ++rr) prefix.insert(c.tx[i][rr - 1]);
        for (int i = 0; i < 4; ++i) CHECK(stake(c.s0, prefix, Circle::pname(i)) == 1);
    }
}

TEST_CASE("required set is the provenance closure") {
    Circle c(4);
    // p3's 3rd transfer requires p2's 2nd, which requires p1's 1st.
    auto req = required_set(c.tx[3][2], c.all);
    REQUIRE(req.has_value());
    CHECK(req->size() == 2);
    CHECK(req->contains(c.tx[2][1]));
    CHECK(req->contains(c.tx[1][0]));

    // Unknown creator: closure undefined.
    TxSet small{c.tx[3][2]};
    CHECK(!required_set(c.tx[3][2], small).has_value());
}
