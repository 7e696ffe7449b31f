#include <doctest.h>

#include "plsim/oracles.hpp"
#include "plsim/permitters.hpp"

using namespace plsim;

namespace {

struct LedgerFixture {
    PermissionLedger ledger;
    IdentifierDirectory dir;

    LedgerFixture() {
        ledger.set_player_count(3);
        // player 0 owns "alice", player 1 owns "bob", player 2 owns "carol".
        dir.owns = [](PlayerIdx p, const Identifier& id) {
            return (p == 0 && id == "alice") || (p == 1 && id == "bob") ||
                   (p == 2 && id == "carol");
        };
    }
};

} // namespace

TEST_CASE("signing with an owned identifier is permitted") {
    LedgerFixture f;
    Message m{signed_entry("alice", Value::atom("hello"))};
    CHECK(is_permitted(m, 0, f.ledger, f.dir));
    CHECK(!is_permitted(m, 1, f.ledger, f.dir)); // forging another's signature
}

TEST_CASE("received signed entries can be relayed") {
    LedgerFixture f;
    Message m{signed_entry("alice", Value::atom("hello"))};
    f.ledger.register_message(1, m);
    CHECK(is_permitted(m, 1, f.ledger, f.dir));
    CHECK(!is_permitted(m, 2, f.ledger, f.dir)); // carol never received it
}

TEST_CASE("nested signed entries require permission too") {
    LedgerFixture f;
    // bob wraps alice's (unreceived) signature inside his own message.
    Message inner{signed_entry("alice", Value::atom("x"))};
    Message m{signed_entry("bob", Value::tuple(inner))};
    CHECK(!is_permitted(m, 1, f.ledger, f.dir));
    f.ledger.register_message(1, inner);
    CHECK(is_permitted(m, 1, f.ledger, f.dir));
}

TEST_CASE("byzantine players pool permissions") {
    LedgerFixture f;
    f.ledger.mark_byzantine(1);
    f.ledger.mark_byzantine(2);
    Message m{signed_entry("alice", Value::atom("hello"))};
    f.ledger.register_message(1, m); // bob (byzantine) receives it
    CHECK(is_permitted(m, 2, f.ledger, f.dir)); // carol (byzantine) may now use it
    CHECK(!f.ledger.has_received(0, entry_digest(m[0])));
}

TEST_CASE("unauthenticated mode permits all signed entries") {
    LedgerFixture f;
    f.ledger.set_authenticated(false);
    Message m{signed_entry("alice", Value::atom("hello"))};
    CHECK(is_permitted(m, 2, f.ledger, f.dir));
}

TEST_CASE("oracle-typed entries are gated on receipt") {
    LedgerFixture f;
    Message m{oracle_entry("vdf", Value::atom("token"))};
    CHECK(!is_permitted(m, 0, f.ledger, f.dir));
    f.ledger.register_message(0, m); // as if delivered in a response
    CHECK(is_permitted(m, 0, f.ledger, f.dir));
}

TEST_CASE("vdf: response (m,k) arrives at t+k") {
    VdfOracle vdf;
    auto q0 = VdfOracle::make_query(Value::atom("m"), 0);
    auto r0 = vdf.respond(q0, 10, 1);
    CHECK(r0.delivered_at == 10);

    auto q5 = VdfOracle::make_query(Value::atom("m"), 5);
    auto r5 = vdf.respond(q5, 10, 1);
    CHECK(r5.delivered_at == 15);
    REQUIRE(r5.entries.size() == 1);
    CHECK(std::get_if<OracleEntry>(&r5.entries[0]) != nullptr);

    // Two queries yield two independent scheduled responses.
    auto ra = vdf.respond(q5, 10, 1);
    auto rb = vdf.respond(q5, 12, 1);
    CHECK(ra.delivered_at == 15);
    CHECK(rb.delivered_at == 17);
}

TEST_CASE("ephemeral keys: future targets sign, past targets return null") {
    EphemeralKeyOracle eph;
    auto live = eph.respond(EphemeralKeyOracle::make_query("alice", Value::atom("m"), 5), 3, 1);
    CHECK(live.delivered_at == 3);
    CHECK(!EphemeralKeyOracle::is_null_response(live.entries));
    CHECK(std::get_if<OracleEntry>(&live.entries[0]) != nullptr);

    auto boundary = eph.respond(EphemeralKeyOracle::make_query("alice", Value::atom("m"), 5), 5, 1);
    CHECK(EphemeralKeyOracle::is_null_response(boundary.entries));

    auto expired = eph.respond(EphemeralKeyOracle::make_query("alice", Value::atom("m"), 2), 5, 1);
    CHECK(EphemeralKeyOracle::is_null_response(expired.entries));
}

TEST_CASE("up-front sampling: responses replay identically") {
    PowOracle pow;
    auto q = PowOracle::make_query(3, Value::atom("sigma"));
    auto a = pow.respond(q, 7, 42);
    auto b = pow.respond(q, 7, 42);
    CHECK(message_digest(a.entries) == message_digest(b.entries));
    // Non-adaptivity: interleaving other queries changes nothing.
    pow.respond(PowOracle::make_query(1, Value::atom("other")), 7, 42);
    auto c = pow.respond(q, 7, 42);
    CHECK(message_digest(a.entries) == message_digest(c.entries));
}

TEST_CASE("time malleability: signature layer yes, vdf and ephemeral no") {
    SignatureLayerOracle sig;
    auto rs = is_time_malleable(sig, 1);
    CHECK(rs.time_malleable);
    CHECK(rs.matches_declaration);

    VdfOracle vdf;
    auto rv = is_time_malleable(vdf, 1);
    CHECK(!rv.time_malleable); // delayed responses
    CHECK(rv.matches_declaration);

    EphemeralKeyOracle eph;
    auto re = is_time_malleable(eph, 1);
    CHECK(!re.time_malleable); // timeslot-dependent responses
    CHECK(re.matches_declaration);

    PowOracle pow;
    auto rp = is_time_malleable(pow, 1);
    CHECK(!rp.time_malleable); // tau keyed on the query timeslot
    CHECK(rp.matches_declaration);

    PospOracle posp;
    auto rq = is_time_malleable(posp, 1);
    CHECK(rq.time_malleable); // per-(id,y) sampling, instantaneous
    CHECK(rq.matches_declaration);
}
