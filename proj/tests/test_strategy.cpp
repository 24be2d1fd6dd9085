#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crs/fixtures.hpp"
#include "crs/strategy.hpp"
#include "support.hpp"

using namespace crs;
using crs::testing::cold_user;
using crs::testing::GameOracle;
using crs::testing::TestRng;

TEST_CASE("protocol names") {
    CHECK(parse_protocol("p1") == Protocol::P1);
    CHECK(parse_protocol("P2") == Protocol::P2);
    CHECK(to_string(Protocol::P2) == "P2");
    CHECK_THROWS_AS(parse_protocol("p3"), DomainError);
}

TEST_CASE("trivial bounds") {
    const Catalog c = movie_catalog();
    for (Protocol p : {Protocol::P1, Protocol::P2}) {
        CHECK_FALSE(explore_strategies(c, cold_user(c), 0, p));
        CHECK_FALSE(explore_strategies(c, cold_user(c), -3, p));
        CHECK(explore_strategies(c, cold_user(c), 3, p));
    }
}

TEST_CASE("singleton catalog needs one interaction") {
    const Catalog c = Catalog::from_rows({"a"}, {{"only", {"x"}}});
    CHECK(min_interactions(c, cold_user(c), Protocol::P1) == 1);
    CHECK(min_interactions(c, cold_user(c), Protocol::P2) == 1);
}

TEST_CASE("movie catalog bounds") {
    const Catalog c = movie_catalog();
    // Two questions identify any movie, and its proposal is the third step.
    const int m = min_interactions(c, cold_user(c), Protocol::P1);
    CHECK(m == GameOracle(c, Protocol::P1).min_bound(GameOracle(c, Protocol::P1).cold()));
    CHECK(m <= 3);
}

TEST_CASE("a proposal matching a unique answer cannot be rejected") {
    // One feature, every value unique: after the fill only the ideal can
    // carry the answer, so the proposal is accepted.
    const Catalog c = Catalog::from_rows(
        {"a"}, {{"i0", {"v0"}}, {"i1", {"v1"}}, {"i2", {"v2"}}, {"i3", {"v3"}}, {"i4", {"v4"}}});
    for (Protocol p : {Protocol::P1, Protocol::P2}) {
        CHECK_FALSE(explore_strategies(c, cold_user(c), 1, p, ExploreOptions{{8, 5, 8}, true}));
        CHECK(min_interactions(c, cold_user(c), p, ExploreOptions{{8, 5, 8}, true}) == 2);
    }
    // A shared value leaves room to reject: (x,0) can be refused while
    // (x,1) and (y,0) witness the answers.
    const Catalog d = Catalog::from_rows({"f", "g"}, {{"a", {"x", "0"}}, {"b", {"x", "1"}}, {"c", {"y", "0"}}});
    GameOracle g(d, Protocol::P1);
    auto st = g.cold();
    st.q = {0, 0};
    st.n = {0};
    CHECK(g.consistent(st));
    st.n = {0, 1};
    CHECK_FALSE(g.consistent(st));
}

TEST_CASE("no recommendable item left") {
    const Catalog c = movie_catalog();
    UserModel u = cold_user(c);
    u.disliked_items = {0, 1, 2};
    CHECK_THROWS_AS(min_interactions(c, u, Protocol::P1), DomainError);
}

TEST_CASE("budget limits") {
    TestRng rng(1);
    const Catalog big = crs::testing::random_catalog(rng, 13, 3, 4);
    CHECK_THROWS_AS(StrategyExplorer(big, Protocol::P1), SizeError);
    CHECK_NOTHROW(StrategyExplorer(big, Protocol::P1, ExploreOptions{StrategyBudget{13, 5, 4}, true}));
    const Catalog wide = crs::testing::random_catalog(rng, 4, 6, 2);
    CHECK_THROWS_AS(StrategyExplorer(wide, Protocol::P2), SizeError);
    const Catalog deep = Catalog::from_rows({"a"}, {{"1", {"a"}}, {"2", {"b"}}, {"3", {"c"}}, {"4", {"d"}}, {"5", {"e"}}});
    CHECK_THROWS_AS(StrategyExplorer(deep, Protocol::P2), SizeError);
}

TEST_CASE("explorer matches the set-based game oracle") {
    TestRng rng(21);
    for (int i = 0; i < 40; ++i) {
        const Catalog c = crs::testing::random_small_catalog(rng, 6, 3, 3);
        for (Protocol p : {Protocol::P1, Protocol::P2}) {
            GameOracle oracle(c, p);
            StrategyExplorer ex(c, p);
            const int n = static_cast<int>(c.size());
            for (int m = 0; m <= n; ++m)
                CHECK(ex.explore(cold_user(c), m) == oracle.wins(oracle.cold(), m));
        }
    }
}

TEST_CASE("explorer matches the oracle from a mid-conversation state") {
    TestRng rng(8);
    for (int i = 0; i < 25; ++i) {
        const Catalog c = crs::testing::random_small_catalog(rng, 6, 3, 3, 3);
        UserModel u = cold_user(c);
        GameOracle oracle(c, Protocol::P2);
        auto st = oracle.cold();
        const ValueId v = c.value(0, 0);
        u.query.terms[0] = Term::value(v);
        st.q[0] = v;
        u.disliked_items.insert(0);
        st.n.insert(0);
        for (int m = 0; m <= static_cast<int>(c.size()); ++m)
            CHECK(explore_strategies(c, u, m, Protocol::P2) == oracle.wins(st, m));
    }
}

TEST_CASE("memoization does not change answers") {
    TestRng rng(4);
    for (int i = 0; i < 20; ++i) {
        const Catalog c = crs::testing::random_small_catalog(rng, 6, 3, 3);
        for (Protocol p : {Protocol::P1, Protocol::P2}) {
            StrategyExplorer memo(c, p);
            StrategyExplorer plain(c, p, ExploreOptions{StrategyBudget{}, false});
            for (int m = 0; m <= static_cast<int>(c.size()); ++m)
                CHECK(memo.explore(cold_user(c), m) == plain.explore(cold_user(c), m));
            CHECK(plain.stats().memo_entries == 0);
        }
    }
}

TEST_CASE("monotone in the bound; P2 never needs more than P1") {
    TestRng rng(31);
    for (int i = 0; i < 50; ++i) {
        const Catalog c = crs::testing::random_small_catalog(rng, 5, 3, 3);
        const int m1 = min_interactions(c, cold_user(c), Protocol::P1);
        const int m2 = min_interactions(c, cold_user(c), Protocol::P2);
        CHECK(m2 <= m1);
        StrategyExplorer ex(c, Protocol::P1);
        bool seen_true = false;
        for (int m = 0; m <= static_cast<int>(c.size()); ++m) {
            const bool r = ex.explore(cold_user(c), m);
            CHECK((!seen_true || r));
            seen_true = seen_true || r;
        }
        CHECK(seen_true);
    }
}

TEST_CASE("replay reports the failing step") {
    const Catalog c = movie_catalog();
    InteractionSequence seq{Query::all_variables(3), {SlotFill{0, 0}, SlotFill{0, 1}, AcceptItem{0}}};
    try {
        replay(seq, c);
        FAIL("expected ReplayError");
    } catch (const ReplayError& e) {
        CHECK(e.index() == 1);
    }
    InteractionSequence short_query{Query::all_variables(2), {}};
    CHECK_THROWS_AS(replay(short_query, c), ReplayError);
}

TEST_CASE("compression keeps surviving fills only") {
    const Catalog c = movie_catalog();
    // fill director=Spielberg, propose, reject Forrest Gump, change director,
    // unfill it, fill genre=action, fill starring=Dreyfuss, accept Jaws.
    InteractionSequence seq{Query::all_variables(3),
                            {SlotFill{0, 0}, RejectItems{{0}}, SlotChange{0, 1}, SlotUnfill{0}, SlotFill{2, 1},
                             SlotFill{1, 1}, AcceptItem{1}}};
    const InteractionSequence out = compress_to_slot_filling(seq, c);
    CHECK(is_fill_only(out));
    CHECK(out.steps.size() == 3);
    CHECK(std::get<SlotFill>(out.steps[0]).slot == 2);
    CHECK(std::get<SlotFill>(out.steps[1]).slot == 1);
    CHECK(std::get<AcceptItem>(out.steps[2]).item == 1);
    CHECK(replay(out, c).accepted);
}

TEST_CASE("compression of initial values that change") {
    const Catalog c = movie_catalog();
    Query q0 = Query::all_variables(3);
    q0.terms[0] = Term::value(1); // Eastwood
    InteractionSequence seq{q0, {SlotChange{0, 0}, SlotFill{1, 0}, AcceptItem{0}}};
    const InteractionSequence out = compress_to_slot_filling(seq, c);
    CHECK(out.initial_query[0].is_variable());
    CHECK(out.steps.size() == 3);
    CHECK(replay(out, c).recommended == ItemSet{0});
}

TEST_CASE("fill-only input is returned unchanged") {
    const Catalog c = movie_catalog();
    InteractionSequence seq{Query::all_variables(3), {SlotFill{0, 1}, AcceptItem{2}}};
    const InteractionSequence out = compress_to_slot_filling(seq, c);
    CHECK(out.initial_query == seq.initial_query);
    CHECK(out.steps.size() == 2);
    CHECK(is_fill_only(out));
}

TEST_CASE("compression needs an accepted conversation") {
    const Catalog c = movie_catalog();
    InteractionSequence open{Query::all_variables(3), {SlotFill{0, 1}}};
    CHECK_THROWS_AS(compress_to_slot_filling(open, c), ContractError);
}

TEST_CASE("random conversations compress to valid fill-only ones") {
    TestRng rng(17);
    for (int i = 0; i < 60; ++i) {
        const Catalog c = crs::testing::random_small_catalog(rng, 8, 4, 4, 2);
        const auto target = static_cast<ItemId>(rng() % c.size());
        const auto seq = crs::testing::random_conversation(rng, c, target, 4 + rng() % 12);
        const auto out = compress_to_slot_filling(seq, c);
        CHECK(is_fill_only(out));
        CHECK(interaction_count(out) <= interaction_count(seq));
        const auto st = replay(out, c);
        CHECK(st.accepted);
        CHECK(st.recommended == ItemSet{target});
    }
}
