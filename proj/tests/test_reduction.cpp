#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "crs/fixtures.hpp"
#include "crs/reduction.hpp"
#include "support.hpp"

using namespace crs;

namespace {

// Plain recursion over row subsets, no memo: the depth needed to decide.
int brute_bdt(const DecisionTable& t, const std::vector<std::size_t>& rows) {
    bool same = true;
    for (std::size_t r : rows)
        same = same && t.decisions[r] == t.decisions[rows.front()];
    if (same)
        return 0;
    int best = 1 << 20;
    for (std::size_t j = 0; j < t.test_count(); ++j) {
        std::vector<std::size_t> on, off;
        for (std::size_t r : rows)
            (t.rows[r][j] ? on : off).push_back(r);
        if (on.empty() || off.empty())
            continue;
        best = std::min(best, 1 + std::max(brute_bdt(t, on), brute_bdt(t, off)));
    }
    return best;
}

int brute_bdt(const DecisionTable& t) {
    std::vector<std::size_t> rows(t.row_count());
    for (std::size_t r = 0; r < rows.size(); ++r)
        rows[r] = r;
    return brute_bdt(t, rows);
}

} // namespace

TEST_CASE("example table has depth 3") {
    CHECK(bdt_min_depth(example_table()) == 3);
    CHECK(brute_bdt(example_table()) == 3);
    const Bdt b = build_min_bdt(example_table());
    CHECK(b.depth() == 3);
    CHECK(bdt_represents(b, example_table()));
}

TEST_CASE("tiny tables") {
    CHECK(bdt_min_depth(DecisionTable{{{true, false}}, {"d"}, {"a", "b"}}) == 0);
    CHECK(bdt_min_depth(DecisionTable{{{true, false}, {true, true}}, {"d", "e"}, {"a", "b"}}) == 1);
    CHECK(bdt_min_depth(DecisionTable{{{true, false}, {true, true}}, {"d", "d"}, {"a", "b"}}) == 0);
}

TEST_CASE("table shape checks") {
    CHECK_THROWS_AS(check_table(DecisionTable{{}, {}, {"a"}}), ReductionInputError);
    CHECK_THROWS_AS(check_table(DecisionTable{{{true}, {true}}, {"x", "y"}, {"a"}}), ReductionInputError);
    CHECK_THROWS_AS(check_table(DecisionTable{{{true, false}}, {"x"}, {"a"}}), ReductionInputError);
    CHECK_THROWS_AS(check_table(DecisionTable{{{true}}, {""}, {"a"}}), ReductionInputError);
    CHECK_THROWS_AS(check_table(DecisionTable{{{true}}, {"x", "y"}, {"a"}}), ReductionInputError);
}

TEST_CASE("row bound") {
    crs::testing::TestRng rng(2);
    DecisionTable t;
    t.test_names = {"a", "b", "c", "d", "e"};
    for (int r = 0; r < 17; ++r) {
        t.rows.push_back({bool(r & 1), bool(r & 2), bool(r & 4), bool(r & 8), bool(r & 16)});
        t.decisions.push_back("d" + std::to_string(r));
    }
    CHECK_THROWS_AS(bdt_min_depth(t), SizeError);
    CHECK(bdt_min_depth(t, BdtOptions{17}) == 5);
}

TEST_CASE("table to catalog copies columns") {
    // T1 true on O1..O3, T2 true on O2..O4.
    DecisionTable t{{{true, false}, {true, true}, {true, true}, {false, true}}, {"O1", "O2", "O3", "O4"}, {"T1", "T2"}};
    // Rows O2 and O3 coincide, so the items would be indistinguishable.
    CHECK_THROWS_AS(table_to_catalog(t, ColumnRule::ExactlyThree), ReductionInputError);
    CHECK_THROWS_AS(table_to_catalog(t, ColumnRule::Unchecked), ReductionInputError);

    DecisionTable ok{{{true, false}, {true, true}, {false, true}, {false, false}}, {"O1", "O2", "O3", "O4"},
                     {"T1", "T2"}};
    const Catalog c = table_to_catalog(ok, ColumnRule::Unchecked);
    CHECK(c.size() == 4);
    CHECK(c.feature_count() == 2);
    CHECK(c.schema().feature_name(1) == "T2");
    CHECK(c.schema().domain(0) == std::vector<std::string>{"false", "true"});
    CHECK(c.value_name(c.item_id("O2"), 1) == "true");
    CHECK(c.value_name(c.item_id("O4"), 0) == "false");
    CHECK_THROWS_AS(table_to_catalog(ok, ColumnRule::ExactlyThree), ReductionInputError);
}

TEST_CASE("strict mode needs distinct decisions and exact-3 columns") {
    CHECK_THROWS_AS(table_to_catalog(example_table(), ColumnRule::Unchecked), ReductionInputError);
    const Catalog c = table_to_catalog(example_table_distinct(), ColumnRule::Unchecked);
    CHECK(c.size() == 8);
    CHECK(c.feature_count() == 3);
    // Columns of the example are true in four rows each.
    CHECK_THROWS_AS(table_to_catalog(example_table_distinct(), ColumnRule::ExactlyThree), ReductionInputError);
    CHECK_NOTHROW(table_to_catalog(example_table_distinct(), ColumnRule::AtLeastThree));

    DecisionTable empty_column{{{false, true}, {false, false}, {true, true}}, {"a", "b", "c"}, {"x", "y"}};
    CHECK_THROWS_AS(table_to_catalog(empty_column, ColumnRule::ExactlyThree), ReductionInputError);
}

TEST_CASE("example reduction verifies with depth 3 on both sides") {
    const ReductionReport r = check_reduction(example_table_distinct(), ColumnRule::Unchecked);
    CHECK(r.bdt_depth == 3);
    CHECK(r.catalog_depth == 3);
    CHECK(r.verified);
}

TEST_CASE("generated exact-3 tables") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const std::size_t q = 6 + seed % 4;
        const DecisionTable t = generate_table(TableGenOptions{q, 0, ColumnRule::ExactlyThree, seed, 10000});
        CHECK(t.row_count() == q);
        CHECK_NOTHROW(check_reduction_instance(t, ColumnRule::ExactlyThree));
        const int d = bdt_min_depth(t);
        CHECK(d == brute_bdt(t));
        CHECK(d <= static_cast<int>(t.test_count()));
        CHECK(d >= static_cast<int>(std::ceil(std::log2(static_cast<double>(q)))));
        CHECK(verify_reduction(t));
        CHECK(generate_table(TableGenOptions{q, 0, ColumnRule::ExactlyThree, seed, 10000}) == t);
    }
    const DecisionTable loose = generate_table(TableGenOptions{8, 6, ColumnRule::AtLeastThree, 3, 10000});
    CHECK_NOTHROW(check_reduction_instance(loose, ColumnRule::AtLeastThree));
    CHECK_THROWS_AS(generate_table(TableGenOptions{2, 0, ColumnRule::ExactlyThree, 1, 10}), ReductionInputError);
}

TEST_CASE("tree converters in both directions") {
    const DecisionTable t = example_table_distinct();
    const Catalog c = table_to_catalog(t, ColumnRule::Unchecked);
    const DecisionTree tree = build_min_depth(c.all_ids(), c);
    const Bdt b = bdt_from_strategy(tree, c);
    CHECK(b.depth() == tree.depth());
    CHECK(bdt_represents(b, t));

    const Bdt direct = build_min_bdt(t);
    const DecisionTree back = strategy_from_bdt(direct, c);
    CHECK(validate_tree(back, c.all_ids(), c).empty());
    CHECK(back.depth() == direct.depth());
}

TEST_CASE("BDT with a useless test converts to a shorter strategy") {
    DecisionTable t{{{false, false}, {false, true}}, {"a", "b"}, {"x", "y"}};
    const Catalog c = table_to_catalog(t, ColumnRule::Unchecked);
    Bdt leaf_a{0, "a", {}}, leaf_b{0, "b", {}};
    Bdt inner{1, {}, {leaf_a, leaf_b}};
    Bdt useless{0, {}, {inner, inner}};
    const DecisionTree s = strategy_from_bdt(useless, c);
    CHECK(s.depth() == 1);
    CHECK(validate_tree(s, c.all_ids(), c).empty());
}

TEST_CASE("text format") {
    std::istringstream in("# example\nx1 x2 decision\n0 0 d1\n0,1,d2\n\n1 0 d3\n");
    const DecisionTable t = parse_table(in);
    CHECK(t.test_names == std::vector<std::string>{"x1", "x2"});
    CHECK(t.row_count() == 3);
    CHECK(t.rows[1] == std::vector<bool>{false, true});
    CHECK(t.decisions[2] == "d3");

    std::ostringstream out;
    write_table(out, example_table());
    std::istringstream again(out.str());
    CHECK(parse_table(again) == example_table());

    std::istringstream headerless("1 0 a\n0 1 b\n");
    CHECK(parse_table(headerless).test_names == std::vector<std::string>{"x1", "x2"});

    std::istringstream ragged("0 1 a\n1 b\n");
    try {
        parse_table(ragged);
        FAIL("expected ReductionInputError");
    } catch (const ReductionInputError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::istringstream bad_cell("0 1 a\n0 2 b\n");
    CHECK_THROWS_AS(parse_table(bad_cell), ReductionInputError);
    CHECK_THROWS_AS(load_table("/nonexistent/table.txt"), ReductionInputError);
}
