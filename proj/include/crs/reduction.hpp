#pragma once

// Boolean decision tables, their binary decision trees, and the mapping of a
// table onto a Boolean catalog whose slot-filling strategies are those trees.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crs/dtree.hpp"
#include "crs/model.hpp"

namespace crs {

struct DecisionTable {
    std::vector<std::vector<bool>> rows;
    std::vector<std::string> decisions;
    std::vector<std::string> test_names;

    std::size_t row_count() const noexcept { return rows.size(); }
    std::size_t test_count() const noexcept { return test_names.size(); }
    bool operator==(const DecisionTable&) const = default;
};

enum class ColumnRule { ExactlyThree, AtLeastThree, Unchecked };

// Shape checks shared by every operation: rectangular, distinct rows,
// q <= 2^p, non-empty labels. Throws ReductionInputError.
void check_table(const DecisionTable& t);
// Adds the strict-instance checks: distinct decisions and the column rule.
void check_reduction_instance(const DecisionTable& t, ColumnRule rule = ColumnRule::ExactlyThree);

// Features get the test names and the domain [false, true]; items are named
// after the decisions.
Catalog table_to_catalog(const DecisionTable& t, ColumnRule rule = ColumnRule::ExactlyThree);

struct BdtOptions {
    std::size_t max_rows = 16;
};

int bdt_min_depth(const DecisionTable& t, const BdtOptions& options = {});

struct ReductionReport {
    int bdt_depth = 0;
    int catalog_depth = 0;
    bool verified = false;
};

ReductionReport check_reduction(const DecisionTable& t, ColumnRule rule = ColumnRule::ExactlyThree,
                                const BdtOptions& options = {});
bool verify_reduction(const DecisionTable& t, ColumnRule rule = ColumnRule::ExactlyThree,
                      const BdtOptions& options = {});

/// Binary decision tree over the table's tests. Internal nodes have
/// children {on false, on true}; leaves carry a decision.
struct Bdt {
    std::size_t test = 0;
    std::string decision;
    std::vector<Bdt> children;

    bool is_leaf() const noexcept { return children.empty(); }
    int depth() const;
    bool operator==(const Bdt&) const = default;
};

// A minimum-depth BDT found by the same search as bdt_min_depth.
Bdt build_min_bdt(const DecisionTable& t, const BdtOptions& options = {});
std::string bdt_decide(const Bdt& b, const std::vector<bool>& row);
// True when the tree yields the row's decision for every row of the table.
bool bdt_represents(const Bdt& b, const DecisionTable& t);

// Relabels a slot-filling tree over table_to_catalog(t) as a BDT.
Bdt bdt_from_strategy(const DecisionTree& tree, const Catalog& catalog);
// Relabels a BDT as a slot-filling tree over the catalog. Tests that do not
// split the items reaching them are skipped.
DecisionTree strategy_from_bdt(const Bdt& b, const Catalog& catalog);

struct TableGenOptions {
    std::size_t objects = 8;
    std::size_t tests = 0; // 0 picks objects tests
    ColumnRule rule = ColumnRule::ExactlyThree;
    std::uint64_t seed = 1;
    int max_attempts = 10000;
};

DecisionTable generate_table(const TableGenOptions& options);

// Text format: one row per line, 0/1 cells separated by whitespace or
// commas, decision label last. '#' starts a comment line. A first row whose
// cells are not all 0/1 is read as a header of test names.
DecisionTable parse_table(std::istream& in);
DecisionTable load_table(const std::string& path);
void write_table(std::ostream& out, const DecisionTable& t);

} // namespace crs
