#include "crs/reduction.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace crs {

namespace {

using RowMask = std::uint32_t;

constexpr std::size_t kHardRowLimit = 31;

std::string cell_error(std::size_t line, const std::string& msg) {
    return "decision table line " + std::to_string(line) + ": " + msg;
}

void check_column_rule(const DecisionTable& t, ColumnRule rule) {
    if (rule == ColumnRule::Unchecked)
        return;
    for (std::size_t j = 0; j < t.test_count(); ++j) {
        std::size_t trues = 0;
        for (const auto& row : t.rows)
            trues += row[j] ? 1 : 0;
        const bool ok = rule == ColumnRule::ExactlyThree ? trues == 3 : trues >= 3;
        if (!ok)
            throw ReductionInputError("test '" + t.test_names[j] + "' is true in " + std::to_string(trues) +
                                      " rows (expected " +
                                      (rule == ColumnRule::ExactlyThree ? "exactly 3" : "at least 3") + ")");
    }
}

// Memoized minimum depth over row subsets; optionally rebuilds the tree.
class BdtSearch {
public:
    BdtSearch(const DecisionTable& t, const BdtOptions& options) : t_(t) {
        check_table(t);
        const std::size_t cap = std::min(options.max_rows, kHardRowLimit);
        if (t.row_count() > cap)
            throw SizeError("decision table has " + std::to_string(t.row_count()) + " rows > bound " +
                            std::to_string(cap));
        true_rows_.assign(t.test_count(), 0);
        for (std::size_t r = 0; r < t.row_count(); ++r)
            for (std::size_t j = 0; j < t.test_count(); ++j)
                if (t.rows[r][j])
                    true_rows_[j] |= RowMask{1} << r;
    }

    RowMask all() const { return t_.row_count() == 32 ? ~RowMask{0} : (RowMask{1} << t_.row_count()) - 1; }

    int depth(RowMask rows) {
        if (uniform(rows))
            return 0;
        if (auto it = memo_.find(rows); it != memo_.end())
            return it->second.first;
        int best = -1;
        std::size_t best_test = 0;
        for (std::size_t j = 0; j < t_.test_count(); ++j) {
            const RowMask on = rows & true_rows_[j];
            const RowMask off = rows & ~true_rows_[j];
            if (on == 0 || off == 0)
                continue;
            const int d = 1 + std::max(depth(on), depth(off));
            if (best < 0 || d < best) {
                best = d;
                best_test = j;
            }
        }
        // Distinct rows always leave a splitting test.
        memo_.emplace(rows, std::make_pair(best, best_test));
        return best;
    }

    Bdt tree(RowMask rows) {
        if (uniform(rows))
            return Bdt{0, t_.decisions[static_cast<std::size_t>(std::countr_zero(rows))], {}};
        depth(rows);
        const std::size_t j = memo_.at(rows).second;
        Bdt node{j, {}, {}};
        node.children.push_back(tree(rows & ~true_rows_[j]));
        node.children.push_back(tree(rows & true_rows_[j]));
        return node;
    }

private:
    bool uniform(RowMask rows) const {
        const std::string* first = nullptr;
        for (RowMask m = rows; m; m &= m - 1) {
            const std::string& d = t_.decisions[static_cast<std::size_t>(std::countr_zero(m))];
            if (!first)
                first = &d;
            else if (*first != d)
                return false;
        }
        return true;
    }

    const DecisionTable& t_;
    std::vector<RowMask> true_rows_;
    std::unordered_map<RowMask, std::pair<int, std::size_t>> memo_;
};

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::vector<std::string> split_cells(const std::string& line) {
    std::string norm = line;
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::istringstream ss(norm);
    std::vector<std::string> cells;
    for (std::string c; ss >> c;)
        cells.push_back(c);
    return cells;
}

bool is_bit(const std::string& c) { return c == "0" || c == "1"; }

} // namespace

void check_table(const DecisionTable& t) {
    const std::size_t p = t.test_count();
    if (t.rows.empty())
        throw ReductionInputError("decision table has no rows");
    if (t.decisions.size() != t.rows.size())
        throw ReductionInputError("decision table has " + std::to_string(t.rows.size()) + " rows but " +
                                  std::to_string(t.decisions.size()) + " decisions");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != p)
            throw ReductionInputError("row " + std::to_string(r + 1) + " has " + std::to_string(t.rows[r].size()) +
                                      " cells, expected " + std::to_string(p));
        if (t.decisions[r].empty())
            throw ReductionInputError("row " + std::to_string(r + 1) + " has an empty decision");
    }
    std::set<std::vector<bool>> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (!seen.insert(t.rows[r]).second)
            throw ReductionInputError("row " + std::to_string(r + 1) + " repeats an earlier row");
    std::set<std::string> names(t.test_names.begin(), t.test_names.end());
    if (names.size() != p)
        throw ReductionInputError("test names must be distinct");
}

void check_reduction_instance(const DecisionTable& t, ColumnRule rule) {
    check_table(t);
    std::set<std::string> seen;
    for (const auto& d : t.decisions)
        if (!seen.insert(d).second)
            throw ReductionInputError("decision '" + d + "' labels more than one row");
    check_column_rule(t, rule);
}

Catalog table_to_catalog(const DecisionTable& t, ColumnRule rule) {
    check_reduction_instance(t, rule);
    std::vector<std::vector<std::string>> domains(t.test_count(), std::vector<std::string>{"false", "true"});
    CatalogSchema schema(t.test_names, std::move(domains));
    std::vector<Item> items;
    items.reserve(t.row_count());
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        Item it{t.decisions[r], {}};
        for (bool b : t.rows[r])
            it.values.push_back(b ? 1u : 0u);
        items.push_back(std::move(it));
    }
    return Catalog(std::move(schema), std::move(items));
}

int bdt_min_depth(const DecisionTable& t, const BdtOptions& options) {
    BdtSearch search(t, options);
    return search.depth(search.all());
}

Bdt build_min_bdt(const DecisionTable& t, const BdtOptions& options) {
    BdtSearch search(t, options);
    return search.tree(search.all());
}

ReductionReport check_reduction(const DecisionTable& t, ColumnRule rule, const BdtOptions& options) {
    ReductionReport rep;
    rep.bdt_depth = bdt_min_depth(t, options);
    const Catalog catalog = table_to_catalog(t, rule);
    rep.catalog_depth = build_min_depth(catalog.all_ids(), catalog).depth();
    rep.verified = rep.bdt_depth == rep.catalog_depth;
    return rep;
}

bool verify_reduction(const DecisionTable& t, ColumnRule rule, const BdtOptions& options) {
    return check_reduction(t, rule, options).verified;
}

int Bdt::depth() const {
    int d = 0;
    for (const auto& c : children)
        d = std::max(d, 1 + c.depth());
    return d;
}

std::string bdt_decide(const Bdt& b, const std::vector<bool>& row) {
    const Bdt* node = &b;
    while (!node->is_leaf()) {
        if (node->test >= row.size())
            throw ReductionInputError("BDT tests column " + std::to_string(node->test) + " beyond the row");
        node = &node->children[row[node->test] ? 1 : 0];
    }
    return node->decision;
}

bool bdt_represents(const Bdt& b, const DecisionTable& t) {
    for (std::size_t r = 0; r < t.row_count(); ++r)
        if (bdt_decide(b, t.rows[r]) != t.decisions[r])
            return false;
    return true;
}

Bdt bdt_from_strategy(const DecisionTree& tree, const Catalog& catalog) {
    if (tree.is_leaf())
        return Bdt{0, catalog.item(tree.item).name, {}};
    if (tree.children.size() != 2)
        throw ReductionInputError("slot-filling tree node on a Boolean feature must have two edges");
    Bdt node{tree.slot, {}, {Bdt{}, Bdt{}}};
    for (std::size_t i = 0; i < 2; ++i) {
        const std::string& label = catalog.schema().value_name(tree.slot, tree.labels[i]);
        node.children[label == "true" ? 1 : 0] = bdt_from_strategy(tree.children[i], catalog);
    }
    return node;
}

namespace {

DecisionTree strategy_rec(const Bdt& b, const ItemSet& items, const Catalog& catalog) {
    if (items.empty())
        throw ReductionInputError("BDT reaches no item");
    if (b.is_leaf()) {
        if (items.size() != 1)
            throw ReductionInputError("BDT leaf '" + b.decision + "' is reached by several items");
        if (catalog.item(items.front()).name != b.decision)
            throw ReductionInputError("BDT leaf '" + b.decision + "' does not match item '" +
                                      catalog.item(items.front()).name + "'");
        return DecisionTree::leaf(items.front());
    }
    const ValueId f = catalog.schema().value_id(b.test, "false");
    const ValueId t = catalog.schema().value_id(b.test, "true");
    ItemSet off, on;
    for (ItemId id : items)
        (catalog.value(id, b.test) == t ? on : off).push_back(id);
    if (off.empty())
        return strategy_rec(b.children[1], on, catalog);
    if (on.empty())
        return strategy_rec(b.children[0], off, catalog);
    DecisionTree node;
    node.slot = b.test;
    std::vector<std::pair<ValueId, DecisionTree>> edges;
    edges.emplace_back(f, strategy_rec(b.children[0], off, catalog));
    edges.emplace_back(t, strategy_rec(b.children[1], on, catalog));
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& c) { return a.first < c.first; });
    for (auto& [v, child] : edges) {
        node.labels.push_back(v);
        node.children.push_back(std::move(child));
    }
    return node;
}

} // namespace

DecisionTree strategy_from_bdt(const Bdt& b, const Catalog& catalog) {
    return strategy_rec(b, catalog.all_ids(), catalog);
}

DecisionTable generate_table(const TableGenOptions& options) {
    const std::size_t q = options.objects;
    const std::size_t p = options.tests == 0 ? q : options.tests;
    if (q < 3 && options.rule != ColumnRule::Unchecked)
        throw ReductionInputError("a table with at least-3 columns needs 3 or more objects");
    if (q < 1 || p < 1)
        throw ReductionInputError("a table needs at least one object and one test");
    std::mt19937_64 rng(options.seed);
    DecisionTable t;
    for (std::size_t j = 0; j < p; ++j)
        t.test_names.push_back("t" + std::to_string(j + 1));
    for (std::size_t r = 0; r < q; ++r)
        t.decisions.push_back("o" + std::to_string(r + 1));

    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        t.rows.assign(q, std::vector<bool>(p, false));
        for (std::size_t j = 0; j < p; ++j) {
            std::size_t k;
            switch (options.rule) {
            case ColumnRule::ExactlyThree: k = 3; break;
            case ColumnRule::AtLeastThree: k = q <= 3 ? 3 : 3 + pick(rng, q - 2); break;
            default: k = pick(rng, q + 1); break;
            }
            std::vector<std::size_t> order(q);
            for (std::size_t r = 0; r < q; ++r)
                order[r] = r;
            for (std::size_t r = 0; r < k; ++r) {
                std::swap(order[r], order[r + pick(rng, q - r)]);
                t.rows[order[r]][j] = true;
            }
        }
        std::set<std::vector<bool>> distinct(t.rows.begin(), t.rows.end());
        if (distinct.size() == q)
            return t;
    }
    throw ReductionInputError("no table with distinct rows found for " + std::to_string(q) + " objects and " +
                              std::to_string(p) + " tests");
}

DecisionTable parse_table(std::istream& in) {
    DecisionTable t;
    bool first = true;
    std::size_t width = 0;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const auto start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#')
            continue;
        auto cells = split_cells(line);
        if (cells.size() < 2)
            throw ReductionInputError(cell_error(lineno, "expected at least one test cell and a decision"));
        const std::size_t p = cells.size() - 1;
        if (first) {
            first = false;
            width = p;
            const bool header = !std::all_of(cells.begin(), cells.end() - 1, is_bit);
            if (header) {
                t.test_names.assign(cells.begin(), cells.end() - 1);
                continue;
            }
            for (std::size_t j = 0; j < p; ++j)
                t.test_names.push_back("x" + std::to_string(j + 1));
        }
        if (p != width)
            throw ReductionInputError(
                cell_error(lineno, std::to_string(p) + " test cells, expected " + std::to_string(width)));
        std::vector<bool> row;
        for (std::size_t j = 0; j < p; ++j) {
            if (!is_bit(cells[j]))
                throw ReductionInputError(cell_error(lineno, "cell '" + cells[j] + "' is not 0 or 1"));
            row.push_back(cells[j] == "1");
        }
        t.rows.push_back(std::move(row));
        t.decisions.push_back(cells.back());
    }
    check_table(t);
    return t;
}

DecisionTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ReductionInputError("cannot open decision table '" + path + "'");
    return parse_table(in);
}

void write_table(std::ostream& out, const DecisionTable& t) {
    for (const auto& name : t.test_names)
        out << name << ' ';
    out << "decision\n";
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        for (bool b : t.rows[r])
            out << (b ? '1' : '0') << ' ';
        out << t.decisions[r] << '\n';
    }
}

} // namespace crs
